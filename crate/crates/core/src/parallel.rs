//! Batch evaluation with an optional rayon backend.
//!
//! Output order always matches input order, so callers see identical results
//! whichever backend ran and however many workers it used.

/// True when the crate was built with the `parallel` feature.
pub const AVAILABLE: bool = cfg!(feature = "parallel");

/// Maps `f` over `items`, on the rayon pool when `parallel` is set and the
/// feature is enabled, sequentially otherwise.
#[cfg(feature = "parallel")]
pub fn map_slice<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    if parallel && items.len() > 1 {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Sequential fallback of [`map_slice`].
#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, R, F>(items: &[T], _parallel: bool, f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_both_modes() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = map_slice(&items, false, |x| x * x);
        let par = map_slice(&items, true, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 999 * 999);
    }
}
