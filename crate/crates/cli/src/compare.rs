//! Multi-config, multi-seed comparison of optimizer settings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use swarm_tuner_core::swarm::{Optimizer, SwarmConfig};
use swarm_tuner_core::{parallel, HyperParams, RadioMap, Scenario};

use crate::error::CliError;

pub const COMPARE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub name: String,
    pub hyper: HyperParams,
    /// One value per seed, in seed order.
    pub min_sum_rates: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub config: String,
    pub over: String,
    /// `None` when the reference mean is zero and the means differ.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema: u32,
    pub map_seed: Option<u64>,
    pub p_iter: usize,
    pub seeds: Vec<u64>,
    pub configs: Vec<ConfigSummary>,
    pub gains: Vec<Gain>,
}

/// `(a - b) / |b|` in percent; zero for equal means. Using `|b|` keeps
/// `gain(a, b)` and `gain(b, a)` of opposite sign.
pub fn relative_gain(a: f64, b: f64) -> Option<f64> {
    if a == b {
        Some(0.0)
    } else if b == 0.0 {
        None
    } else {
        Some((a - b) / b.abs() * 100.0)
    }
}

pub fn compare(
    scenario: &Scenario,
    map: &RadioMap,
    configs: &[(String, HyperParams)],
    seeds: &[u64],
    p_iter: usize,
    parallel: bool,
) -> Result<CompareReport, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Validation("need ≥ 2 configs".into()));
    }
    if seeds.is_empty() {
        return Err(CliError::Validation("need at least one seed".into()));
    }
    for (name, h) in configs {
        h.validate()
            .map_err(|e| CliError::Validation(format!("config {name}: {e}")))?;
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    // Each job runs single-threaded; the jobs themselves spread over workers.
    let inner = Optimizer::new(scenario, map).with_config(SwarmConfig {
        parallel: !parallel,
        ..SwarmConfig::default()
    });
    let results = parallel::map_slice(&jobs, parallel, |&(c, seed)| {
        inner
            .run(configs[c].1, p_iter, seed)
            .map(|r| r.breakdown.t_value)
    });

    let mut rates = vec![Vec::with_capacity(seeds.len()); configs.len()];
    for ((c, _), r) in jobs.iter().zip(results) {
        rates[*c].push(r?);
    }
    let summaries: Vec<ConfigSummary> = configs
        .iter()
        .zip(rates)
        .map(|((name, hyper), v)| ConfigSummary {
            name: name.clone(),
            hyper: *hyper,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_sum_rates: v,
        })
        .collect();
    let mut gains = Vec::new();
    for a in &summaries {
        for b in &summaries {
            if a.name != b.name {
                gains.push(Gain {
                    config: a.name.clone(),
                    over: b.name.clone(),
                    percent: relative_gain(a.mean, b.mean),
                });
            }
        }
    }
    Ok(CompareReport {
        schema: COMPARE_SCHEMA,
        map_seed: None,
        p_iter,
        seeds: seeds.to_vec(),
        configs: summaries,
        gains,
    })
}

impl CompareReport {
    pub fn summary(&self, name: &str) -> Option<&ConfigSummary> {
        self.configs.iter().find(|c| c.name == name)
    }

    pub fn gain(&self, config: &str, over: &str) -> Option<f64> {
        self.gains
            .iter()
            .find(|g| g.config == config && g.over == over)
            .and_then(|g| g.percent)
    }

    /// Human-readable table of means and pairwise gains.
    pub fn render(&self) -> String {
        let w = self.configs.iter().map(|c| c.name.len()).max().unwrap_or(6).max(6);
        let mut s = format!(
            "{:<w$}  {:>10}  {:>10}  {:>10}\n",
            "config", "mean", "min", "max"
        );
        for c in &self.configs {
            let _ = writeln!(s, "{:<w$}  {:>10.4}  {:>10.4}  {:>10.4}", c.name, c.mean, c.min, c.max);
        }
        s.push('\n');
        for g in &self.gains {
            let pct = g.percent.map_or("n/a".to_string(), |p| format!("{p:+.2}%"));
            let _ = writeln!(s, "{} over {}: {pct}", g.config, g.over);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_examples() {
        assert_eq!(relative_gain(3.0, 3.0), Some(0.0));
        assert_eq!(relative_gain(0.0, 0.0), Some(0.0));
        assert_eq!(relative_gain(1.0, 0.0), None);
        assert!((relative_gain(154.34, 100.0).unwrap() - 54.34).abs() < 1e-9);
    }
}
