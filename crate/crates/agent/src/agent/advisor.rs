use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_tuner_core::HyperParams;

use super::{AgentError, AgentProfile, Bounds, Memory};

#[derive(Debug, Clone, PartialEq)]
pub enum Advice {
    Propose { hyper: HyperParams, rationale: String },
    Terminate { rationale: String },
}

/// Proposes the next hyper-parameters from what has been tried so far.
pub trait Advisor {
    fn name(&self) -> &'static str;

    fn advise(&mut self, profile: &AgentProfile, memory: &Memory) -> Result<Advice, AgentError>;
}

/// Always proposes the first baseline. Useful as a control.
#[derive(Debug, Clone, Default)]
pub struct HeuristicAdvisor;

impl Advisor for HeuristicAdvisor {
    fn name(&self) -> &'static str {
        "heuristic"
    }

    fn advise(&mut self, _: &AgentProfile, _: &Memory) -> Result<Advice, AgentError> {
        Ok(Advice::Propose {
            hyper: HyperParams::baseline1(),
            rationale: "fixed baseline".into(),
        })
    }
}

/// Independent uniform draws inside the bounds. Never stops on its own.
#[derive(Debug, Clone)]
pub struct RandomAdvisor {
    bounds: Bounds,
    rng: ChaCha8Rng,
}

impl RandomAdvisor {
    pub fn new(bounds: Bounds, seed: u64) -> Result<Self, AgentError> {
        bounds.validate()?;
        Ok(Self {
            bounds,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Advisor for RandomAdvisor {
    fn name(&self) -> &'static str {
        "random"
    }

    fn advise(&mut self, _: &AgentProfile, _: &Memory) -> Result<Advice, AgentError> {
        let mut v = [0.0; 8];
        for (x, r) in v.iter_mut().zip(&self.bounds.ranges) {
            *x = self.rng.random_range(r.lo..r.hi);
        }
        Ok(Advice::Propose {
            hyper: self.bounds.clamp(&HyperParams::from_array(v)),
            rationale: "uniform draw".into(),
        })
    }
}

/// Coordinate hill climbing from the first baseline.
///
/// Each proposal moves one randomly chosen coordinate of the best record so
/// far by `±step_fractions[i]` of that coordinate's range, skipping points
/// already tried. Stops once `patience` proposals in a row failed to beat
/// the best.
#[derive(Debug, Clone)]
pub struct HillClimbAdvisor {
    bounds: Bounds,
    steps: [f64; 8],
    patience: usize,
    rng: ChaCha8Rng,
}

pub const DEFAULT_STEP_FRACTION: f64 = 0.1;
const MAX_DRAWS: usize = 64;

impl HillClimbAdvisor {
    pub fn new(
        bounds: Bounds,
        step_fractions: [f64; 8],
        patience: usize,
        seed: u64,
    ) -> Result<Self, AgentError> {
        bounds.validate()?;
        if step_fractions.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(AgentError::Config("step fractions must be finite and ≥ 0".into()));
        }
        if patience == 0 {
            return Err(AgentError::Config("patience must be ≥ 1".into()));
        }
        Ok(Self {
            bounds,
            steps: step_fractions,
            patience,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_defaults(bounds: Bounds, patience: usize, seed: u64) -> Result<Self, AgentError> {
        Self::new(bounds, [DEFAULT_STEP_FRACTION; 8], patience, seed)
    }
}

impl Advisor for HillClimbAdvisor {
    fn name(&self) -> &'static str {
        "hillclimb"
    }

    fn advise(&mut self, _: &AgentProfile, memory: &Memory) -> Result<Advice, AgentError> {
        let Some(best) = memory.best() else {
            return Ok(Advice::Propose {
                hyper: self.bounds.clamp(&HyperParams::baseline1()),
                rationale: "start from the first baseline".into(),
            });
        };
        let stale = memory.len() - best.iteration;
        if stale >= self.patience {
            return Ok(Advice::Terminate {
                rationale: format!(
                    "{stale} proposals without improving on iteration {}",
                    best.iteration
                ),
            });
        }
        let base = best.hyper.to_array();
        for _ in 0..MAX_DRAWS {
            let i = self.rng.random_range(0..8);
            let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut v = base;
            v[i] += sign * self.steps[i] * self.bounds.ranges[i].width();
            let cand = self.bounds.clamp(&HyperParams::from_array(v));
            if !memory.has_tried(&cand) {
                let delta = cand.to_array()[i] - base[i];
                return Ok(Advice::Propose {
                    hyper: cand,
                    rationale: format!(
                        "{} {:+} from iteration {}",
                        HyperParams::NAMES[i],
                        delta,
                        best.iteration
                    ),
                });
            }
        }
        Ok(Advice::Propose {
            hyper: best.hyper,
            rationale: format!("no untried neighbour; repeat iteration {}", best.iteration),
        })
    }
}
