use serde::{Deserialize, Serialize};
use swarm_tuner_core::HyperParams;

use super::AgentError;

const MISSION: &str = include_str!("../../prompts/mission.md");
const BACKGROUND: &str = include_str!("../../prompts/background.md");
const OUTPUT_FORMAT: &str = include_str!("../../prompts/output_format.md");
const SYSTEM_TEMPLATE: &str = include_str!("../../prompts/system.md");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Search box, one range per hyper-parameter in [`HyperParams::NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub ranges: [Range; 8],
}

impl Default for Bounds {
    /// Wide enough to hold both baselines and every published tuning step.
    fn default() -> Self {
        let k = Range::new(0.0, 10.0);
        Self {
            ranges: [
                Range::new(10.0, 200.0),
                Range::new(0.0, 1.5),
                Range::new(0.0, 10.0),
                Range::new(0.0, 10.0),
                k,
                k,
                k,
                k,
            ],
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<(), AgentError> {
        for (name, r) in HyperParams::NAMES.iter().zip(&self.ranges) {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(AgentError::Config(format!(
                    "bounds for {name}: need finite lo < hi, got [{}, {}]",
                    r.lo, r.hi
                )));
            }
            if r.lo < 0.0 {
                return Err(AgentError::Config(format!("bounds for {name}: lo must be ≥ 0")));
            }
        }
        let p = self.ranges[0];
        if p.hi.floor() < p.lo.ceil().max(2.0) {
            return Err(AgentError::Config(
                "bounds for p_num must contain an integer ≥ 2".into(),
            ));
        }
        Ok(())
    }

    /// Nearest point inside the box; `p_num` lands on an integer in range.
    pub fn clamp(&self, h: &HyperParams) -> HyperParams {
        let mut v = h.to_array();
        for (x, r) in v.iter_mut().zip(&self.ranges) {
            *x = if x.is_nan() { r.lo } else { x.clamp(r.lo, r.hi) };
        }
        let p = self.ranges[0];
        v[0] = v[0].round().clamp(p.lo.ceil().max(2.0), p.hi.floor());
        HyperParams::from_array(v)
    }

    pub fn contains(&self, h: &HyperParams) -> bool {
        h.to_array()
            .iter()
            .zip(&self.ranges)
            .all(|(x, r)| *x >= r.lo && *x <= r.hi)
    }

    /// One line per parameter, for prompts.
    pub fn describe(&self) -> String {
        HyperParams::NAMES
            .iter()
            .zip(&self.ranges)
            .map(|(n, r)| format!("- {n}: [{}, {}]\n", r.lo, r.hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub mission: String,
    pub background: String,
    pub output_format: String,
    pub bounds: Bounds,
}

impl Default for AgentProfile {
    fn default() -> Self {
        Self {
            mission: MISSION.trim().to_string(),
            background: BACKGROUND.trim().to_string(),
            output_format: OUTPUT_FORMAT.trim().to_string(),
            bounds: Bounds::default(),
        }
    }
}

impl AgentProfile {
    pub fn validate(&self) -> Result<(), AgentError> {
        self.bounds.validate()?;
        if let Some(missing) = HyperParams::NAMES
            .iter()
            .find(|n| !self.output_format.contains(*n))
        {
            return Err(AgentError::Config(format!(
                "output format does not mention `{missing}`"
            )));
        }
        Ok(())
    }

    /// System prompt: the profile with bounds filled in.
    pub fn render_system(&self) -> String {
        SYSTEM_TEMPLATE
            .replace("{{mission}}", &self.mission)
            .replace("{{background}}", &self.background)
            .replace("{{output_format}}", &self.output_format)
            .replace("{{bounds}}", self.bounds.describe().trim_end())
    }
}
