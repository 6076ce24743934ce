use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemClass, Workload, MAX_CAPACITY};

/// A time window with its own arrival rate and item mix. The phase is
/// active from the previous phase's `until` (or 0) up to `until`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub until: f64,
    pub arrival_rate: f64,
    pub classes: Vec<ItemClass>,
}

/// `count` identical bins with the given hole and item sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    #[serde(default)]
    pub hole: u32,
    pub items: Vec<u32>,
    #[serde(default = "one")]
    pub count: u64,
}

fn one() -> u64 {
    1
}

/// Contents of the system at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    Empty,
    ExplicitBins(Vec<BinSpec>),
    /// A perfect packing of the first phase's distribution: each full
    /// configuration contributes a Poisson number of bins with mean
    /// `expected_items` times its rate.
    PerfectPackingSample { expected_items: f64 },
}

/// A timed simulation description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub capacity: u32,
    pub phases: Vec<Phase>,
    pub horizon: f64,
    pub sample_interval: f64,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    /// Checks the description and returns one validated workload per phase.
    pub fn validate(&self) -> Result<Vec<Workload>> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.capacity < 2 || self.capacity > MAX_CAPACITY {
            return bad(format!("capacity {} out of range", self.capacity));
        }
        if self.phases.is_empty() {
            return Err(Error::EmptyPhaseList);
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be finite and >= 0", self.horizon));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad(format!("sample interval {} must be > 0", self.sample_interval));
        }
        let mut prev = 0.0;
        let mut workloads = Vec::with_capacity(self.phases.len());
        for (i, phase) in self.phases.iter().enumerate() {
            if phase.until.partial_cmp(&prev) != Some(std::cmp::Ordering::Greater) {
                return bad(format!("phase {i} ends at {} which is not after {prev}", phase.until));
            }
            prev = phase.until;
            if !(phase.arrival_rate > 0.0 && phase.arrival_rate.is_finite()) {
                return bad(format!("phase {i} arrival rate must be positive"));
            }
            let w = Workload::new(phase.classes.clone())
                .map_err(|e| Error::InvalidScenario(format!("phase {i}: {e}")))?;
            if w.max_size() >= self.capacity {
                return bad(format!("phase {i} has an item of size >= capacity"));
            }
            for c in w.classes() {
                match c.mean_residence {
                    Some(m) if m > 0.0 && m.is_finite() => {}
                    _ => return bad(format!("phase {i} size {} needs a positive mean_residence", c.size)),
                }
            }
            workloads.push(w);
        }
        if prev < self.horizon {
            return bad(format!("phases end at {prev} before the horizon {}", self.horizon));
        }
        Ok(workloads)
    }

    /// Index of the phase active at `time`.
    pub fn phase_at(&self, time: f64) -> usize {
        self.phases
            .iter()
            .position(|p| time < p.until)
            .unwrap_or(self.phases.len() - 1)
    }
}
