//! Placement rules.
//!
//! Every rule looks only at the [`LevelProfile`] and the arriving size. The
//! two primal-dual rules score each admissible level by the change of their
//! Lagrangian (the constant `-s` common to all options is dropped) and take
//! the argmin; Sum-of-Squares scores by the change of `sum N_h^2`; Best Fit
//! takes the fullest bin the item fits in.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LevelProfile;

/// Where an arriving item goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Placement {
    /// Into some existing bin currently at level `h` (`1..B-1`).
    ExistingAtLevel(u32),
    /// Into a new bin whose bottom `h` units are forbidden; `h = 0` is an
    /// ordinary fresh bin.
    NewBinWithHole(u32),
}

impl Placement {
    /// Level the item is placed on top of.
    pub fn base_level(self) -> u32 {
        match self {
            Placement::ExistingAtLevel(h) | Placement::NewBinWithHole(h) => h,
        }
    }

    // Lower sorts first: existing bins before new ones, fuller existing bins
    // first, smaller holes first.
    fn preference(self) -> (u8, i64) {
        match self {
            Placement::ExistingAtLevel(h) => (0, -(h as i64)),
            Placement::NewBinWithHole(h) => (1, h as i64),
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::ExistingAtLevel(h) => write!(f, "existing@{h}"),
            Placement::NewBinWithHole(0) => write!(f, "new"),
            Placement::NewBinWithHole(h) => write!(f, "new+hole{h}"),
        }
    }
}

/// Step-size rule for the penalty weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    /// `B^2 / sqrt(2n)` for a known horizon `n`.
    QuadFixed { horizon: u64 },
    /// `B^2 / sqrt(4t)`.
    QuadAnytime,
    /// `sqrt(B / n)`, requires `n > B`.
    ExpFixed { horizon: u64 },
    /// `sqrt(B / (2(B + t)))`.
    ExpAnytime,
}

/// An [`EpsilonRule`] bound to a capacity.
///
/// With `departures_aware` set, drivers feed the number of items currently
/// in the system as `t` instead of the arrival index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub rule: EpsilonRule,
    pub capacity: u32,
    #[serde(default)]
    pub departures_aware: bool,
}

impl EpsilonSchedule {
    pub fn new(rule: EpsilonRule, capacity: u32) -> Result<Self> {
        match rule {
            EpsilonRule::QuadFixed { horizon: 0 } => {
                return Err(Error::InvalidHorizon("fixed schedule needs n >= 1".into()))
            }
            EpsilonRule::ExpFixed { horizon } if horizon <= capacity as u64 => {
                return Err(Error::InvalidHorizon(format!(
                    "exponential fixed schedule needs n > B (n = {horizon}, B = {capacity})"
                )))
            }
            _ => {}
        }
        if capacity < 2 {
            return Err(Error::InvalidInstance("capacity must be at least 2".into()));
        }
        Ok(Self {
            rule,
            capacity,
            departures_aware: false,
        })
    }

    pub fn departures_aware(mut self) -> Self {
        self.departures_aware = true;
        self
    }

    pub fn is_fixed(&self) -> bool {
        matches!(
            self.rule,
            EpsilonRule::QuadFixed { .. } | EpsilonRule::ExpFixed { .. }
        )
    }

    /// Penalty weight at time index `t`; `t = 0` is treated as 1.
    pub fn epsilon(&self, t: u64) -> f64 {
        let b = self.capacity as f64;
        let t = t.max(1) as f64;
        match self.rule {
            EpsilonRule::QuadFixed { horizon } => b * b / (2.0 * horizon as f64).sqrt(),
            EpsilonRule::QuadAnytime => b * b / (4.0 * t).sqrt(),
            EpsilonRule::ExpFixed { horizon } => (b / horizon as f64).sqrt(),
            EpsilonRule::ExpAnytime => (b / (2.0 * (b + t))).sqrt(),
        }
    }
}

/// A placement rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    PdQuad(EpsilonSchedule),
    PdExp(EpsilonSchedule),
    SumOfSquares,
    BestFit,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::PdQuad(_) => "pd-quad",
            PolicyKind::PdExp(_) => "pd-exp",
            PolicyKind::SumOfSquares => "ss",
            PolicyKind::BestFit => "bf",
        }
    }

    /// Builds a policy from its short name (`pd-quad`, `pd-exp`, `ss`, `bf`).
    ///
    /// `fixed_horizon = Some(n)` selects the fixed-horizon schedule of the PD
    /// rules; `None` selects the anytime schedule.
    pub fn from_name(name: &str, capacity: u32, fixed_horizon: Option<u64>) -> Result<Self> {
        let sched = |rule| EpsilonSchedule::new(rule, capacity);
        Ok(match name {
            "pd-quad" | "pdquad" => PolicyKind::PdQuad(sched(match fixed_horizon {
                Some(horizon) => EpsilonRule::QuadFixed { horizon },
                None => EpsilonRule::QuadAnytime,
            })?),
            "pd-exp" | "pdexp" => PolicyKind::PdExp(sched(match fixed_horizon {
                Some(horizon) => EpsilonRule::ExpFixed { horizon },
                None => EpsilonRule::ExpAnytime,
            })?),
            "ss" | "sum-of-squares" => PolicyKind::SumOfSquares,
            "bf" | "best-fit" => PolicyKind::BestFit,
            other => {
                return Err(Error::InvalidInstance(format!("unknown policy '{other}'")))
            }
        })
    }

    pub fn schedule(&self) -> Option<&EpsilonSchedule> {
        match self {
            PolicyKind::PdQuad(s) | PolicyKind::PdExp(s) => Some(s),
            _ => None,
        }
    }

    /// Same policy with its schedule driven by the in-system item count.
    pub fn departures_aware(self) -> Self {
        match self {
            PolicyKind::PdQuad(s) => PolicyKind::PdQuad(s.departures_aware()),
            PolicyKind::PdExp(s) => PolicyKind::PdExp(s.departures_aware()),
            other => other,
        }
    }
}

/// A candidate placement and its Lagrangian change (without `-s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredOption {
    pub placement: Placement,
    pub delta_lagrangian: f64,
}

/// Scores of all PD-quad options for an item of size `s`.
///
/// One option per base level `h = 0..=B-s`; when no bin sits at `h` the
/// option opens a new bin with a hole of `h`.
pub fn pdquad_options(profile: &LevelProfile, s: u32, eps: f64) -> Vec<ScoredOption> {
    let b = profile.capacity();
    debug_assert!(s >= 1 && s < b);
    let cap = b as f64;
    (0..=b - s)
        .map(|h| {
            let n_h = profile.count(h) as f64;
            let closes = h + s == b;
            let n_up = if closes { 0.0 } else { profile.count(h + s) as f64 };
            if h > 0 && n_h > 0.0 {
                let delta = if closes {
                    cap + eps * (0.5 - n_h)
                } else {
                    eps * (n_up - n_h + 1.0)
                };
                ScoredOption {
                    placement: Placement::ExistingAtLevel(h),
                    delta_lagrangian: delta,
                }
            } else {
                let delta = if closes { cap } else { eps * (n_up + 0.5) };
                ScoredOption {
                    placement: Placement::NewBinWithHole(h),
                    delta_lagrangian: delta,
                }
            }
        })
        .collect()
}

// (B/eps) * (e^{-eps(n+1)} - e^{-eps n}), i.e. the potential change of adding a bin.
#[inline]
fn exp_gain(n: f64, eps: f64, scale: f64) -> f64 {
    scale * (-eps * n).exp() * (-eps).exp_m1()
}

// (B/eps) * (e^{-eps(n-1)} - e^{-eps n}), the potential change of removing one.
#[inline]
fn exp_loss(n: f64, eps: f64, scale: f64) -> f64 {
    scale * (-eps * n).exp() * eps.exp_m1()
}

/// Scores of the PD-exp options: a fresh bin, or any occupied level the item
/// fits on. Holes are never created.
pub fn pdexp_options(profile: &LevelProfile, s: u32, eps: f64) -> Vec<ScoredOption> {
    let b = profile.capacity();
    debug_assert!(s >= 1 && s < b);
    debug_assert!(eps > 0.0 && eps < 1.0, "exponential schedule needs 0 < eps < 1");
    let cap = b as f64;
    let scale = cap / eps;
    let mut out = Vec::with_capacity(b as usize);
    out.push(ScoredOption {
        placement: Placement::NewBinWithHole(0),
        delta_lagrangian: cap + exp_gain(profile.count(s) as f64, eps, scale),
    });
    for h in 1..=b - s {
        let n_h = profile.count(h);
        if n_h == 0 {
            continue;
        }
        let mut delta = exp_loss(n_h as f64, eps, scale);
        if h + s < b {
            delta += exp_gain(profile.count(h + s) as f64, eps, scale);
        }
        out.push(ScoredOption {
            placement: Placement::ExistingAtLevel(h),
            delta_lagrangian: delta,
        });
    }
    out
}

/// Sum-of-Squares options scored by the change of `sum_{h<B} N_h^2`.
pub fn ss_options(profile: &LevelProfile, s: u32) -> Vec<ScoredOption> {
    let b = profile.capacity();
    debug_assert!(s >= 1 && s < b);
    let sq_up = |n: u64| 2.0 * n as f64 + 1.0;
    let mut out = vec![ScoredOption {
        placement: Placement::NewBinWithHole(0),
        delta_lagrangian: sq_up(profile.count(s)),
    }];
    for h in 1..=b - s {
        let n_h = profile.count(h);
        if n_h == 0 {
            continue;
        }
        let mut delta = 1.0 - 2.0 * n_h as f64;
        if h + s < b {
            delta += sq_up(profile.count(h + s));
        }
        out.push(ScoredOption {
            placement: Placement::ExistingAtLevel(h),
            delta_lagrangian: delta,
        });
    }
    out
}

/// Relative width of the band in which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Argmin with the tie-break: existing bins first, then fuller existing bins,
/// then new bins with smaller holes.
pub fn select(options: &[ScoredOption]) -> Option<Placement> {
    let best = options
        .iter()
        .map(|o| o.delta_lagrangian)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let band = best + TIE_TOLERANCE * (1.0 + best.abs());
    options
        .iter()
        .filter(|o| o.delta_lagrangian <= band)
        .min_by_key(|o| o.placement.preference())
        .map(|o| o.placement)
}

pub fn ss_choose(profile: &LevelProfile, s: u32) -> Placement {
    select(&ss_options(profile, s)).expect("the fresh-bin option always exists")
}

/// Fullest existing bin that still fits `s`, else a fresh bin.
pub fn bf_choose(profile: &LevelProfile, s: u32) -> Placement {
    let b = profile.capacity();
    (1..=b - s)
        .rev()
        .find(|&h| profile.count(h) > 0)
        .map_or(Placement::NewBinWithHole(0), Placement::ExistingAtLevel)
}

/// Upper bound `(B+1) h / eps` on `N_h` under PD-quad with a fixed step.
pub fn quad_level_bound(capacity: u32, level: u32, eps: f64) -> f64 {
    (capacity as f64 + 1.0) * level as f64 / eps
}

/// Dispatches to the rule of `policy` for an item of size `s` at time index
/// `t` (arrival index, or in-system count for departure-aware schedules).
pub fn choose(policy: &PolicyKind, profile: &LevelProfile, s: u32, t: u64) -> Result<Placement> {
    let b = profile.capacity();
    if s == 0 || s >= b {
        return Err(Error::IllegalPlacement(format!(
            "item size {s} must lie in 1..{b}"
        )));
    }
    Ok(match policy {
        PolicyKind::PdQuad(sched) => {
            let eps = sched.epsilon(t);
            select(&pdquad_options(profile, s, eps)).expect("PD-quad always has options")
        }
        PolicyKind::PdExp(sched) => {
            let eps = sched.epsilon(t);
            select(&pdexp_options(profile, s, eps)).expect("PD-exp always has options")
        }
        PolicyKind::SumOfSquares => ss_choose(profile, s),
        PolicyKind::BestFit => bf_choose(profile, s),
    })
}
