use crate::error::{Error, Result};
use crate::model::{PackingInstance, SystemState, UniformPick};
use crate::policies::{choose, quad_level_bound, EpsilonRule, Placement, PolicyKind};

use super::{rng_for, RngStream, TraceSample};

/// A departure-free run of `n` i.i.d. items.
#[derive(Debug, Clone)]
pub struct StreamRun {
    pub instance: PackingInstance,
    pub policy: PolicyKind,
    pub n: u64,
    pub seed: u64,
    /// Sample period in items; 0 samples only at the end.
    pub snapshot_every: u64,
    /// Configurations reported per sample; 0 disables the bin scan.
    pub top_configs: usize,
}

/// What happened at one arrival, passed to step observers.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    /// 1-based arrival index.
    pub t: u64,
    pub size: u32,
    pub placement: Placement,
    /// Penalty weight used for the decision, when the policy has one.
    pub epsilon: Option<f64>,
}

/// Runs the stream and returns its samples.
pub fn run_stream(run: &StreamRun) -> Result<Vec<TraceSample>> {
    run_stream_observed(run, &mut |_, _| Ok(()))
}

/// Runs the stream, calling `observer` after every placement.
///
/// For PD-quad with a fixed schedule the per-level bound
/// `N_h <= (B+1) h / eps` is verified after each step in debug builds.
pub fn run_stream_observed(
    run: &StreamRun,
    observer: &mut dyn FnMut(&StepInfo, &SystemState) -> Result<()>,
) -> Result<Vec<TraceSample>> {
    let b = run.instance.capacity();
    let workload = run.instance.workload();
    let sizes = workload.sizes();
    let mut types = rng_for(run.seed, RngStream::Types);
    let mut selection = rng_for(run.seed, RngStream::Selection);
    let mut state = SystemState::new(b);
    let mut samples = Vec::new();
    let check_quad = cfg!(debug_assertions)
        && matches!(
            run.policy,
            PolicyKind::PdQuad(s) if matches!(s.rule, EpsilonRule::QuadFixed { .. })
        );

    for t in 1..=run.n {
        let size = sizes[workload.sample_index(&mut types)];
        let placement = choose(&run.policy, state.profile(), size, t)?;
        state
            .apply_placement(placement, (t - 1, size), &mut UniformPick(&mut selection))
            .map_err(|e| {
                Error::Invariant(format!(
                    "step {t}: {e}; levels {:?}",
                    state.profile().as_slice()
                ))
            })?;
        let epsilon = run.policy.schedule().map(|s| s.epsilon(t));
        if check_quad {
            let eps = epsilon.expect("quad policy has a schedule");
            for h in 1..b {
                let n_h = state.profile().count(h) as f64;
                if n_h > quad_level_bound(b, h, eps) {
                    return Err(Error::Invariant(format!(
                        "step {t}: N_{h} = {n_h} exceeds (B+1)h/eps"
                    )));
                }
            }
        }
        observer(&StepInfo { t, size, placement, epsilon }, &state)?;
        if (run.snapshot_every > 0 && t % run.snapshot_every == 0) || t == run.n {
            samples.push(TraceSample::capture(&state, t as f64, t, 0, run.top_configs));
        }
    }
    Ok(samples)
}
