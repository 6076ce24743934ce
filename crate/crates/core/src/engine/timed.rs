use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::model::{BinId, ItemId, SystemState, UniformPick, Workload};
use crate::policies::{choose, PolicyKind};

use super::{load_initial, rng_for, sample_exponential, RngStream, Scenario, TraceSample};

/// Per-sample options of a timed run.
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Configurations reported per sample; 0 disables the bin scan.
    pub top_configs: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            top_configs: super::DEFAULT_TOP_CONFIGS,
        }
    }
}

/// A pending departure. Departures are ordered by time, then by the order
/// in which they were scheduled.
#[derive(Debug, Clone, Copy)]
struct Departure {
    key: u128,
    bin: BinId,
    item: ItemId,
}

impl Departure {
    fn new(time: f64, seq: u64, bin: BinId, item: ItemId) -> Self {
        debug_assert!(time >= 0.0);
        // The bit pattern of a non-negative f64 orders like its value.
        let key = ((time.to_bits() as u128) << 64) | seq as u128;
        Self { key, bin, item }
    }

    fn time(&self) -> f64 {
        f64::from_bits((self.key >> 64) as u64)
    }
}

impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Departure {}

/// Simulates the scenario and returns samples at `k * sample_interval`
/// for every such time up to the horizon. A sample at time `tau` reflects
/// all events at times `<= tau`.
///
/// PD policies always run with their schedule driven by the number of
/// items in the system.
pub fn run_timed(
    scenario: &Scenario,
    policy: &PolicyKind,
    options: SampleOptions,
) -> Result<Vec<TraceSample>> {
    run_timed_observed(scenario, policy, options, &mut |_, _| ControlFlow::Continue(()))
}

/// [`run_timed`] with a callback receiving each sample and the state it
/// was taken from. Returning `ControlFlow::Break` ends the run after that
/// sample.
pub fn run_timed_observed(
    scenario: &Scenario,
    policy: &PolicyKind,
    options: SampleOptions,
    observer: &mut dyn FnMut(&TraceSample, &SystemState) -> ControlFlow<()>,
) -> Result<Vec<TraceSample>> {
    let workloads = scenario.validate()?;
    let policy = policy.departures_aware();
    if let Some(s) = policy.schedule() {
        if s.capacity != scenario.capacity {
            return Err(Error::InvalidScenario(format!(
                "policy capacity {} differs from scenario capacity {}",
                s.capacity, scenario.capacity
            )));
        }
    }
    let seed = scenario.seed;
    let mut sim = Sim {
        scenario,
        types: rng_for(seed, RngStream::Types),
        arrivals_rng: rng_for(seed, RngStream::Arrivals),
        lifetimes: rng_for(seed, RngStream::Lifetimes),
        queue: BinaryHeap::new(),
        seq: 0,
    };

    let mut init_rng = rng_for(seed, RngStream::Initial);
    let load = load_initial(&scenario.initial, scenario.capacity, &workloads[0], &mut init_rng)?;
    let mut state = load.state;
    let mut next_item = load.next_item_id;
    for r in &load.items {
        let mean = residence(&workloads[0], r.size)?;
        let at = sample_exponential(mean, &mut sim.lifetimes);
        sim.push(at, r.bin, r.item);
    }
    let mut next_arrival = sim.next_arrival(0.0);

    let mut selection = rng_for(seed, RngStream::Selection);
    let interval = scenario.sample_interval;
    let n_samples = (scenario.horizon / interval + 1e-9).floor() as u64 + 1;
    let mut samples = Vec::with_capacity(n_samples as usize);
    let (mut arrivals, mut departures) = (0u64, 0u64);
    // Emits every pending sample before `upto`; false once the observer stops the run.
    let mut emit = |upto: f64, state: &SystemState, arrivals: u64, departures: u64, samples: &mut Vec<TraceSample>| {
        while (samples.len() as u64) < n_samples {
            let tau = samples.len() as f64 * interval;
            if tau >= upto {
                break;
            }
            let s = TraceSample::capture(state, tau, arrivals, departures, options.top_configs);
            let flow = observer(&s, state);
            samples.push(s);
            if flow.is_break() {
                return false;
            }
        }
        true
    };

    // Arrivals win ties against departures.
    loop {
        let departure_due = sim.queue.peek().map(|Reverse(d)| d.time());
        let arrival_first = departure_due.is_none_or(|d| next_arrival <= d);
        let now = if arrival_first { next_arrival } else { departure_due.expect("queue non-empty") };
        if now > scenario.horizon {
            break;
        }
        if !emit(now, &state, arrivals, departures, &mut samples) {
            return Ok(samples);
        }
        if arrival_first {
            let phase = scenario.phase_at(now);
            let w = &workloads[phase];
            let class = &w.classes()[w.sample_index(&mut sim.types)];
            let t = state.item_count();
            let placement = choose(&policy, state.profile(), class.size, t)?;
            let item = next_item;
            next_item += 1;
            let bin = state
                .apply_placement(placement, (item, class.size), &mut UniformPick(&mut selection))
                .map_err(|e| {
                    Error::Invariant(format!(
                        "arrival at {now}: {e}; levels {:?}",
                        state.profile().as_slice()
                    ))
                })?;
            arrivals += 1;
            let mean = class.mean_residence.expect("validated scenario");
            let leave = now + sample_exponential(mean, &mut sim.lifetimes);
            sim.push(leave, bin, item);
            next_arrival = sim.next_arrival(now);
        } else {
            let Reverse(d) = sim.queue.pop().expect("queue non-empty");
            state
                .apply_departure(d.bin, d.item)
                .map_err(|e| Error::Invariant(format!("departure at {now}: {e}")))?;
            departures += 1;
        }
    }
    emit(f64::INFINITY, &state, arrivals, departures, &mut samples);
    Ok(samples)
}

fn residence(workload: &Workload, size: u32) -> Result<f64> {
    workload
        .class_of_size(size)
        .and_then(|c| c.mean_residence)
        .ok_or_else(|| Error::InfeasibleInitial(format!("no residence time for size {size}")))
}

struct Sim<'a> {
    scenario: &'a Scenario,
    types: rand_chacha::ChaCha8Rng,
    arrivals_rng: rand_chacha::ChaCha8Rng,
    lifetimes: rand_chacha::ChaCha8Rng,
    queue: BinaryHeap<Reverse<Departure>>,
    seq: u64,
}

impl Sim<'_> {
    fn push(&mut self, time: f64, bin: BinId, item: ItemId) {
        self.seq += 1;
        self.queue.push(Reverse(Departure::new(time, self.seq, bin, item)));
    }

    /// Next arrival after `now`. A gap that crosses a phase boundary is
    /// redrawn from the boundary at the next phase's rate.
    fn next_arrival(&mut self, now: f64) -> f64 {
        let phases = &self.scenario.phases;
        let mut p = self.scenario.phase_at(now);
        let mut start = now;
        loop {
            let t = start + sample_exponential(1.0 / phases[p].arrival_rate, &mut self.arrivals_rng);
            if p + 1 < phases.len() && t >= phases[p].until {
                start = phases[p].until;
                p += 1;
            } else {
                return t;
            }
        }
    }
}
