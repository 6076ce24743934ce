use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{BinId, ItemId, PackingInstance, SystemState, Workload};
use crate::wastelp::perfect_config_rates;

use super::InitialState;

/// An item present at time 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidentItem {
    pub item: ItemId,
    pub bin: BinId,
    pub size: u32,
}

/// A materialised initial state. Item ids `0..next_item_id` are taken.
#[derive(Debug)]
pub struct InitialLoad {
    pub state: SystemState,
    pub items: Vec<ResidentItem>,
    pub next_item_id: ItemId,
}

/// Builds the initial bins. `workload` is the distribution used for
/// perfect-packing samples; explicit bins may only hold sizes it contains.
pub fn load_initial<R: Rng + ?Sized>(
    spec: &InitialState,
    capacity: u32,
    workload: &Workload,
    rng: &mut R,
) -> Result<InitialLoad> {
    let mut load = InitialLoad {
        state: SystemState::new(capacity),
        items: Vec::new(),
        next_item_id: 0,
    };
    match spec {
        InitialState::Empty => {}
        InitialState::ExplicitBins(specs) => {
            for (i, spec) in specs.iter().enumerate() {
                let volume: u64 = spec.items.iter().map(|&s| s as u64).sum();
                if spec.items.is_empty() {
                    return Err(Error::InfeasibleInitial(format!("bin spec {i} has no items")));
                }
                if spec.hole as u64 + volume > capacity as u64 {
                    return Err(Error::InfeasibleInitial(format!(
                        "bin spec {i} reaches level {} above capacity {capacity}",
                        spec.hole as u64 + volume
                    )));
                }
                if let Some(&s) = spec.items.iter().find(|&&s| workload.class_of_size(s).is_none()) {
                    return Err(Error::InfeasibleInitial(format!(
                        "bin spec {i} holds size {s}, which has no residence time"
                    )));
                }
                for _ in 0..spec.count {
                    push_bin(&mut load, spec.hole, &spec.items)?;
                }
            }
        }
        InitialState::PerfectPackingSample { expected_items } => {
            if !(*expected_items >= 0.0 && expected_items.is_finite()) {
                return Err(Error::InfeasibleInitial("expected_items must be >= 0".into()));
            }
            let instance = PackingInstance::new(capacity, workload.clone())?;
            let rates = perfect_config_rates(&instance).map_err(|_| {
                Error::InfeasibleInitial("distribution has no perfect packing".into())
            })?;
            let sizes = workload.sizes();
            for (config, rate) in rates {
                let mean = expected_items * rate;
                if mean <= 0.0 {
                    continue;
                }
                let poisson = Poisson::new(mean)
                    .map_err(|e| Error::InfeasibleInitial(format!("poisson mean {mean}: {e}")))?;
                let bins = poisson.sample(rng) as u64;
                let items: Vec<u32> = config
                    .counts
                    .iter()
                    .zip(&sizes)
                    .flat_map(|(&c, &s)| std::iter::repeat_n(s, c as usize))
                    .collect();
                for _ in 0..bins {
                    push_bin(&mut load, 0, &items)?;
                }
            }
        }
    }
    Ok(load)
}

fn push_bin(load: &mut InitialLoad, hole: u32, sizes: &[u32]) -> Result<()> {
    let first = load.next_item_id;
    let items: Vec<(ItemId, u32)> = sizes
        .iter()
        .enumerate()
        .map(|(k, &s)| (first + k as u64, s))
        .collect();
    load.next_item_id += sizes.len() as u64;
    let bin = load.state.add_bin(hole, items.clone())?;
    load.items
        .extend(items.into_iter().map(|(item, size)| ResidentItem { item, bin, size }));
    Ok(())
}
