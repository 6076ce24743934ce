//! Independent ground truth: exact offline optimum for small item lists,
//! full Lagrangian evaluation, and the LP lower bound on expected waste.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LevelProfile, PackingInstance};
use crate::policies::Placement;
use crate::wastelp::{build_waste_lp, configs_for_sizes, solve_lp};

/// Largest dynamic-program table accepted by [`exact_offline_opt`].
pub const MAX_DP_STATES: u128 = 10_000_000;

/// A finite list of items, grouped by size.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ItemMultiset {
    sizes: Vec<u32>,
    counts: Vec<u64>,
}

impl ItemMultiset {
    /// Merges `(size, count)` pairs; zero counts are dropped.
    pub fn new(pairs: &[(u32, u64)]) -> Self {
        let mut merged: Vec<(u32, u64)> = Vec::new();
        let mut sorted = pairs.to_vec();
        sorted.sort_unstable();
        for (s, c) in sorted {
            if c == 0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += c,
                _ => merged.push((s, c)),
            }
        }
        Self {
            sizes: merged.iter().map(|p| p.0).collect(),
            counts: merged.iter().map(|p| p.1).collect(),
        }
    }

    pub fn from_sizes(items: &[u32]) -> Self {
        Self::new(&items.iter().map(|&s| (s, 1)).collect::<Vec<_>>())
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn volume(&self) -> u64 {
        self.sizes
            .iter()
            .zip(&self.counts)
            .map(|(&s, &c)| s as u64 * c)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OfflineOpt {
    pub min_bins: u64,
    pub waste: u64,
}

/// Minimum number of bins for `items`, by dynamic programming over
/// remaining-count vectors with maximal configurations as transitions.
pub fn exact_offline_opt(items: &ItemMultiset, capacity: u32) -> Result<OfflineOpt> {
    if items.is_empty() {
        return Ok(OfflineOpt {
            min_bins: 0,
            waste: 0,
        });
    }
    if let Some(&s) = items.sizes.iter().find(|&&s| s == 0 || s > capacity) {
        return Err(Error::InvalidInstance(format!(
            "item size {s} does not fit capacity {capacity}"
        )));
    }
    let states = items
        .counts
        .iter()
        .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128 + 1))
        .unwrap_or(u128::MAX);
    if states > MAX_DP_STATES {
        return Err(Error::ExplosionGuard {
            size: states,
            limit: MAX_DP_STATES,
        });
    }
    let configs: Vec<Vec<u64>> = configs_for_sizes(capacity, &items.sizes)?
        .into_iter()
        .filter(|c| c.maximal)
        .map(|c| c.counts.into_iter().map(u64::from).collect())
        .collect();

    // mixed radix, first type most significant: lexicographic order
    let dims: Vec<u64> = items.counts.iter().map(|&c| c + 1).collect();
    let mut strides = vec![1u64; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let total = states as usize;
    let mut best = vec![0u32; total];
    let mut remaining = vec![0u64; dims.len()];
    for idx in 1..total {
        let mut rest = idx as u64;
        for k in 0..dims.len() {
            remaining[k] = rest / strides[k];
            rest %= strides[k];
        }
        let mut min = u32::MAX;
        for cfg in &configs {
            let mut next = 0u64;
            let mut useful = false;
            for k in 0..dims.len() {
                let take = cfg[k].min(remaining[k]);
                useful |= take > 0;
                next += (remaining[k] - take) * strides[k];
            }
            if useful {
                min = min.min(best[next as usize]);
            }
        }
        best[idx] = min + 1;
    }
    let min_bins = best[total - 1] as u64;
    Ok(OfflineOpt {
        min_bins,
        waste: min_bins * capacity as u64 - items.volume(),
    })
}

/// Exhaustive branch-and-bound over item-to-bin assignments; exponential,
/// meant for a dozen items at most.
pub fn exhaustive_min_bins(items: &[u32], capacity: u32) -> u64 {
    fn go(items: &[u32], i: usize, loads: &mut Vec<u32>, cap: u32, best: &mut usize) {
        if loads.len() >= *best {
            return;
        }
        if i == items.len() {
            *best = loads.len();
            return;
        }
        let s = items[i];
        for b in 0..loads.len() {
            if loads[b] + s <= cap && !loads[..b].contains(&loads[b]) {
                loads[b] += s;
                go(items, i + 1, loads, cap, best);
                loads[b] -= s;
            }
        }
        loads.push(s);
        go(items, i + 1, loads, cap, best);
        loads.pop();
    }
    let mut sorted = items.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut best = sorted.len();
    go(&sorted, 0, &mut Vec::new(), capacity, &mut best);
    best as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagrangianKind {
    Quad,
    Exp,
}

/// Full Lagrangian of a profile with `volume` units of items packed.
///
/// Quad: `B * N_B - volume + (eps/2) sum_{h<B} N_h^2`.
/// Exp: `sum_{h<B} (B-h) N_h + (B/eps) sum_{h<B} exp(-eps N_h)`.
pub fn lagrangian(counts: &[i64], volume: f64, eps: f64, kind: LagrangianKind) -> f64 {
    let b = counts.len() - 1;
    let cap = b as f64;
    match kind {
        LagrangianKind::Quad => {
            let penalty: f64 = counts[1..b].iter().map(|&n| (n * n) as f64).sum();
            cap * counts[b] as f64 - volume + 0.5 * eps * penalty
        }
        LagrangianKind::Exp => counts[1..b]
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let h = (i + 1) as f64;
                (cap - h) * n as f64 + cap / eps * (-eps * n as f64).exp()
            })
            .sum(),
    }
}

/// Lagrangian after minus before placing an item of `size`.
pub fn lagrangian_delta(
    profile: &LevelProfile,
    placement: Placement,
    size: u32,
    eps: f64,
    kind: LagrangianKind,
) -> Result<f64> {
    let b = profile.capacity();
    let before: Vec<i64> = profile.as_slice().iter().map(|&n| n as i64).collect();
    let mut after = before.clone();
    let base = placement.base_level();
    if size == 0 || base + size > b {
        return Err(Error::IllegalPlacement(format!(
            "size {size} on level {base} exceeds capacity {b}"
        )));
    }
    if let Placement::ExistingAtLevel(h) = placement {
        if h == 0 || after[h as usize] == 0 {
            return Err(Error::IllegalPlacement(format!("no bin at level {h}")));
        }
        after[h as usize] -= 1;
    }
    after[(base + size) as usize] += 1;
    Ok(lagrangian(&after, size as f64, eps, kind) - lagrangian(&before, 0.0, eps, kind))
}

/// `n` times the optimal waste rate.
pub fn lp_lower_bound(instance: &PackingInstance, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let sol = solve_lp(&build_waste_lp(instance))?;
    Ok(n as f64 * sol.waste_rate)
}
