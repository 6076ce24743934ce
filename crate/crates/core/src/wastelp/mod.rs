//! The waste LP over item-to-level flow rates, distribution classification,
//! and an independent configuration LP used to cross-check it.
//!
//! Variable `v(j, h)` is the rate at which type-`j` items are put on bins of
//! level `h`. Level `h` is created at rate `sum_j v(j, h - s_j)` and destroyed
//! at rate `sum_j v(j, h)`; the objective charges `B - h` per unit of net
//! accumulation at every open level. Flows referencing negative levels are
//! zero.

pub mod simplex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PackingInstance;
use simplex::{LinearProgram, LpOutcome, RowKind};

/// Waste rates above this are classified as linear waste.
pub const LINEAR_WASTE_THRESHOLD: f64 = 1e-7;

/// Cap on the number of enumerated configurations.
pub const MAX_CONFIGS: usize = 1_000_000;

/// The assembled waste LP for one instance.
#[derive(Debug, Clone)]
pub struct WasteLp {
    capacity: u32,
    sizes: Vec<u32>,
    probs: Vec<f64>,
    objective: Vec<f64>,
    fixed_zero: Vec<bool>,
}

impl WasteLp {
    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn num_types(&self) -> usize {
        self.sizes.len()
    }

    /// `J * B` flow variables, including those pinned to zero.
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Index of `v(j, h)`.
    pub fn var(&self, j: usize, h: u32) -> usize {
        j * self.capacity as usize + h as usize
    }

    pub fn is_fixed_zero(&self, j: usize, h: u32) -> bool {
        self.fixed_zero[self.var(j, h)]
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Level-balance rows `h = 1..B-1` (`<= 0`) followed by one probability
    /// row per type (`= p_j`).
    pub fn constraint_rows(&self) -> Vec<(Vec<f64>, RowKind, f64)> {
        let b = self.capacity;
        let n = self.num_vars();
        let mut rows = Vec::with_capacity(b as usize - 1 + self.num_types());
        for h in 1..b {
            let mut row = vec![0.0; n];
            for (j, &s) in self.sizes.iter().enumerate() {
                row[self.var(j, h)] += 1.0;
                if h >= s {
                    row[self.var(j, h - s)] -= 1.0;
                }
            }
            rows.push((row, RowKind::Le, 0.0));
        }
        for (j, &p) in self.probs.iter().enumerate() {
            let mut row = vec![0.0; n];
            for h in 0..b {
                row[self.var(j, h)] = 1.0;
            }
            rows.push((row, RowKind::Eq, p));
        }
        rows
    }

    /// Evaluates the telescoped objective directly from its definition.
    pub fn objective_from_flows(&self, flows: &[f64]) -> f64 {
        let b = self.capacity;
        let mut total = 0.0;
        for h in 1..b {
            let mut created = 0.0;
            let mut destroyed = 0.0;
            for (j, &s) in self.sizes.iter().enumerate() {
                if h >= s {
                    created += flows[self.var(j, h - s)];
                }
                destroyed += flows[self.var(j, h)];
            }
            total += (b - h) as f64 * (created - destroyed);
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WasteLpSolution {
    /// Optimal expected waste per item.
    pub waste_rate: f64,
    /// `v(j, h)` indexed by [`WasteLp::var`].
    pub flows: Vec<f64>,
    pub status: LpStatus,
}

pub fn build_waste_lp(instance: &PackingInstance) -> WasteLp {
    let b = instance.capacity();
    let sizes = instance.workload().sizes();
    let probs = instance.workload().probs();
    let n = sizes.len() * b as usize;
    let mut objective = vec![0.0; n];
    let mut fixed_zero = vec![false; n];
    for (j, &s) in sizes.iter().enumerate() {
        for h in 0..b {
            let idx = j * b as usize + h as usize;
            if s > b - h {
                fixed_zero[idx] = true;
                continue;
            }
            let mut c = 0.0;
            if h + s < b {
                c += (b - h - s) as f64;
            }
            if h >= 1 {
                c -= (b - h) as f64;
            }
            objective[idx] = c;
        }
    }
    WasteLp {
        capacity: b,
        sizes,
        probs,
        objective,
        fixed_zero,
    }
}

/// Solves the waste LP; variables pinned to zero are left out of the
/// simplex and reported as zero.
pub fn solve_lp(lp: &WasteLp) -> Result<WasteLpSolution> {
    let free: Vec<usize> = (0..lp.num_vars()).filter(|&i| !lp.fixed_zero[i]).collect();
    let mut reduced = LinearProgram::new(free.len());
    reduced.objective = free.iter().map(|&i| lp.objective[i]).collect();
    for (row, kind, rhs) in lp.constraint_rows() {
        reduced.add(free.iter().map(|&i| row[i]).collect(), kind, rhs);
    }
    match reduced.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let mut flows = vec![0.0; lp.num_vars()];
            for (k, &i) in free.iter().enumerate() {
                flows[i] = x[k];
            }
            let violation = reduced.max_violation(&x);
            if violation > 1e-9 {
                return Err(Error::NumericalFailure(format!(
                    "waste LP solution violates constraints by {violation:e}"
                )));
            }
            let waste_rate = lp.objective_from_flows(&flows).max(0.0);
            Ok(WasteLpSolution {
                waste_rate,
                flows,
                status: LpStatus::Optimal,
            })
        }
        LpOutcome::Infeasible => Ok(WasteLpSolution {
            waste_rate: f64::NAN,
            flows: vec![0.0; lp.num_vars()],
            status: LpStatus::Infeasible,
        }),
        LpOutcome::Unbounded => Err(Error::NumericalFailure(
            "waste LP reported unbounded".into(),
        )),
    }
}

/// Linear-waste versus perfectly-packable split of the item distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistributionClass {
    LinearWaste,
    PerfectlyPackable,
}

impl DistributionClass {
    pub fn short(&self) -> &'static str {
        match self {
            DistributionClass::LinearWaste => "LW",
            DistributionClass::PerfectlyPackable => "PP",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub class: DistributionClass,
    pub solution: WasteLpSolution,
}

pub fn classify(instance: &PackingInstance) -> Result<Classification> {
    let solution = solve_lp(&build_waste_lp(instance))?;
    if solution.status != LpStatus::Optimal {
        return Err(Error::Infeasible);
    }
    let class = if solution.waste_rate > LINEAR_WASTE_THRESHOLD {
        DistributionClass::LinearWaste
    } else {
        DistributionClass::PerfectlyPackable
    };
    Ok(Classification { class, solution })
}

/// Item counts per type that fit together in one bin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BinConfiguration {
    pub counts: Vec<u32>,
    pub level: u32,
    /// No further item of any type fits.
    pub maximal: bool,
}

impl BinConfiguration {
    pub fn items(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Every non-empty configuration, in lexicographic order of counts.
pub fn enumerate_configs(instance: &PackingInstance) -> Result<Vec<BinConfiguration>> {
    configs_for_sizes(instance.capacity(), &instance.workload().sizes())
}

/// Configurations over arbitrary sizes (each `1..=capacity`).
pub fn configs_for_sizes(capacity: u32, sizes: &[u32]) -> Result<Vec<BinConfiguration>> {
    fn walk(
        j: usize,
        level: u32,
        b: u32,
        smallest: u32,
        sizes: &[u32],
        counts: &mut Vec<u32>,
        out: &mut Vec<BinConfiguration>,
    ) -> Result<()> {
        if j == sizes.len() {
            if level > 0 {
                if out.len() >= MAX_CONFIGS {
                    return Err(Error::ExplosionGuard {
                        size: out.len() as u128 + 1,
                        limit: MAX_CONFIGS as u128,
                    });
                }
                out.push(BinConfiguration {
                    counts: counts.clone(),
                    level,
                    maximal: b - level < smallest,
                });
            }
            return Ok(());
        }
        let mut c = 0;
        while level + c * sizes[j] <= b {
            counts[j] = c;
            walk(j + 1, level + c * sizes[j], b, smallest, sizes, counts, out)?;
            c += 1;
        }
        counts[j] = 0;
        Ok(())
    }

    let Some(&smallest) = sizes.iter().min() else {
        return Ok(Vec::new());
    };
    if smallest == 0 {
        return Err(Error::InvalidWorkload("item size must be >= 1".into()));
    }
    let mut out = Vec::new();
    let mut counts = vec![0u32; sizes.len()];
    walk(0, 0, capacity, smallest, sizes, &mut counts, &mut out)?;
    Ok(out)
}

/// Configurations to which no further item can be added.
pub fn enumerate_maximal_configs(instance: &PackingInstance) -> Result<Vec<BinConfiguration>> {
    Ok(enumerate_configs(instance)?
        .into_iter()
        .filter(|c| c.maximal)
        .collect())
}

/// Optimal waste per item computed over bin configurations instead of flows:
/// `minimize B * sum_c x_c - E[s]` with every type covered,
/// `sum_c count_{c,j} x_c >= p_j`. Covering with maximal configurations is
/// equivalent to exact packing with arbitrary ones, because unused slots are
/// charged through the bin count.
pub fn solve_config_lp(instance: &PackingInstance) -> Result<f64> {
    let configs = enumerate_maximal_configs(instance)?;
    let b = instance.capacity() as f64;
    let mut lp = LinearProgram::new(configs.len());
    lp.objective = vec![b; configs.len()];
    for (j, &p) in instance.workload().probs().iter().enumerate() {
        lp.add(
            configs.iter().map(|c| c.counts[j] as f64).collect(),
            RowKind::Ge,
            p,
        );
    }
    match lp.solve()? {
        LpOutcome::Optimal { objective, .. } => {
            Ok((objective - instance.workload().mean_size()).max(0.0))
        }
        _ => Err(Error::NumericalFailure("configuration LP not solvable".into())),
    }
}

/// Rates (bins per item) of full configurations that exactly reproduce the
/// item distribution. Fails when the distribution has positive waste.
pub fn perfect_config_rates(
    instance: &PackingInstance,
) -> Result<Vec<(BinConfiguration, f64)>> {
    let b = instance.capacity();
    let full: Vec<BinConfiguration> = enumerate_maximal_configs(instance)?
        .into_iter()
        .filter(|c| c.level == b)
        .collect();
    if full.is_empty() {
        return Err(Error::Infeasible);
    }
    let mut lp = LinearProgram::new(full.len());
    lp.objective = vec![1.0; full.len()];
    for (j, &p) in instance.workload().probs().iter().enumerate() {
        lp.add(
            full.iter().map(|c| c.counts[j] as f64).collect(),
            RowKind::Eq,
            p,
        );
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(full
            .into_iter()
            .zip(x)
            .filter(|(_, rate)| *rate > 1e-12)
            .collect()),
        _ => Err(Error::Infeasible),
    }
}
