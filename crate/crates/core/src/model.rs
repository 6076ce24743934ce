//! Domain types and state bookkeeping shared by every policy and driver.
//!
//! A [`SystemState`] owns the set of non-empty bins, an index from level to
//! the bins currently at that level, and the aggregate [`LevelProfile`] that
//! the placement policies read. Empty bins are dropped immediately.

use std::fmt;

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::Placement;

/// Tolerance for accepting a probability vector before renormalising it.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Largest admissible bin capacity (exclusive).
pub const MAX_CAPACITY: u32 = 1 << 16;

pub type ItemId = u64;
pub type BinId = u64;

/// One item type: its size, its probability, and optionally its mean
/// residence time when items depart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemClass {
    pub size: u32,
    pub prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_residence: Option<f64>,
}

/// A discrete item-size distribution with strictly increasing sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Workload {
    classes: Vec<ItemClass>,
}

impl Workload {
    /// Validates and normalises a set of classes. Classes are sorted by size;
    /// duplicate sizes are rejected.
    pub fn new(mut classes: Vec<ItemClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidWorkload("no item classes".into()));
        }
        for c in &classes {
            if c.size == 0 {
                return Err(Error::InvalidWorkload("item size must be >= 1".into()));
            }
            if !(c.prob > 0.0 && c.prob <= 1.0) {
                return Err(Error::InvalidWorkload(format!(
                    "probability {} of size {} is outside (0, 1]",
                    c.prob, c.size
                )));
            }
            if let Some(m) = c.mean_residence {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(Error::InvalidWorkload(format!(
                        "mean residence {} of size {} must be positive",
                        m, c.size
                    )));
                }
            }
        }
        let total: f64 = classes.iter().map(|c| c.prob).sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidWorkload(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        for c in &mut classes {
            c.prob /= total;
        }
        classes.sort_by_key(|c| c.size);
        if classes.windows(2).any(|w| w[0].size == w[1].size) {
            return Err(Error::InvalidWorkload("duplicate item size".into()));
        }
        Ok(Self { classes })
    }

    /// Builds a workload without residence times.
    pub fn from_sizes(sizes: &[u32], probs: &[f64]) -> Result<Self> {
        if sizes.len() != probs.len() {
            return Err(Error::InvalidWorkload(format!(
                "{} sizes but {} probabilities",
                sizes.len(),
                probs.len()
            )));
        }
        Self::new(
            sizes
                .iter()
                .zip(probs)
                .map(|(&size, &prob)| ItemClass {
                    size,
                    prob,
                    mean_residence: None,
                })
                .collect(),
        )
    }

    pub fn classes(&self) -> &[ItemClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.classes.iter().map(|c| c.size).collect()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.prob).collect()
    }

    pub fn max_size(&self) -> u32 {
        self.classes.last().map_or(0, |c| c.size)
    }

    pub fn mean_size(&self) -> f64 {
        self.classes.iter().map(|c| c.size as f64 * c.prob).sum()
    }

    pub fn class_of_size(&self, size: u32) -> Option<&ItemClass> {
        self.classes
            .binary_search_by_key(&size, |c| c.size)
            .ok()
            .map(|i| &self.classes[i])
    }

    /// Draws a class index by inverting the cumulative distribution.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, c) in self.classes.iter().enumerate() {
            acc += c.prob;
            if u < acc {
                return i;
            }
        }
        self.classes.len() - 1
    }
}

/// A bin capacity together with the item distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingInstance {
    capacity: u32,
    workload: Workload,
}

impl PackingInstance {
    pub fn new(capacity: u32, workload: Workload) -> Result<Self> {
        if capacity >= MAX_CAPACITY {
            return Err(Error::InvalidInstance(format!(
                "capacity {capacity} must be below {MAX_CAPACITY}"
            )));
        }
        if workload.max_size() >= capacity {
            return Err(Error::InvalidInstance(format!(
                "largest item size {} must be smaller than capacity {capacity}",
                workload.max_size()
            )));
        }
        Ok(Self { capacity, workload })
    }

    /// Shorthand for an instance without residence times.
    pub fn from_parts(capacity: u32, sizes: &[u32], probs: &[f64]) -> Result<Self> {
        Self::new(capacity, Workload::from_sizes(sizes, probs)?)
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn workload(&self) -> &Workload {
        &self.workload
    }
}

/// Number of bins at each level `1..=B`.
///
/// Index 0 is kept (always zero) so that `count(h)` reads naturally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LevelProfile {
    counts: Vec<u64>,
}

impl LevelProfile {
    pub fn empty(capacity: u32) -> Self {
        Self {
            counts: vec![0; capacity as usize + 1],
        }
    }

    /// Builds a profile from `N_1..N_{B-1}`; there are no full bins.
    pub fn from_open_counts(capacity: u32, open: &[u64]) -> Self {
        assert_eq!(
            open.len() + 1,
            capacity as usize,
            "expected counts for levels 1..B-1"
        );
        let mut p = Self::empty(capacity);
        p.counts[1..capacity as usize].copy_from_slice(open);
        p
    }

    pub fn capacity(&self) -> u32 {
        (self.counts.len() - 1) as u32
    }

    /// `N_h`; zero for `h = 0` and for levels above capacity.
    #[inline]
    pub fn count(&self, level: u32) -> u64 {
        self.counts.get(level as usize).copied().unwrap_or(0)
    }

    /// Counts indexed by level, `[0] = 0`, `[B]` = full bins.
    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    /// `N_1..N_{B-1}`.
    pub fn open_counts(&self) -> &[u64] {
        &self.counts[1..self.counts.len() - 1]
    }

    pub fn total_bins(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Waste of open bins, `sum_{h<B} N_h (B - h)`.
    pub fn gap_waste(&self) -> u64 {
        let b = self.capacity() as u64;
        self.open_counts()
            .iter()
            .enumerate()
            .map(|(i, &n)| n * (b - i as u64 - 1))
            .sum()
    }

    pub(crate) fn increment(&mut self, level: u32) {
        self.counts[level as usize] += 1;
    }

    pub(crate) fn decrement(&mut self, level: u32) {
        let c = &mut self.counts[level as usize];
        debug_assert!(*c > 0, "level {level} count underflow");
        *c -= 1;
    }

    pub fn set(&mut self, level: u32, count: u64) {
        assert!(level >= 1 && level <= self.capacity(), "level out of range");
        self.counts[level as usize] = count;
    }
}

/// A non-empty bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    id: BinId,
    hole: u32,
    items: Vec<(ItemId, u32)>,
    level: u32,
    // position of this bin inside `level_index[level]`
    slot: usize,
}

impl Bin {
    pub fn id(&self) -> BinId {
        self.id
    }

    /// Forbidden space at the bottom of the bin.
    pub fn hole(&self) -> u32 {
        self.hole
    }

    pub fn items(&self) -> &[(ItemId, u32)] {
        &self.items
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn item_volume(&self) -> u32 {
        self.level - self.hole
    }
}

/// Canonical configuration string of a bin: `h<k>+` when a hole is present,
/// then item sizes in descending order joined with `+`.
pub fn config_key(bin: &Bin) -> String {
    let mut sizes: Vec<u32> = bin.items.iter().map(|&(_, s)| s).collect();
    config_key_from(bin.hole, &mut sizes)
}

/// Same as [`config_key`] for a loose hole / size list.
pub fn config_key_from(hole: u32, sizes: &mut [u32]) -> String {
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut key = String::new();
    if hole > 0 {
        key.push('h');
        key.push_str(&hole.to_string());
        if !sizes.is_empty() {
            key.push('+');
        }
    }
    for (i, s) in sizes.iter().enumerate() {
        if i > 0 {
            key.push('+');
        }
        key.push_str(&s.to_string());
    }
    key
}

/// Chooses which of several equally-levelled bins receives an item.
pub trait BinSelector {
    /// Returns an index in `0..candidates`; `candidates >= 1`.
    fn pick(&mut self, candidates: usize) -> usize;
}

/// Uniformly random choice driven by a caller-owned generator.
pub struct UniformPick<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> BinSelector for UniformPick<'_, R> {
    fn pick(&mut self, candidates: usize) -> usize {
        if candidates == 1 {
            0
        } else {
            self.0.random_range(0..candidates)
        }
    }
}

/// Always takes the first bin in the level index.
pub struct FirstPick;

impl BinSelector for FirstPick {
    fn pick(&mut self, _candidates: usize) -> usize {
        0
    }
}

/// Waste of a state under the two accounting conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct WasteReport {
    /// Empty space in bins at levels `1..B-1`.
    pub gap_waste: u64,
    /// `B * bins - item volume`; charges holes and full-bin holes.
    pub true_waste: u64,
    pub hole_volume: u64,
}

/// Bins, level index and aggregate counters of one packing run.
#[derive(Debug, Clone)]
pub struct SystemState {
    capacity: u32,
    bins: FxHashMap<BinId, Bin>,
    level_index: Vec<Vec<BinId>>,
    profile: LevelProfile,
    total_item_volume: u64,
    item_count: u64,
    hole_volume: u64,
    next_bin_id: BinId,
}

impl SystemState {
    pub fn new(capacity: u32) -> Self {
        Self {
            capacity,
            bins: FxHashMap::default(),
            level_index: vec![Vec::new(); capacity as usize + 1],
            profile: LevelProfile::empty(capacity),
            total_item_volume: 0,
            item_count: 0,
            hole_volume: 0,
            next_bin_id: 0,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn profile(&self) -> &LevelProfile {
        &self.profile
    }

    pub fn bin(&self, id: BinId) -> Option<&Bin> {
        self.bins.get(&id)
    }

    /// Iterates bins in unspecified order.
    pub fn bins(&self) -> impl Iterator<Item = &Bin> {
        self.bins.values()
    }

    /// Ids of the bins currently at `level`.
    pub fn bins_at_level(&self, level: u32) -> &[BinId] {
        self.level_index
            .get(level as usize)
            .map_or(&[][..], |v| v.as_slice())
    }

    pub fn bin_count(&self) -> u64 {
        self.bins.len() as u64
    }

    pub fn item_count(&self) -> u64 {
        self.item_count
    }

    pub fn total_item_volume(&self) -> u64 {
        self.total_item_volume
    }

    pub fn hole_volume(&self) -> u64 {
        self.hole_volume
    }

    pub fn compute_waste(&self) -> WasteReport {
        let b = self.capacity as u64;
        WasteReport {
            gap_waste: self.profile.gap_waste(),
            true_waste: b * self.bins.len() as u64 - self.total_item_volume,
            hole_volume: self.hole_volume,
        }
    }

    /// Packs `item = (id, size)` according to `placement` and returns the
    /// receiving bin.
    pub fn apply_placement(
        &mut self,
        placement: Placement,
        item: (ItemId, u32),
        selector: &mut dyn BinSelector,
    ) -> Result<BinId> {
        let (item_id, size) = item;
        if size == 0 {
            return Err(Error::IllegalPlacement("item size must be >= 1".into()));
        }
        match placement {
            Placement::ExistingAtLevel(h) => {
                if h == 0 || h >= self.capacity {
                    return Err(Error::IllegalPlacement(format!(
                        "level {h} is not an open level"
                    )));
                }
                if h + size > self.capacity {
                    return Err(Error::IllegalPlacement(format!(
                        "item of size {size} does not fit at level {h} (capacity {})",
                        self.capacity
                    )));
                }
                let candidates = &self.level_index[h as usize];
                if candidates.is_empty() {
                    return Err(Error::IllegalPlacement(format!("no bin at level {h}")));
                }
                let id = candidates[selector.pick(candidates.len())];
                self.detach(id, h);
                let bin = self.bins.get_mut(&id).expect("indexed bin exists");
                bin.items.push((item_id, size));
                bin.level += size;
                let level = bin.level;
                self.attach(id, level);
                self.total_item_volume += size as u64;
                self.item_count += 1;
                Ok(id)
            }
            Placement::NewBinWithHole(hole) => {
                if hole + size > self.capacity {
                    return Err(Error::IllegalPlacement(format!(
                        "hole {hole} plus size {size} exceeds capacity {}",
                        self.capacity
                    )));
                }
                self.add_bin(hole, vec![(item_id, size)])
            }
        }
    }

    /// Inserts a fresh bin holding `items` above a hole of size `hole`.
    pub fn add_bin(&mut self, hole: u32, items: Vec<(ItemId, u32)>) -> Result<BinId> {
        if items.is_empty() {
            return Err(Error::IllegalPlacement("a bin needs at least one item".into()));
        }
        let volume: u64 = items.iter().map(|&(_, s)| s as u64).sum();
        if items.iter().any(|&(_, s)| s == 0) {
            return Err(Error::IllegalPlacement("item size must be >= 1".into()));
        }
        let level = hole as u64 + volume;
        if level > self.capacity as u64 {
            return Err(Error::IllegalPlacement(format!(
                "bin level {level} exceeds capacity {}",
                self.capacity
            )));
        }
        let id = self.next_bin_id;
        self.next_bin_id += 1;
        self.item_count += items.len() as u64;
        self.total_item_volume += volume;
        self.hole_volume += hole as u64;
        self.bins.insert(
            id,
            Bin {
                id,
                hole,
                items,
                level: level as u32,
                slot: 0,
            },
        );
        self.attach(id, level as u32);
        Ok(id)
    }

    /// Removes `item` from `bin`; a bin left without items is deleted along
    /// with its hole.
    pub fn apply_departure(&mut self, bin_id: BinId, item_id: ItemId) -> Result<()> {
        let bin = self.bins.get_mut(&bin_id).ok_or(Error::UnknownBin(bin_id))?;
        let pos = bin
            .items
            .iter()
            .position(|&(id, _)| id == item_id)
            .ok_or(Error::UnknownItem {
                bin: bin_id,
                item: item_id,
            })?;
        let (_, size) = bin.items.swap_remove(pos);
        let old_level = bin.level;
        bin.level -= size;
        let new_level = bin.level;
        let now_empty = bin.items.is_empty();
        let hole = bin.hole;
        self.total_item_volume -= size as u64;
        self.item_count -= 1;
        self.detach(bin_id, old_level);
        if now_empty {
            self.bins.remove(&bin_id);
            self.hole_volume -= hole as u64;
        } else {
            self.attach(bin_id, new_level);
        }
        Ok(())
    }

    fn attach(&mut self, id: BinId, level: u32) {
        let list = &mut self.level_index[level as usize];
        let slot = list.len();
        list.push(id);
        self.bins.get_mut(&id).expect("bin exists").slot = slot;
        self.profile.increment(level);
    }

    fn detach(&mut self, id: BinId, level: u32) {
        let slot = self.bins[&id].slot;
        let list = &mut self.level_index[level as usize];
        debug_assert_eq!(list[slot], id);
        list.swap_remove(slot);
        if let Some(&moved) = list.get(slot) {
            self.bins.get_mut(&moved).expect("bin exists").slot = slot;
        }
        self.profile.decrement(level);
    }

    /// Full structural audit, `O(bins + items)`.
    pub fn check_consistency(&self) -> Result<()> {
        let mut volume = 0u64;
        let mut items = 0u64;
        let mut holes = 0u64;
        for h in 0..=self.capacity {
            let listed = self.level_index[h as usize].len() as u64;
            if listed != self.profile.count(h) {
                return Err(Error::Invariant(format!(
                    "level {h}: profile says {} bins, index holds {listed}",
                    self.profile.count(h)
                )));
            }
            for (slot, id) in self.level_index[h as usize].iter().enumerate() {
                let bin = self
                    .bins
                    .get(id)
                    .ok_or_else(|| Error::Invariant(format!("indexed bin {id} missing")))?;
                if bin.level != h || bin.slot != slot {
                    return Err(Error::Invariant(format!("bin {id} indexed at wrong slot")));
                }
            }
        }
        for bin in self.bins.values() {
            let v: u64 = bin.items.iter().map(|&(_, s)| s as u64).sum();
            if bin.items.is_empty() {
                return Err(Error::Invariant(format!("empty bin {} retained", bin.id)));
            }
            if bin.hole as u64 + v != bin.level as u64 || bin.level > self.capacity {
                return Err(Error::Invariant(format!("bin {} level mismatch", bin.id)));
            }
            volume += v;
            items += bin.items.len() as u64;
            holes += bin.hole as u64;
        }
        if volume != self.total_item_volume || items != self.item_count || holes != self.hole_volume
        {
            return Err(Error::Invariant("aggregate counters out of sync".into()));
        }
        if self.profile.total_bins() != self.bins.len() as u64 {
            return Err(Error::Invariant("profile total differs from bin count".into()));
        }
        Ok(())
    }
}

impl fmt::Display for WasteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gap_waste={} true_waste={} hole_volume={}",
            self.gap_waste, self.true_waste, self.hole_volume
        )
    }
}
