//! Per-instance attribute-combination enumeration, co-occurrence indices,
//! and the combination universe.
//!
//! Counting uses containment semantics: `counts[m][g]` is the number of
//! instances with group `g` whose attribute set is a superset of `m`. The
//! restriction to single attributes then agrees with single-attribute
//! co-occurrence counts, which count instances containing an attribute
//! among others.

use std::collections::HashMap;

use rayon::prelude::*;
use rustc_hash::FxBuildHasher;

use crate::error::{Error, Result};
use crate::model::{AttrId, AttributeSet, Dataset, GroupId};

/// Default per-instance attribute cap; enumeration is O(2^k) in the
/// per-instance attribute count k, so a blowup fails loudly instead of
/// silently grinding.
pub const DEFAULT_INSTANCE_CAP: usize = 20;

/// Canonical nonempty attribute subset used as a co-occurrence unit.
///
/// Stored as a compact bit set when the vocabulary fits in 64 attributes and
/// as a sorted id tuple otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CombinationKey {
    Bits(u64),
    Ids(Box<[AttrId]>),
}

impl CombinationKey {
    /// Build a canonical key. `n` is the attribute vocabulary size and picks
    /// the representation, so keys from one dataset always compare equal
    /// structurally.
    pub fn new(ids: impl IntoIterator<Item = AttrId>, n: usize) -> Self {
        let mut ids: Vec<AttrId> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        assert!(!ids.is_empty(), "combination keys are nonempty");
        if n <= 64 {
            CombinationKey::Bits(ids.iter().fold(0u64, |m, &id| m | (1u64 << id)))
        } else {
            CombinationKey::Ids(ids.into_boxed_slice())
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CombinationKey::Bits(mask) => mask.count_ones() as usize,
            CombinationKey::Ids(ids) => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    /// Member attribute ids in ascending order.
    pub fn ids(&self) -> Vec<AttrId> {
        match self {
            CombinationKey::Bits(mask) => {
                let mut out = Vec::with_capacity(mask.count_ones() as usize);
                let mut m = *mask;
                while m != 0 {
                    out.push(m.trailing_zeros());
                    m &= m - 1;
                }
                out
            }
            CombinationKey::Ids(ids) => ids.to_vec(),
        }
    }

    /// Containment test against an instance's attribute set.
    pub fn is_contained_in(&self, attrs: &AttributeSet) -> bool {
        match self {
            CombinationKey::Bits(mask) => match attrs.bit_mask() {
                Some(am) => am & mask == *mask,
                None => self.ids().iter().all(|&id| attrs.contains(id)),
            },
            CombinationKey::Ids(ids) => attrs.contains_all(ids),
        }
    }
}

impl PartialOrd for CombinationKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CombinationKey {
    /// Canonical order: size ascending, then member ids lexicographically.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.ids().cmp(&other.ids()))
    }
}

/// Size bounds for enumeration; `max = 0` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBounds {
    pub min: usize,
    pub max: usize,
}

impl SizeBounds {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min < 1 {
            return Err(Error::InvalidConfig("min_size must be >= 1".into()));
        }
        if max != 0 && max < min {
            return Err(Error::InvalidConfig(format!(
                "max_size {max} < min_size {min}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn unbounded() -> Self {
        Self { min: 1, max: 0 }
    }

    fn effective_max(&self, k: usize) -> usize {
        if self.max == 0 {
            k
        } else {
            self.max.min(k)
        }
    }

    pub fn admits(&self, size: usize) -> bool {
        size >= self.min && (self.max == 0 || size <= self.max)
    }
}

fn check_cap(attrs: &AttributeSet, cap: usize, id: &str) -> Result<()> {
    if attrs.len() > cap {
        return Err(Error::AttributeCapExceeded {
            id: id.to_string(),
            count: attrs.len(),
            cap,
        });
    }
    Ok(())
}

/// Visit every subset of `attrs` with size inside `bounds`, in canonical form.
fn for_each_combination(
    attrs: &AttributeSet,
    bounds: SizeBounds,
    n: usize,
    mut f: impl FnMut(CombinationKey),
) {
    let k = attrs.len();
    if k == 0 || bounds.min > k {
        return;
    }
    let lo = bounds.min as u32;
    let hi = bounds.effective_max(k) as u32;
    let ids = attrs.ids();
    if n <= 64 {
        // Local subset mask over the k member positions, scattered to the
        // global attribute bit positions.
        let bits: Vec<u64> = ids.iter().map(|&id| 1u64 << id).collect();
        for local in 1u64..(1u64 << k) {
            let size = local.count_ones();
            if size < lo || size > hi {
                continue;
            }
            let mut mask = 0u64;
            let mut m = local;
            while m != 0 {
                mask |= bits[m.trailing_zeros() as usize];
                m &= m - 1;
            }
            f(CombinationKey::Bits(mask));
        }
    } else {
        for local in 1u64..(1u64 << k) {
            let size = local.count_ones();
            if size < lo || size > hi {
                continue;
            }
            let mut members = Vec::with_capacity(size as usize);
            let mut m = local;
            while m != 0 {
                members.push(ids[m.trailing_zeros() as usize]);
                m &= m - 1;
            }
            members.sort_unstable();
            f(CombinationKey::Ids(members.into_boxed_slice()));
        }
    }
}

/// Enumerate the subsets of `attrs` with size in `[min, max]`, each canonical,
/// no repeats. Errors when `attrs` exceeds `cap`.
pub fn enumerate_combinations(
    attrs: &AttributeSet,
    bounds: SizeBounds,
    cap: usize,
    n: usize,
) -> Result<Vec<CombinationKey>> {
    check_cap(attrs, cap, "<anonymous>")?;
    let mut out = Vec::new();
    for_each_combination(attrs, bounds, n, |k| out.push(k));
    Ok(out)
}

type CountMap = HashMap<CombinationKey, Box<[u64]>, FxBuildHasher>;

/// Map from combination to per-group counts for one dataset view.
#[derive(Debug, Clone)]
pub struct CooccurrenceIndex {
    counts: CountMap,
    group_totals: Vec<u64>,
    total: u64,
    size_bounds: SizeBounds,
    n: usize,
}

impl CooccurrenceIndex {
    /// Per-group counts for `m`, if `m` occurs at all in this view.
    pub fn counts(&self, m: &CombinationKey) -> Option<&[u64]> {
        self.counts.get(m).map(|v| &v[..])
    }

    /// Total occurrences of `m` summed over groups.
    pub fn total_count(&self, m: &CombinationKey) -> u64 {
        self.counts(m).map_or(0, |v| v.iter().sum())
    }

    /// Instances per group, `P_train(g=1)`'s numerator.
    pub fn group_totals(&self) -> &[u64] {
        &self.group_totals
    }

    /// Total instance count.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn size_bounds(&self) -> SizeBounds {
        self.size_bounds
    }

    /// Attribute vocabulary size the index was built against.
    pub fn vocab_size(&self) -> usize {
        self.n
    }

    pub fn num_groups(&self) -> usize {
        self.group_totals.len()
    }

    pub fn num_keys(&self) -> usize {
        self.counts.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &CombinationKey> {
        self.counts.keys()
    }

    fn merge(mut self, other: CooccurrenceIndex) -> CooccurrenceIndex {
        for (k, v) in other.counts {
            match self.counts.entry(k) {
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    for (a, b) in e.get_mut().iter_mut().zip(v.iter()) {
                        *a += b;
                    }
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(v);
                }
            }
        }
        for (a, b) in self.group_totals.iter_mut().zip(other.group_totals) {
            *a += b;
        }
        self.total += other.total;
        self
    }

    /// Debug/golden-test dump: keys as sorted attribute-name arrays with
    /// per-group counts, ordered canonically.
    pub fn to_json(
        &self,
        attr_names: &[String],
        group_names: &[String],
    ) -> serde_json::Value {
        let mut keys: Vec<&CombinationKey> = self.counts.keys().collect();
        keys.sort();
        let entries: Vec<serde_json::Value> = keys
            .iter()
            .map(|k| {
                let names: Vec<&str> = k
                    .ids()
                    .iter()
                    .map(|&id| attr_names[id as usize].as_str())
                    .collect();
                let counts: serde_json::Map<String, serde_json::Value> = group_names
                    .iter()
                    .zip(self.counts[*k].iter())
                    .map(|(g, &c)| (g.clone(), c.into()))
                    .collect();
                serde_json::json!({ "attributes": names, "counts": counts })
            })
            .collect();
        serde_json::json!({
            "group_totals": group_names
                .iter()
                .zip(self.group_totals.iter())
                .map(|(g, &c)| (g.clone(), serde_json::Value::from(c)))
                .collect::<serde_json::Map<_, _>>(),
            "combinations": entries,
        })
    }
}

/// Builds co-occurrence indices over (group, attribute-set) views.
#[derive(Debug, Clone, Copy)]
pub struct IndexBuilder {
    pub bounds: SizeBounds,
    pub instance_cap: usize,
    /// Below this many view pairs the build stays single-threaded.
    parallel_threshold: usize,
}

impl IndexBuilder {
    pub fn new(bounds: SizeBounds) -> Self {
        Self {
            bounds,
            instance_cap: DEFAULT_INSTANCE_CAP,
            parallel_threshold: 4096,
        }
    }

    pub fn with_instance_cap(mut self, cap: usize) -> Self {
        self.instance_cap = cap;
        self
    }

    /// Index a dataset: groups and attributes both come from its instances.
    pub fn build(&self, ds: &Dataset) -> Result<CooccurrenceIndex> {
        let pairs: Vec<(GroupId, &AttributeSet, &str)> = ds
            .instances()
            .iter()
            .map(|i| (i.group, &i.attributes, i.id.as_str()))
            .collect();
        self.build_pairs(ds.group_vocab().len(), ds.attr_vocab().len(), &pairs)
    }

    /// Index a cross view: group labels from one dataset, attribute sets from
    /// another (instances aligned by position). Needed by the directional
    /// metrics, which condition ground-truth labels on predicted ones.
    pub fn build_cross(
        &self,
        groups_from: &Dataset,
        attrs_from: &Dataset,
    ) -> Result<CooccurrenceIndex> {
        assert_eq!(groups_from.len(), attrs_from.len(), "views must be aligned");
        let pairs: Vec<(GroupId, &AttributeSet, &str)> = groups_from
            .instances()
            .iter()
            .zip(attrs_from.instances())
            .map(|(g, a)| (g.group, &a.attributes, a.id.as_str()))
            .collect();
        self.build_pairs(
            groups_from.group_vocab().len(),
            attrs_from.attr_vocab().len(),
            &pairs,
        )
    }

    fn build_pairs(
        &self,
        t: usize,
        n: usize,
        pairs: &[(GroupId, &AttributeSet, &str)],
    ) -> Result<CooccurrenceIndex> {
        if pairs.is_empty() {
            return Err(Error::InvalidDataset("cannot index an empty dataset".into()));
        }
        if pairs.len() < self.parallel_threshold {
            return self.build_chunk(t, n, pairs);
        }
        // Partial indices merge by pointwise addition, so partitioning is
        // deterministic regardless of worker count.
        let chunk = pairs.len().div_ceil(rayon::current_num_threads().max(1));
        pairs
            .par_chunks(chunk.max(1))
            .map(|c| self.build_chunk(t, n, c))
            .try_reduce_with(|a, b| Ok(a.merge(b)))
            .expect("at least one chunk")
    }

    fn build_chunk(
        &self,
        t: usize,
        n: usize,
        pairs: &[(GroupId, &AttributeSet, &str)],
    ) -> Result<CooccurrenceIndex> {
        let mut counts: CountMap = CountMap::default();
        let mut group_totals = vec![0u64; t];
        for &(g, attrs, id) in pairs {
            check_cap(attrs, self.instance_cap, id)?;
            group_totals[g as usize] += 1;
            for_each_combination(attrs, self.bounds, n, |key| {
                counts
                    .entry(key)
                    .or_insert_with(|| vec![0u64; t].into_boxed_slice())[g as usize] += 1;
            });
        }
        Ok(CooccurrenceIndex {
            counts,
            group_totals,
            total: pairs.len() as u64,
            size_bounds: self.bounds,
            n,
        })
    }
}

/// `bias(m, g) = co-occur(m, g) / Σ_g' co-occur(m, g')`.
///
/// `None` when `m` never occurs in this view (the ratio is 0/0 there).
pub fn bias_score(idx: &CooccurrenceIndex, m: &CombinationKey, g: GroupId) -> Option<f64> {
    let counts = idx.counts(m)?;
    let denom: u64 = counts.iter().sum();
    if denom == 0 {
        return None;
    }
    Some(counts[g as usize] as f64 / denom as f64)
}

/// Quantifier over groups in the universe membership rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UniversePolicy {
    /// `m` qualifies when its total count over groups is >= 1 in both views.
    #[default]
    AnyGroup,
    /// `m` qualifies only when some single (m, g) pair has count >= 1 in both
    /// views simultaneously.
    SameGroupPair,
}

/// The combination universe: every combination co-occurring at least once in
/// both the train ground truth and the test ground truth.
#[derive(Debug, Clone)]
pub struct CombinationUniverse {
    members: Vec<CombinationKey>,
    train_totals: Vec<u64>,
    test_totals: Vec<u64>,
}

impl CombinationUniverse {
    /// Members in canonical order (size ascending, then lexicographic).
    pub fn members(&self) -> &[CombinationKey] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// (train total, test ground-truth total) for member `i`.
    pub fn provenance(&self, i: usize) -> (u64, u64) {
        (self.train_totals[i], self.test_totals[i])
    }

    /// Occupied size classes in ascending order with member index ranges.
    pub fn size_classes(&self) -> Vec<(usize, std::ops::Range<usize>)> {
        let mut out: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        for (i, m) in self.members.iter().enumerate() {
            let size = m.len();
            match out.last_mut() {
                Some((s, range)) if *s == size => range.end = i + 1,
                _ => out.push((size, i..i + 1)),
            }
        }
        out
    }
}

pub fn build_universe(
    train_idx: &CooccurrenceIndex,
    test_gt_idx: &CooccurrenceIndex,
    policy: UniversePolicy,
) -> Result<CombinationUniverse> {
    assert_eq!(
        train_idx.size_bounds(),
        test_gt_idx.size_bounds(),
        "indices must share size bounds"
    );
    assert_eq!(
        train_idx.vocab_size(),
        test_gt_idx.vocab_size(),
        "indices must share a vocabulary"
    );
    let mut members: Vec<CombinationKey> = Vec::new();
    for (key, train_counts) in &train_idx.counts {
        let Some(test_counts) = test_gt_idx.counts(key) else {
            continue;
        };
        let qualifies = match policy {
            UniversePolicy::AnyGroup => {
                train_counts.iter().sum::<u64>() >= 1 && test_counts.iter().sum::<u64>() >= 1
            }
            UniversePolicy::SameGroupPair => train_counts
                .iter()
                .zip(test_counts.iter())
                .any(|(&a, &b)| a >= 1 && b >= 1),
        };
        if qualifies {
            members.push(key.clone());
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    members.sort();
    let train_totals = members.iter().map(|m| train_idx.total_count(m)).collect();
    let test_totals = members.iter().map(|m| test_gt_idx.total_count(m)).collect();
    Ok(CombinationUniverse {
        members,
        train_totals,
        test_totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttributeVocabulary, DatasetRole, GroupVocabulary, Instance};

    fn attrs(ids: &[AttrId]) -> AttributeSet {
        ids.iter().copied().collect()
    }

    fn dataset(t: usize, n: usize, rows: &[(GroupId, &[AttrId])]) -> Dataset {
        let gv = GroupVocabulary::new((0..t).map(|g| format!("g{g}"))).unwrap();
        let av = AttributeVocabulary::new((0..n).map(|a| format!("a{}", a + 1))).unwrap();
        let instances = rows
            .iter()
            .enumerate()
            .map(|(i, &(g, ids))| Instance {
                id: format!("i{i}"),
                group: g,
                attributes: attrs(ids),
            })
            .collect();
        Dataset::new(gv, av, instances, DatasetRole::TrainGt).unwrap()
    }

    #[test]
    fn enumerate_full_powerset_of_three() {
        let keys =
            enumerate_combinations(&attrs(&[0, 1, 2]), SizeBounds::unbounded(), 20, 3).unwrap();
        assert_eq!(keys.len(), 7);
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 7);
    }

    #[test]
    fn enumerate_min_above_size_is_empty() {
        let bounds = SizeBounds::new(2, 0).unwrap();
        let keys = enumerate_combinations(&attrs(&[0]), bounds, 20, 3).unwrap();
        assert!(keys.is_empty());
    }

    #[test]
    fn enumerate_pairs_of_four() {
        let bounds = SizeBounds::new(2, 2).unwrap();
        let keys = enumerate_combinations(&attrs(&[0, 1, 2, 3]), bounds, 20, 4).unwrap();
        assert_eq!(keys.len(), 6); // C(4, 2)
        assert!(keys.iter().all(|k| k.len() == 2));
    }

    #[test]
    fn enumerate_cap_exceeded_errors() {
        let many: AttributeSet = (0..21).collect();
        let err = enumerate_combinations(&many, SizeBounds::unbounded(), 20, 64).unwrap_err();
        assert!(matches!(err, Error::AttributeCapExceeded { count: 21, .. }));
    }

    #[test]
    fn enumerate_wide_vocab_uses_id_tuples() {
        let set = attrs(&[3, 70]);
        let keys = enumerate_combinations(&set, SizeBounds::unbounded(), 20, 100).unwrap();
        assert_eq!(keys.len(), 3);
        assert!(keys.iter().all(|k| matches!(k, CombinationKey::Ids(_))));
        assert!(keys.contains(&CombinationKey::new([3, 70], 100)));
    }

    #[test]
    fn index_uniform_fixture() {
        // 10 instances all {a1, a2}, groups split 8/2.
        let rows: Vec<(GroupId, &[AttrId])> = (0..10)
            .map(|i| (if i < 8 { 0 } else { 1 }, [0u32, 1].as_slice()))
            .collect();
        let ds = dataset(2, 2, &rows);
        let idx = IndexBuilder::new(SizeBounds::unbounded()).build(&ds).unwrap();
        let pair = CombinationKey::new([0, 1], 2);
        let single = CombinationKey::new([0], 2);
        assert_eq!(idx.counts(&pair).unwrap(), &[8, 2]);
        assert_eq!(idx.counts(&single).unwrap(), &[8, 2]);
        assert_eq!(idx.group_totals(), &[8, 2]);
        assert_eq!(bias_score(&idx, &pair, 0), Some(0.8));
        assert_eq!(bias_score(&idx, &pair, 1), Some(0.2));
    }

    #[test]
    fn index_empty_attribute_set_counts_toward_totals_only() {
        let ds = dataset(2, 1, &[(0, &[0]), (1, &[])]);
        let idx = IndexBuilder::new(SizeBounds::unbounded()).build(&ds).unwrap();
        assert_eq!(idx.group_totals(), &[1, 1]);
        assert_eq!(idx.counts(&CombinationKey::new([0], 1)).unwrap(), &[1, 0]);
        assert_eq!(idx.num_keys(), 1);
    }

    #[test]
    fn bias_score_absent_key_is_undefined() {
        let ds = dataset(2, 2, &[(0, &[0]), (1, &[0])]);
        let idx = IndexBuilder::new(SizeBounds::unbounded()).build(&ds).unwrap();
        assert_eq!(bias_score(&idx, &CombinationKey::new([1], 2), 0), None);
    }

    #[test]
    fn containment_monotonicity() {
        let ds = dataset(
            2,
            3,
            &[(0, &[0, 1, 2]), (0, &[0, 1]), (1, &[0, 1, 2]), (1, &[2])],
        );
        let idx = IndexBuilder::new(SizeBounds::unbounded()).build(&ds).unwrap();
        let sub = CombinationKey::new([0, 1], 3);
        let sup = CombinationKey::new([0, 1, 2], 3);
        let sub_counts = idx.counts(&sub).unwrap();
        let sup_counts = idx.counts(&sup).unwrap();
        for g in 0..2 {
            assert!(sub_counts[g] >= sup_counts[g]);
        }
    }

    #[test]
    fn universe_intersection_and_policies() {
        let train = dataset(2, 3, &[(0, &[0, 1]), (1, &[2])]);
        let test = dataset(2, 3, &[(1, &[0, 1]), (0, &[0])]);
        let builder = IndexBuilder::new(SizeBounds::unbounded());
        let train_idx = builder.build(&train).unwrap();
        let test_idx = builder.build(&test).unwrap();

        let uni = build_universe(&train_idx, &test_idx, UniversePolicy::AnyGroup).unwrap();
        // {a1,a2} occurs in train (g0) and test (g1): included under AnyGroup.
        assert!(uni.members().contains(&CombinationKey::new([0, 1], 3)));
        // a3 occurs only in train: excluded.
        assert!(!uni.members().contains(&CombinationKey::new([2], 3)));

        let strict = build_universe(&train_idx, &test_idx, UniversePolicy::SameGroupPair).unwrap();
        // {a1,a2}: train has (m, g0), test has (m, g1); no shared pair.
        assert!(!strict.members().contains(&CombinationKey::new([0, 1], 3)));
        // a1: train (g0), test (g0) via instance (0, [a1]).
        assert!(strict.members().contains(&CombinationKey::new([0], 3)));
    }

    #[test]
    fn universe_members_are_canonically_sorted() {
        let train = dataset(2, 3, &[(0, &[0, 1, 2]), (1, &[0, 1, 2])]);
        let test = dataset(2, 3, &[(0, &[0, 1, 2]), (1, &[0])]);
        let builder = IndexBuilder::new(SizeBounds::unbounded());
        let uni = build_universe(
            &builder.build(&train).unwrap(),
            &builder.build(&test).unwrap(),
            UniversePolicy::AnyGroup,
        )
        .unwrap();
        assert_eq!(uni.len(), 7);
        let sizes: Vec<usize> = uni.members().iter().map(|m| m.len()).collect();
        assert_eq!(sizes, [1, 1, 1, 2, 2, 2, 3]);
        assert_eq!(
            uni.size_classes(),
            vec![(1, 0..3), (2, 3..6), (3, 6..7)]
        );
    }

    #[test]
    fn duplication_doubles_counts_and_preserves_bias() {
        let rows: &[(GroupId, &[AttrId])] = &[(0, &[0, 1]), (0, &[0]), (1, &[1, 2]), (1, &[0, 2])];
        let ds = dataset(2, 3, rows);
        let doubled_rows: Vec<(GroupId, &[AttrId])> =
            rows.iter().chain(rows.iter()).copied().collect();
        let doubled = dataset(2, 3, &doubled_rows);
        let builder = IndexBuilder::new(SizeBounds::unbounded());
        let idx = builder.build(&ds).unwrap();
        let idx2 = builder.build(&doubled).unwrap();
        assert_eq!(idx.num_keys(), idx2.num_keys());
        for key in idx.keys() {
            let a = idx.counts(key).unwrap();
            let b = idx2.counts(key).unwrap();
            for g in 0..2 {
                assert_eq!(2 * a[g], b[g]);
            }
            for g in 0..2u32 {
                assert_eq!(bias_score(&idx, key, g), bias_score(&idx2, key, g));
            }
        }
    }

    #[test]
    fn size_one_counts_sum_to_attribute_mass() {
        let ds = dataset(2, 4, &[(0, &[0, 1, 2]), (0, &[3]), (1, &[1]), (1, &[])]);
        let idx = IndexBuilder::new(SizeBounds::unbounded()).build(&ds).unwrap();
        let mut per_group = vec![0u64; 2];
        for key in idx.keys().filter(|k| k.len() == 1) {
            for (g, &c) in idx.counts(key).unwrap().iter().enumerate() {
                per_group[g] += c;
            }
        }
        // Sum of per-instance attribute-set sizes per group: g0: 3 + 1, g1: 1 + 0.
        assert_eq!(per_group, vec![4, 1]);
    }
}
