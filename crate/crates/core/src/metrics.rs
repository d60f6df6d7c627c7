//! The bias amplification metric families: undirected (MALS) and directional,
//! in multi-attribute and single-attribute form, with raw/absolute modes,
//! variance, per-size breakdowns, and disaggregated contributor rankings.
//!
//! All gates use strict inequalities evaluated in integer arithmetic, so
//! exact equality (a train bias of exactly `1/|G|`, or exact independence)
//! fails the gate with no floating-point ambiguity.

use serde::{Deserialize, Serialize};

use crate::cooccur::{
    bias_score, build_universe, CombinationKey, CombinationUniverse, CooccurrenceIndex,
    IndexBuilder, SizeBounds, UniversePolicy, DEFAULT_INSTANCE_CAP,
};
use crate::error::{Error, Result};
use crate::model::{EvaluationBundle, GroupId};

/// Signed (paper-original) or absolute-value aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Raw,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    MultiMals,
    MultiDirectional,
    SingleMals,
    SingleDirectional,
}

impl MetricKind {
    pub fn is_directional(self) -> bool {
        matches!(self, MetricKind::MultiDirectional | MetricKind::SingleDirectional)
    }

    pub fn is_single(self) -> bool {
        matches!(self, MetricKind::SingleMals | MetricKind::SingleDirectional)
    }
}

/// Direction of a directional metric; `None` for the MALS family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    None,
    /// Group influencing attribute prediction (G→M).
    GroupToAttr,
    /// Attributes influencing group prediction (M→G).
    AttrToGroup,
}

/// What to do with a (g, m) pair whose test-side bias score is 0/0 because
/// the model never predicts `m` with any group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedTestPolicy {
    /// Drop the pair from the numerator, keep the `|M|` normalization, and
    /// report it in `num_excluded`. Substituting a zero bias would fabricate
    /// a large negative delta.
    ContributeZeroExcluded,
    /// Normalize by the number of combinations with a defined test bias.
    Renormalize,
}

/// Which deltas enter the reported variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariancePopulation {
    /// Gate-passing, defined pairs. The MALS delta is identically zero on
    /// gate-failing pairs, so including them understates dispersion.
    ContributingPairs,
    /// Every evaluated, defined pair.
    AllPairs,
}

#[derive(Debug, Clone, Copy)]
pub struct MetricConfig {
    pub mode: Mode,
    /// Minimum combination size, `|m| >= min_size`.
    pub min_size: usize,
    /// Maximum combination size; 0 means unbounded.
    pub max_size: usize,
    /// Reported values are `scale * X`; variance is `scale * Var(unscaled delta)`.
    pub scale: f64,
    pub undefined_test_policy: UndefinedTestPolicy,
    /// `None` picks the metric default: contributing pairs for MALS,
    /// all pairs for the directional family.
    pub variance_population: Option<VariancePopulation>,
    pub universe_policy: UniversePolicy,
    pub instance_cap: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Absolute,
            min_size: 1,
            max_size: 0,
            scale: 100.0,
            undefined_test_policy: UndefinedTestPolicy::ContributeZeroExcluded,
            variance_population: None,
            universe_policy: UniversePolicy::AnyGroup,
            instance_cap: DEFAULT_INSTANCE_CAP,
        }
    }
}

impl MetricConfig {
    fn bounds(&self) -> Result<SizeBounds> {
        SizeBounds::new(self.min_size, self.max_size)
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidConfig("scale must be a positive number".into()));
        }
        self.bounds().map(|_| ())
    }
}

/// One evaluated (group, combination) pair.
#[derive(Debug, Clone)]
pub struct DeltaRecord {
    pub group: GroupId,
    pub key: CombinationKey,
    /// Unscaled delta. For MALS this is the gated change in bias score; for
    /// the directional family the change in conditional rate.
    pub delta: f64,
    /// MALS: the positive-correlation indicator. Directional: `y_gm`.
    pub gate: bool,
    /// False when the pair needed an undefined test bias; `delta` is 0 then.
    pub defined: bool,
}

#[derive(Debug, Clone)]
pub struct MetricResult {
    pub metric: MetricKind,
    pub direction: Direction,
    pub mode: Mode,
    pub scale: f64,
    /// `scale * X`.
    pub value: f64,
    /// `scale * Var(unscaled delta)` over the configured population
    /// (population variance, 1/N).
    pub variance: f64,
    /// `|M|` for multi metrics, the evaluated attribute count for single.
    pub num_combinations: usize,
    /// Evaluated (g, m) pairs, `|G| * num_combinations`.
    pub num_pairs: usize,
    /// Pairs dropped because their test bias was undefined.
    pub num_excluded: usize,
    pub deltas: Vec<DeltaRecord>,
}

/// Evaluated pairs plus the bookkeeping the aggregation step needs.
struct PairEvaluation {
    records: Vec<DeltaRecord>,
    universe: CombinationUniverse,
    /// Per universe member: is the test-side bias defined? (MALS only;
    /// directional rates are always defined by the bundle invariants.)
    test_defined: Vec<bool>,
    num_groups: usize,
}

fn check_bundle(bundle: &EvaluationBundle) -> Result<()> {
    if bundle.train.group_vocab() != bundle.test_gt.group_vocab()
        || bundle.train.attr_vocab() != bundle.test_gt.attr_vocab()
        || bundle.train.group_vocab() != bundle.test_pred.group_vocab()
        || bundle.train.attr_vocab() != bundle.test_pred.attr_vocab()
    {
        return Err(Error::InvalidDataset(
            "bundle datasets do not share vocabularies; use align_bundle".into(),
        ));
    }
    if bundle.test_gt.len() != bundle.test_pred.len() {
        return Err(Error::InvalidDataset(
            "test_gt and test_pred are not aligned".into(),
        ));
    }
    let t = bundle.train.group_vocab().len();
    for (ds, which) in [(&bundle.train, "train"), (&bundle.test_gt, "test_gt")] {
        let mut present = vec![false; t];
        for inst in ds.instances() {
            present[inst.group as usize] = true;
        }
        if !present.iter().all(|&p| p) {
            return Err(Error::InvalidDataset(format!(
                "some group never occurs in {which}"
            )));
        }
    }
    Ok(())
}

/// MALS pair evaluation: bias scores from the train ground truth against the
/// joint test-set predictions of attributes and group.
fn evaluate_mals_pairs(
    bundle: &EvaluationBundle,
    cfg: &MetricConfig,
    bounds: SizeBounds,
) -> Result<PairEvaluation> {
    let builder = IndexBuilder::new(bounds).with_instance_cap(cfg.instance_cap);
    let train_idx = builder.build(&bundle.train)?;
    let test_gt_idx = builder.build(&bundle.test_gt)?;
    let pred_idx = builder.build(&bundle.test_pred)?;
    let universe = build_universe(&train_idx, &test_gt_idx, cfg.universe_policy)?;

    let t = train_idx.num_groups();
    let mut records = Vec::with_capacity(universe.len() * t);
    let mut test_defined = Vec::with_capacity(universe.len());
    for m in universe.members() {
        let train_counts = train_idx.counts(m).expect("universe member occurs in train");
        let train_total: u64 = train_counts.iter().sum();
        let defined_at_test = pred_idx.total_count(m) > 0;
        test_defined.push(defined_at_test);
        for g in 0..t {
            // bias_train(m, g) > 1/|G|, exactly: t * count > total.
            let gate = (t as u128) * (train_counts[g] as u128) > train_total as u128;
            let (delta, defined) = if !gate {
                (0.0, true)
            } else {
                match bias_score(&pred_idx, m, g as GroupId) {
                    Some(bias_test) => {
                        let bias_train = train_counts[g] as f64 / train_total as f64;
                        (bias_test - bias_train, true)
                    }
                    None => (0.0, false),
                }
            };
            records.push(DeltaRecord {
                group: g as GroupId,
                key: m.clone(),
                delta,
                gate,
                defined,
            });
        }
    }
    Ok(PairEvaluation {
        records,
        universe,
        test_defined,
        num_groups: t,
    })
}

/// Directional pair evaluation: changes in conditional rates, gated by the
/// train-set independence test `y_gm`.
fn evaluate_directional_pairs(
    bundle: &EvaluationBundle,
    direction: Direction,
    cfg: &MetricConfig,
    bounds: SizeBounds,
) -> Result<PairEvaluation> {
    assert!(
        matches!(direction, Direction::GroupToAttr | Direction::AttrToGroup),
        "directional metrics need a direction"
    );
    let builder = IndexBuilder::new(bounds).with_instance_cap(cfg.instance_cap);
    let train_idx = builder.build(&bundle.train)?;
    let test_gt_idx = builder.build(&bundle.test_gt)?;
    let universe = build_universe(&train_idx, &test_gt_idx, cfg.universe_policy)?;

    // Cross view per direction: ground-truth conditioning labels paired with
    // the predicted event labels.
    let cross_idx = match direction {
        Direction::GroupToAttr => builder.build_cross(&bundle.test_gt, &bundle.test_pred)?,
        Direction::AttrToGroup => builder.build_cross(&bundle.test_pred, &bundle.test_gt)?,
        Direction::None => unreachable!(),
    };

    let t = train_idx.num_groups();
    let n_train = train_idx.total() as u128;
    let mut records = Vec::with_capacity(universe.len() * t);
    for m in universe.members() {
        let train_counts = train_idx.counts(m).expect("universe member occurs in train");
        let train_total: u64 = train_counts.iter().sum();
        // Counts for the test-side conditional, keyed by the direction.
        let cross_counts = cross_idx.counts(m);
        let cross_total: u64 = cross_counts.map_or(0, |c| c.iter().sum());
        for g in 0..t {
            // y_gm: P_train(g, m) > P_train(g) P_train(m), exactly:
            // N * count(g, m) > count(g) * count(m).
            let c_g = train_idx.group_totals()[g] as u128;
            let gate = n_train * (train_counts[g] as u128) > c_g * (train_total as u128);
            let delta = match direction {
                Direction::GroupToAttr => {
                    // P_test(m_hat = 1 | g = 1) - P_train(m = 1 | g = 1),
                    // conditioning on the ground-truth test group.
                    let test_g_total = cross_idx.group_totals()[g];
                    assert!(test_g_total > 0, "every group occurs in test_gt");
                    let p_test = cross_counts.map_or(0, |c| c[g]) as f64 / test_g_total as f64;
                    let train_g_total = train_idx.group_totals()[g];
                    assert!(train_g_total > 0, "every group occurs in train");
                    let p_train = train_counts[g] as f64 / train_g_total as f64;
                    p_test - p_train
                }
                Direction::AttrToGroup => {
                    // P_test(g_hat = 1 | m = 1) - P_train(g = 1 | m = 1),
                    // conditioning on the ground-truth test combination.
                    assert!(cross_total > 0, "universe member occurs in test_gt");
                    let p_test = cross_counts.map_or(0, |c| c[g]) as f64 / cross_total as f64;
                    let p_train = train_counts[g] as f64 / train_total as f64;
                    p_test - p_train
                }
                Direction::None => unreachable!(),
            };
            records.push(DeltaRecord {
                group: g as GroupId,
                key: m.clone(),
                delta,
                gate,
                defined: true,
            });
        }
    }
    let test_defined = vec![true; universe.len()];
    Ok(PairEvaluation {
        records,
        universe,
        test_defined,
        num_groups: t,
    })
}

/// Aggregate a slice of records into (value, variance, num_excluded).
///
/// `member_defined` runs parallel to the members covered by `records`
/// (records are grouped per member, `num_groups` records each).
fn aggregate(
    metric: MetricKind,
    cfg: &MetricConfig,
    records: &[DeltaRecord],
    member_defined: &[bool],
    num_groups: usize,
) -> Result<(f64, f64, usize)> {
    let num_members = member_defined.len();
    debug_assert_eq!(records.len(), num_members * num_groups);

    let f = |x: f64| match cfg.mode {
        Mode::Raw => x,
        Mode::Absolute => x.abs(),
    };

    let mut sum = 0.0;
    let mut num_excluded = 0usize;
    for rec in records {
        if !rec.defined {
            num_excluded += 1;
            continue;
        }
        let term = if metric.is_directional() {
            // y * f(delta) + (1 - y) * f(-delta)
            if rec.gate {
                f(rec.delta)
            } else {
                f(-rec.delta)
            }
        } else {
            f(rec.delta)
        };
        sum += term;
    }

    let num_defined_members = member_defined.iter().filter(|&&d| d).count();
    if num_defined_members == 0 {
        return Err(Error::AllPairsExcluded);
    }
    let member_norm = match cfg.undefined_test_policy {
        UndefinedTestPolicy::ContributeZeroExcluded => num_members,
        UndefinedTestPolicy::Renormalize => num_defined_members,
    };
    let norm = if metric.is_directional() {
        (num_groups * member_norm) as f64
    } else {
        member_norm as f64
    };
    let value = cfg.scale * sum / norm;

    let population = cfg.variance_population.unwrap_or(if metric.is_directional() {
        VariancePopulation::AllPairs
    } else {
        VariancePopulation::ContributingPairs
    });
    let deltas: Vec<f64> = records
        .iter()
        .filter(|r| {
            r.defined
                && match population {
                    VariancePopulation::ContributingPairs => r.gate,
                    VariancePopulation::AllPairs => true,
                }
        })
        .map(|r| r.delta)
        .collect();
    let variance = if deltas.is_empty() {
        0.0
    } else {
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / deltas.len() as f64;
        cfg.scale * var
    };

    Ok((value, variance, num_excluded))
}

fn finish(
    metric: MetricKind,
    direction: Direction,
    cfg: &MetricConfig,
    eval: PairEvaluation,
) -> Result<MetricResult> {
    let (value, variance, num_excluded) = aggregate(
        metric,
        cfg,
        &eval.records,
        &eval.test_defined,
        eval.num_groups,
    )?;
    Ok(MetricResult {
        metric,
        direction,
        mode: cfg.mode,
        scale: cfg.scale,
        value,
        variance,
        num_combinations: eval.universe.len(),
        num_pairs: eval.universe.len() * eval.num_groups,
        num_excluded,
        deltas: eval.records,
    })
}

/// Undirected multi-attribute bias amplification (`Multi_MALS`).
pub fn compute_multi_mals(bundle: &EvaluationBundle, cfg: &MetricConfig) -> Result<MetricResult> {
    cfg.validate()?;
    check_bundle(bundle)?;
    let eval = evaluate_mals_pairs(bundle, cfg, cfg.bounds()?)?;
    finish(MetricKind::MultiMals, Direction::None, cfg, eval)
}

/// Directional multi-attribute bias amplification (`Multi_→`).
pub fn compute_multi_directional(
    bundle: &EvaluationBundle,
    direction: Direction,
    cfg: &MetricConfig,
) -> Result<MetricResult> {
    cfg.validate()?;
    check_bundle(bundle)?;
    let eval = evaluate_directional_pairs(bundle, direction, cfg, cfg.bounds()?)?;
    finish(MetricKind::MultiDirectional, direction, cfg, eval)
}

/// Single-attribute undirected bias amplification: the multi pipeline
/// restricted to `|m| = 1`, normalized over the evaluated attributes.
pub fn compute_single_mals(bundle: &EvaluationBundle, cfg: &MetricConfig) -> Result<MetricResult> {
    cfg.validate()?;
    check_bundle(bundle)?;
    let eval = evaluate_mals_pairs(bundle, cfg, SizeBounds::new(1, 1)?)?;
    finish(MetricKind::SingleMals, Direction::None, cfg, eval)
}

/// Single-attribute directional bias amplification.
pub fn compute_single_directional(
    bundle: &EvaluationBundle,
    direction: Direction,
    cfg: &MetricConfig,
) -> Result<MetricResult> {
    cfg.validate()?;
    check_bundle(bundle)?;
    let eval = evaluate_directional_pairs(bundle, direction, cfg, SizeBounds::new(1, 1)?)?;
    finish(MetricKind::SingleDirectional, direction, cfg, eval)
}

/// Convenience dispatch over the metric kinds.
pub fn compute_metric(
    bundle: &EvaluationBundle,
    metric: MetricKind,
    direction: Direction,
    cfg: &MetricConfig,
) -> Result<MetricResult> {
    match metric {
        MetricKind::MultiMals => compute_multi_mals(bundle, cfg),
        MetricKind::MultiDirectional => compute_multi_directional(bundle, direction, cfg),
        MetricKind::SingleMals => compute_single_mals(bundle, cfg),
        MetricKind::SingleDirectional => compute_single_directional(bundle, direction, cfg),
    }
}

/// One row of a per-size breakdown.
#[derive(Debug, Clone)]
pub struct SizeBreakdownRow {
    pub size: usize,
    pub num_combinations: usize,
    pub value: f64,
    pub variance: f64,
    pub num_excluded: usize,
}

/// Per-size-class view of a metric: one row per occupied `|m|`, each
/// normalized within its class. The union of the class universes is the full
/// universe.
pub fn size_breakdown(
    bundle: &EvaluationBundle,
    metric: MetricKind,
    direction: Direction,
    cfg: &MetricConfig,
) -> Result<Vec<SizeBreakdownRow>> {
    cfg.validate()?;
    check_bundle(bundle)?;
    let bounds = if metric.is_single() {
        SizeBounds::new(1, 1)?
    } else {
        cfg.bounds()?
    };
    let eval = if metric.is_directional() {
        evaluate_directional_pairs(bundle, direction, cfg, bounds)?
    } else {
        evaluate_mals_pairs(bundle, cfg, bounds)?
    };
    let t = eval.num_groups;
    let mut rows = Vec::new();
    for (size, member_range) in eval.universe.size_classes() {
        let records = &eval.records[member_range.start * t..member_range.end * t];
        let member_defined = &eval.test_defined[member_range.clone()];
        let (value, variance, num_excluded) =
            aggregate(metric, cfg, records, member_defined, t)?;
        rows.push(SizeBreakdownRow {
            size,
            num_combinations: member_range.len(),
            value,
            variance,
            num_excluded,
        });
    }
    Ok(rows)
}

/// One ranked contributor: a (combination, group) pair with its mean scaled
/// absolute delta over the supplied prediction sets.
#[derive(Debug, Clone)]
pub struct Contributor {
    pub key: CombinationKey,
    pub group: GroupId,
    /// Mean of `scale * |delta|` over prediction sets.
    pub mean_abs_delta: f64,
    /// Population standard deviation of `scale * |delta|` over sets.
    pub dispersion: f64,
}

/// Rank (combination, group) pairs by mean scaled `|delta|`, descending.
///
/// `extra_predictions` supplies further prediction sets (e.g. repeated runs);
/// the ranking then averages over the bundle's predictions plus these. Ties
/// break by (size ascending, lexicographic key, group id).
pub fn rank_contributors(
    bundle: &EvaluationBundle,
    metric: MetricKind,
    direction: Direction,
    cfg: &MetricConfig,
    k: usize,
    extra_predictions: &[crate::model::Dataset],
) -> Result<Vec<Contributor>> {
    if k == 0 {
        return Err(Error::InvalidConfig("top-k must be >= 1".into()));
    }
    cfg.validate()?;
    check_bundle(bundle)?;
    let bounds = if metric.is_single() {
        SizeBounds::new(1, 1)?
    } else {
        cfg.bounds()?
    };
    let evaluate = |b: &EvaluationBundle| -> Result<PairEvaluation> {
        if metric.is_directional() {
            evaluate_directional_pairs(b, direction, cfg, bounds)
        } else {
            evaluate_mals_pairs(b, cfg, bounds)
        }
    };

    let base = evaluate(bundle)?;
    // One |delta| sample per prediction set for every (m, g) pair. The
    // universe depends only on train and test_gt, so pair order is stable
    // across sets.
    let mut samples: Vec<Vec<f64>> = base
        .records
        .iter()
        .map(|r| vec![cfg.scale * r.delta.abs()])
        .collect();
    for pred in extra_predictions {
        let variant = crate::model::align_bundle(
            bundle.train.clone(),
            bundle.test_gt.clone(),
            pred.clone(),
        )?;
        let eval = evaluate(&variant)?;
        if eval.records.len() != samples.len() {
            return Err(Error::InvalidDataset(
                "extra prediction set changes the evaluated universe".into(),
            ));
        }
        for (s, r) in samples.iter_mut().zip(eval.records.iter()) {
            s.push(cfg.scale * r.delta.abs());
        }
    }

    let mut ranked: Vec<Contributor> = base
        .records
        .iter()
        .zip(samples.iter())
        .map(|(r, s)| {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64;
            Contributor {
                key: r.key.clone(),
                group: r.group,
                mean_abs_delta: mean,
                dispersion: var.sqrt(),
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.mean_abs_delta
            .partial_cmp(&a.mean_abs_delta)
            .expect("deltas are finite")
            .then_with(|| a.key.cmp(&b.key))
            .then_with(|| a.group.cmp(&b.group))
    });
    ranked.truncate(k);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        align_bundle, ingest_dataset_from_reader, Dataset, DatasetRole, IngestOptions,
    };

    fn parse(text: &str, role: DatasetRole) -> Dataset {
        ingest_dataset_from_reader(text.as_bytes(), role, &IngestOptions::default()).unwrap()
    }

    /// Rows of (group, attributes) repeated `count` times, rendered to JSONL.
    fn jsonl(prefix: &str, rows: &[(&str, &[&str], usize)]) -> String {
        let mut out = String::new();
        let mut i = 0;
        for &(group, attrs, count) in rows {
            for _ in 0..count {
                i += 1;
                let attrs = attrs
                    .iter()
                    .map(|a| format!("\"{a}\""))
                    .collect::<Vec<_>>()
                    .join(",");
                out.push_str(&format!(
                    "{{\"id\":\"{prefix}{i}\",\"group\":\"{group}\",\"attributes\":[{attrs}]}}\n"
                ));
            }
        }
        out
    }

    fn bundle(
        train: &[(&str, &[&str], usize)],
        test_gt: &[(&str, &[&str], usize)],
        test_pred: &[(&str, &[&str], usize)],
    ) -> EvaluationBundle {
        let train = parse(&jsonl("t", train), DatasetRole::TrainGt);
        let gt = parse(&jsonl("e", test_gt), DatasetRole::TestGt);
        let pred = parse(&jsonl("e", test_pred), DatasetRole::TestPred);
        align_bundle(train, gt, pred).unwrap()
    }

    /// Train bias 0.8 for the lone attribute; predictions shift it to 0.9.
    fn single_pair_bundle() -> EvaluationBundle {
        bundle(
            &[("g0", &["a1"], 8), ("g1", &["a1"], 2)],
            &[("g0", &["a1"], 8), ("g1", &["a1"], 2)],
            &[("g0", &["a1"], 9), ("g1", &["a1"], 1)],
        )
    }

    #[test]
    fn mals_single_pair_arithmetic() {
        let b = single_pair_bundle();
        for mode in [Mode::Raw, Mode::Absolute] {
            let cfg = MetricConfig {
                mode,
                ..Default::default()
            };
            let r = compute_multi_mals(&b, &cfg).unwrap();
            // Only g0 passes the gate (0.8 > 0.5); delta = 0.9 - 0.8 = 0.1,
            // one combination, so X = 0.1 and value = 10 at scale 100.
            assert!((r.value - 10.0).abs() < 1e-9, "value = {}", r.value);
            assert_eq!(r.num_combinations, 1);
            assert_eq!(r.num_pairs, 2);
            assert_eq!(r.num_excluded, 0);
        }
    }

    #[test]
    fn mals_fixed_point_is_zero() {
        let b = bundle(
            &[("g0", &["a1", "a2"], 8), ("g1", &["a1", "a2"], 2)],
            &[("g0", &["a1", "a2"], 4), ("g1", &["a1", "a2"], 1)],
            &[("g0", &["a1", "a2"], 4), ("g1", &["a1", "a2"], 1)],
        );
        let r = compute_multi_mals(&b, &MetricConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.variance, 0.0);
    }

    #[test]
    fn mals_gate_is_strict_at_exactly_balanced() {
        // Train bias exactly 0.5 everywhere: every indicator fails, so the
        // value is 0 no matter what the model predicts.
        let b = bundle(
            &[("g0", &["a1"], 5), ("g1", &["a1"], 5)],
            &[("g0", &["a1"], 2), ("g1", &["a1"], 2)],
            &[("g0", &["a1"], 4), ("g1", &[], 0), ("g1", &["a1"], 0), ("g1", &[], 4)],
        );
        let r = compute_single_mals(&b, &MetricConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn mals_undefined_test_policy() {
        // a2 never predicted: its gate-passing pair is excluded.
        let b = bundle(
            &[("g0", &["a1"], 8), ("g1", &["a1"], 2), ("g0", &["a2"], 3), ("g1", &["a2"], 1)],
            &[("g0", &["a1", "a2"], 4), ("g1", &["a1"], 1)],
            &[("g0", &["a1"], 4), ("g1", &["a1"], 1)],
        );
        let cfg = MetricConfig::default();
        let r = compute_multi_mals(&b, &cfg).unwrap();
        // Universe: {a1}, {a2}. a1 delta: bias stays 0.8 → 0. a2 excluded.
        assert_eq!(r.num_combinations, 2);
        assert_eq!(r.num_excluded, 1);
        assert_eq!(r.value, 0.0);

        let renorm = MetricConfig {
            undefined_test_policy: UndefinedTestPolicy::Renormalize,
            ..cfg
        };
        let r2 = compute_multi_mals(&b, &renorm).unwrap();
        assert_eq!(r2.num_excluded, 1);
        assert_eq!(r2.value, 0.0); // same numerator, denominator 1 instead of 2
    }

    #[test]
    fn mals_all_pairs_excluded_errors() {
        // Prediction never emits any universe combination.
        let b = bundle(
            &[("g0", &["a1"], 8), ("g1", &["a1"], 2), ("g0", &["a2"], 1), ("g1", &["a2"], 1)],
            &[("g0", &["a1"], 4), ("g1", &["a1"], 1)],
            &[("g0", &["a2"], 4), ("g1", &["a2"], 1)],
        );
        let err = compute_multi_mals(&b, &MetricConfig::default()).unwrap_err();
        assert!(matches!(err, Error::AllPairsExcluded));
    }

    #[test]
    fn directional_fixed_point_is_zero() {
        // Predictions identical to test ground truth, and test ground truth
        // distributed exactly as the train conditionals.
        let b = bundle(
            &[("g0", &["a1"], 6), ("g0", &[], 2), ("g1", &["a1"], 2), ("g1", &[], 6)],
            &[("g0", &["a1"], 3), ("g0", &[], 1), ("g1", &["a1"], 1), ("g1", &[], 3)],
            &[("g0", &["a1"], 3), ("g0", &[], 1), ("g1", &["a1"], 1), ("g1", &[], 3)],
        );
        for direction in [Direction::GroupToAttr, Direction::AttrToGroup] {
            for mode in [Mode::Raw, Mode::Absolute] {
                let cfg = MetricConfig {
                    mode,
                    ..Default::default()
                };
                let r = compute_multi_directional(&b, direction, &cfg).unwrap();
                assert!(r.value.abs() < 1e-12, "{direction:?} {mode:?}: {}", r.value);
            }
        }
    }

    #[test]
    fn directional_gate_fails_under_exact_independence() {
        // P(g, a) = P(g) P(a) exactly: 2x2 balanced joint.
        let b = bundle(
            &[
                ("g0", &["a1"], 2),
                ("g0", &[], 2),
                ("g1", &["a1"], 2),
                ("g1", &[], 2),
            ],
            &[("g0", &["a1"], 1), ("g1", &["a1"], 1), ("g0", &[], 1), ("g1", &[], 1)],
            &[("g0", &["a1"], 1), ("g1", &["a1"], 1), ("g0", &[], 1), ("g1", &[], 1)],
        );
        let cfg = MetricConfig {
            mode: Mode::Raw,
            ..Default::default()
        };
        let r = compute_multi_directional(&b, Direction::GroupToAttr, &cfg).unwrap();
        assert!(r.deltas.iter().all(|d| !d.gate));
    }

    #[test]
    fn absolute_at_least_raw() {
        let b = single_pair_bundle();
        for metric in [MetricKind::MultiMals, MetricKind::SingleMals] {
            let raw = compute_metric(
                &b,
                metric,
                Direction::None,
                &MetricConfig { mode: Mode::Raw, ..Default::default() },
            )
            .unwrap();
            let abs = compute_metric(
                &b,
                metric,
                Direction::None,
                &MetricConfig { mode: Mode::Absolute, ..Default::default() },
            )
            .unwrap();
            assert!(abs.value >= raw.value);
            assert!(abs.value >= 0.0);
        }
    }

    #[test]
    fn prediction_perfection_is_not_zero() {
        // Train bias 0.8, test-gt bias 0.9, predictions equal to test gt:
        // amplification is scale * 0.1 for the single contributing pair.
        let b = bundle(
            &[("g0", &["a1"], 8), ("g1", &["a1"], 2)],
            &[("g0", &["a1"], 9), ("g1", &["a1"], 1)],
            &[("g0", &["a1"], 9), ("g1", &["a1"], 1)],
        );
        let r = compute_multi_mals(&b, &MetricConfig::default()).unwrap();
        assert!((r.value - 10.0).abs() < 1e-9);
    }

    #[test]
    fn single_equals_multi_restricted_to_size_one() {
        let b = bundle(
            &[
                ("g0", &["a1", "a2"], 5),
                ("g1", &["a2"], 3),
                ("g0", &["a3"], 2),
                ("g1", &["a1", "a3"], 4),
            ],
            &[("g0", &["a1", "a2"], 3), ("g1", &["a3"], 2), ("g1", &["a1"], 1)],
            &[("g0", &["a1"], 3), ("g1", &["a2", "a3"], 2), ("g1", &["a1"], 1)],
        );
        for mode in [Mode::Raw, Mode::Absolute] {
            let restricted = MetricConfig {
                mode,
                min_size: 1,
                max_size: 1,
                ..Default::default()
            };
            let multi = compute_multi_mals(&b, &restricted).unwrap();
            let single = compute_single_mals(&b, &restricted).unwrap();
            assert!((multi.value - single.value).abs() < 1e-15);
            assert!((multi.variance - single.variance).abs() < 1e-15);
            for direction in [Direction::GroupToAttr, Direction::AttrToGroup] {
                let m = compute_multi_directional(&b, direction, &restricted).unwrap();
                let s = compute_single_directional(&b, direction, &restricted).unwrap();
                assert!((m.value - s.value).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn size_breakdown_covers_universe_and_recombines() {
        let b = bundle(
            &[
                ("g0", &["a1", "a2", "a3"], 4),
                ("g1", &["a1", "a2", "a3"], 1),
                ("g0", &["a1"], 2),
                ("g1", &["a2"], 3),
            ],
            &[("g0", &["a1", "a2", "a3"], 2), ("g1", &["a1", "a2", "a3"], 2)],
            &[("g0", &["a1", "a2", "a3"], 3), ("g1", &["a1", "a2"], 1)],
        );
        let cfg = MetricConfig::default();
        let rows = size_breakdown(&b, MetricKind::MultiMals, Direction::None, &cfg).unwrap();
        let full = compute_multi_mals(&b, &cfg).unwrap();
        let sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
        assert_eq!(sizes, [1, 2, 3]);
        let counts: Vec<usize> = rows.iter().map(|r| r.num_combinations).collect();
        assert_eq!(counts, [3, 3, 1]);
        assert_eq!(counts.iter().sum::<usize>(), full.num_combinations);
        // Reweighting per-class values by class counts reproduces the full value.
        let recombined: f64 = rows
            .iter()
            .map(|r| r.value * r.num_combinations as f64)
            .sum::<f64>()
            / full.num_combinations as f64;
        assert!((recombined - full.value).abs() < 1e-12);
    }

    #[test]
    fn size_breakdown_balanced_class_is_zero() {
        let b = bundle(
            &[
                ("g0", &["a1"], 3),
                ("g1", &["a1"], 3),
                ("g0", &["a2", "a3"], 4),
                ("g1", &["a2", "a3"], 1),
            ],
            &[("g0", &["a1"], 1), ("g1", &["a2", "a3"], 1)],
            &[("g0", &["a1"], 1), ("g1", &["a2", "a3"], 1)],
        );
        let rows =
            size_breakdown(&b, MetricKind::MultiMals, Direction::None, &MetricConfig::default())
                .unwrap();
        let size1 = rows.iter().find(|r| r.size == 1).unwrap();
        assert_eq!(size1.value, 0.0); // a1 balanced; a2, a3 keep bias 0.8
    }

    #[test]
    fn rank_contributors_sorts_and_breaks_ties() {
        let b = bundle(
            &[
                ("g0", &["a1"], 8),
                ("g1", &["a1"], 2),
                ("g0", &["a2"], 7),
                ("g1", &["a2"], 3),
            ],
            &[("g0", &["a1", "a2"], 5), ("g1", &["a1", "a2"], 5)],
            &[("g0", &["a1"], 6), ("g0", &["a2"], 2), ("g1", &["a2"], 2)],
        );
        let top = rank_contributors(
            &b,
            MetricKind::SingleMals,
            Direction::None,
            &MetricConfig::default(),
            3,
            &[],
        )
        .unwrap();
        assert!(top.len() <= 3);
        for pair in top.windows(2) {
            assert!(pair[0].mean_abs_delta >= pair[1].mean_abs_delta);
        }
    }

    #[test]
    fn rank_contributors_means_over_prediction_sets() {
        let train: &[(&str, &[&str], usize)] = &[
            ("g0", &["a1"], 8),
            ("g1", &["a1"], 2),
            ("g0", &["a2"], 8),
            ("g1", &["a2"], 2),
        ];
        let gt: &[(&str, &[&str], usize)] = &[("g0", &["a1", "a2"], 5), ("g1", &["a1", "a2"], 5)];
        // Set A pushes a1 hard and leaves a2 at train bias; set B swaps them.
        let pred_a: &[(&str, &[&str], usize)] =
            &[("g0", &["a1"], 10), ("g0", &["a2"], 4), ("g1", &["a2"], 1)];
        let pred_b: &[(&str, &[&str], usize)] =
            &[("g0", &["a2"], 10), ("g0", &["a1"], 4), ("g1", &["a1"], 1)];
        let b = bundle(train, gt, pred_a);
        let extra = parse(&jsonl("e", pred_b), DatasetRole::TestPred);
        let top = rank_contributors(
            &b,
            MetricKind::SingleMals,
            Direction::None,
            &MetricConfig::default(),
            2,
            &[extra],
        )
        .unwrap();
        // Extremes swap between sets, so the two attributes tie on the mean
        // and the deterministic tie-break orders a1 before a2.
        assert!((top[0].mean_abs_delta - top[1].mean_abs_delta).abs() < 1e-9);
        assert_eq!(top[0].key.ids(), vec![0]);
        assert!(top[0].dispersion > 0.0);
    }
}
