//! Domain types, dataset ingestion/validation, and vocabulary support filtering.
//!
//! Datasets are read from UTF-8 JSON Lines, one object per line:
//! `{"id": string, "group": string, "attributes": [string, ...]}`.
//! Attribute order within a record is irrelevant; duplicates within one
//! record are collapsed. All types are immutable after construction.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense integer identifier of a group membership label.
pub type GroupId = u32;
/// Dense integer identifier of an attribute label.
pub type AttrId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
struct LabelTable {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelTable {
    fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidVocabulary("empty label name".into()));
            }
            if index.insert(name.clone(), i as u32).is_some() {
                return Err(Error::InvalidVocabulary(format!("duplicate label {name:?}")));
            }
        }
        Ok(Self { names, index })
    }

    fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }
}

/// Ordered set of group membership labels with dense ids `0..t-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupVocabulary {
    table: LabelTable,
}

impl GroupVocabulary {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let table = LabelTable::new(names.into_iter().map(Into::into).collect())?;
        if table.names.len() < 2 {
            return Err(Error::InvalidVocabulary(
                "group vocabulary needs at least 2 groups".into(),
            ));
        }
        Ok(Self { table })
    }

    /// Number of groups, `t`.
    pub fn len(&self) -> usize {
        self.table.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // t >= 2 by construction
    }

    pub fn id(&self, name: &str) -> Option<GroupId> {
        self.table.id(name)
    }

    pub fn name(&self, id: GroupId) -> &str {
        &self.table.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.table.names
    }
}

/// Ordered set of attribute labels with dense ids `0..n-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeVocabulary {
    table: LabelTable,
}

impl AttributeVocabulary {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let table = LabelTable::new(names.into_iter().map(Into::into).collect())?;
        if table.names.is_empty() {
            return Err(Error::InvalidVocabulary(
                "attribute vocabulary needs at least 1 attribute".into(),
            ));
        }
        Ok(Self { table })
    }

    /// Number of attributes, `n`.
    pub fn len(&self) -> usize {
        self.table.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<AttrId> {
        self.table.id(name)
    }

    pub fn name(&self, id: AttrId) -> &str {
        &self.table.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.table.names
    }
}

/// Canonical set of attribute ids for one instance (sorted ascending, no duplicates).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeSet {
    ids: Vec<AttrId>,
}

impl AttributeSet {
    pub fn new(mut ids: Vec<AttrId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self { ids }
    }

    pub fn empty() -> Self {
        Self { ids: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: AttrId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// Superset test: does this set contain every id in `other`?
    pub fn contains_all(&self, other: &[AttrId]) -> bool {
        other.iter().all(|id| self.contains(*id))
    }

    pub fn ids(&self) -> &[AttrId] {
        &self.ids
    }

    /// Bit mask over attribute ids; valid only when all ids are < 64.
    pub fn bit_mask(&self) -> Option<u64> {
        if self.ids.last().is_some_and(|&last| last >= 64) {
            return None;
        }
        Some(self.ids.iter().fold(0u64, |m, &id| m | (1u64 << id)))
    }
}

impl FromIterator<AttrId> for AttributeSet {
    fn from_iter<I: IntoIterator<Item = AttrId>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Which view of the evaluation a dataset represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    TrainGt,
    TestGt,
    TestPred,
}

/// One annotated instance: an opaque id, exactly one group, and an attribute set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub group: GroupId,
    pub attributes: AttributeSet,
}

/// An ordered collection of instances with its vocabularies and role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    group_vocab: GroupVocabulary,
    attr_vocab: AttributeVocabulary,
    instances: Vec<Instance>,
    role: DatasetRole,
}

impl Dataset {
    pub fn new(
        group_vocab: GroupVocabulary,
        attr_vocab: AttributeVocabulary,
        instances: Vec<Instance>,
        role: DatasetRole,
    ) -> Result<Self> {
        let t = group_vocab.len() as u32;
        let n = attr_vocab.len() as u32;
        let mut seen = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if inst.group >= t {
                return Err(Error::InvalidDataset(format!(
                    "instance {:?} references group id {} out of range",
                    inst.id, inst.group
                )));
            }
            if inst.attributes.ids().last().is_some_and(|&a| a >= n) {
                return Err(Error::InvalidDataset(format!(
                    "instance {:?} references an attribute id out of range",
                    inst.id
                )));
            }
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate instance id {:?}",
                    inst.id
                )));
            }
        }
        drop(seen);
        Ok(Self {
            group_vocab,
            attr_vocab,
            instances,
            role,
        })
    }

    pub fn group_vocab(&self) -> &GroupVocabulary {
        &self.group_vocab
    }

    pub fn attr_vocab(&self) -> &AttributeVocabulary {
        &self.attr_vocab
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn role(&self) -> DatasetRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Serialize to the JSON Lines instance format.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for inst in &self.instances {
            let record = RawRecord {
                id: inst.id.clone(),
                group: self.group_vocab.name(inst.group).to_string(),
                attributes: inst
                    .attributes
                    .ids()
                    .iter()
                    .map(|&a| self.attr_vocab.name(a).to_string())
                    .collect(),
            };
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_jsonl_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Rebuild this dataset against new vocabularies, remapping every id by name.
    fn remap(&self, group_vocab: &GroupVocabulary, attr_vocab: &AttributeVocabulary) -> Result<Self> {
        let group_map: Vec<GroupId> = self
            .group_vocab
            .names()
            .iter()
            .map(|name| {
                group_vocab
                    .id(name)
                    .ok_or_else(|| Error::Alignment(format!("group {name:?} missing from unified vocabulary")))
            })
            .collect::<Result<_>>()?;
        let attr_map: Vec<AttrId> = self
            .attr_vocab
            .names()
            .iter()
            .map(|name| {
                attr_vocab
                    .id(name)
                    .ok_or_else(|| Error::Alignment(format!("attribute {name:?} missing from unified vocabulary")))
            })
            .collect::<Result<_>>()?;
        let instances = self
            .instances
            .iter()
            .map(|inst| Instance {
                id: inst.id.clone(),
                group: group_map[inst.group as usize],
                attributes: inst
                    .attributes
                    .ids()
                    .iter()
                    .map(|&a| attr_map[a as usize])
                    .collect(),
            })
            .collect();
        Dataset::new(group_vocab.clone(), attr_vocab.clone(), instances, self.role)
    }

    /// Drop every attribute not in `keep` from vocabulary and instances.
    /// Instances themselves are never removed.
    fn restrict_attributes(&self, keep: &[bool]) -> Result<Self> {
        let mut new_names = Vec::new();
        let mut id_map: Vec<Option<AttrId>> = vec![None; self.attr_vocab.len()];
        for (old_id, name) in self.attr_vocab.names().iter().enumerate() {
            if keep[old_id] {
                id_map[old_id] = Some(new_names.len() as AttrId);
                new_names.push(name.clone());
            }
        }
        let attr_vocab = AttributeVocabulary::new(new_names)?;
        let instances = self
            .instances
            .iter()
            .map(|inst| Instance {
                id: inst.id.clone(),
                group: inst.group,
                attributes: inst
                    .attributes
                    .ids()
                    .iter()
                    .filter_map(|&a| id_map[a as usize])
                    .collect(),
            })
            .collect();
        Dataset::new(self.group_vocab.clone(), attr_vocab, instances, self.role)
    }
}

/// Aligned triple of train ground truth, test ground truth, and test predictions.
///
/// All three datasets share identical vocabularies; `test_gt` and `test_pred`
/// hold the same instance ids in the same order, and every group occurs at
/// least once in both `train` and `test_gt`.
#[derive(Debug, Clone)]
pub struct EvaluationBundle {
    pub train: Dataset,
    pub test_gt: Dataset,
    pub test_pred: Dataset,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    group: String,
    attributes: Vec<String>,
}

/// Optional constraints applied while ingesting a dataset.
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Validate against this vocabulary instead of building one from the file.
    pub group_vocab: Option<GroupVocabulary>,
    /// Validate against this vocabulary instead of building one from the file.
    pub attr_vocab: Option<AttributeVocabulary>,
    /// Attribute names silently dropped from every record (e.g. COCO's `person`).
    pub exclude_attributes: Vec<String>,
}

/// Parse a JSON Lines instance file into a [`Dataset`].
///
/// Vocabularies are built in order of first appearance unless supplied via
/// `opts`, in which case unknown labels are reported with their line number.
pub fn ingest_dataset(path: &Path, role: DatasetRole, opts: &IngestOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_dataset_from_reader(BufReader::new(file), role, opts)
}

pub fn ingest_dataset_from_reader<R: BufRead>(
    reader: R,
    role: DatasetRole,
    opts: &IngestOptions,
) -> Result<Dataset> {
    let excluded: HashSet<&str> = opts.exclude_attributes.iter().map(String::as_str).collect();

    let mut group_names: Vec<String> = Vec::new();
    let mut group_index: HashMap<String, GroupId> = HashMap::new();
    let mut attr_names: Vec<String> = Vec::new();
    let mut attr_index: HashMap<String, AttrId> = HashMap::new();
    if let Some(gv) = &opts.group_vocab {
        for name in gv.names() {
            group_index.insert(name.clone(), group_names.len() as GroupId);
            group_names.push(name.clone());
        }
    }
    if let Some(av) = &opts.attr_vocab {
        for name in av.names() {
            attr_index.insert(name.clone(), attr_names.len() as AttrId);
            attr_names.push(name.clone());
        }
    }

    let mut instances: Vec<Instance> = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|source| Error::Io {
            path: format!("<line {line_no}>"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        if record.id.is_empty() {
            return Err(Error::MalformedRecord {
                line: line_no,
                message: "empty instance id".into(),
            });
        }
        if !seen_ids.insert(record.id.clone()) {
            return Err(Error::DuplicateInstanceId {
                id: record.id,
                line: line_no,
            });
        }
        let group = match group_index.get(&record.group) {
            Some(&g) => g,
            None if opts.group_vocab.is_some() => {
                return Err(Error::UnknownLabel {
                    kind: "group",
                    label: record.group,
                    line: line_no,
                });
            }
            None => {
                let g = group_names.len() as GroupId;
                group_index.insert(record.group.clone(), g);
                group_names.push(record.group.clone());
                g
            }
        };
        let mut attrs = Vec::with_capacity(record.attributes.len());
        for name in &record.attributes {
            if excluded.contains(name.as_str()) {
                continue;
            }
            let a = match attr_index.get(name) {
                Some(&a) => a,
                None if opts.attr_vocab.is_some() => {
                    return Err(Error::UnknownLabel {
                        kind: "attribute",
                        label: name.clone(),
                        line: line_no,
                    });
                }
                None => {
                    let a = attr_names.len() as AttrId;
                    attr_index.insert(name.clone(), a);
                    attr_names.push(name.clone());
                    a
                }
            };
            attrs.push(a);
        }
        instances.push(Instance {
            id: record.id,
            group,
            attributes: AttributeSet::new(attrs),
        });
    }

    let group_vocab = GroupVocabulary::new(group_names)?;
    let attr_vocab = AttributeVocabulary::new(attr_names)?;
    Dataset::new(group_vocab, attr_vocab, instances, role)
}

/// Unify vocabularies by name and align `test_pred` to `test_gt` id order.
pub fn align_bundle(train: Dataset, test_gt: Dataset, test_pred: Dataset) -> Result<EvaluationBundle> {
    for (ds, want) in [
        (&train, DatasetRole::TrainGt),
        (&test_gt, DatasetRole::TestGt),
        (&test_pred, DatasetRole::TestPred),
    ] {
        if ds.role() != want {
            return Err(Error::Alignment(format!(
                "dataset role mismatch: expected {want:?}, got {:?}",
                ds.role()
            )));
        }
    }

    // Union of names, ordered by first appearance across train, test_gt, test_pred.
    let mut group_names: Vec<String> = Vec::new();
    let mut attr_names: Vec<String> = Vec::new();
    {
        let mut seen_g = HashSet::new();
        let mut seen_a = HashSet::new();
        for ds in [&train, &test_gt, &test_pred] {
            for name in ds.group_vocab().names() {
                if seen_g.insert(name.clone()) {
                    group_names.push(name.clone());
                }
            }
            for name in ds.attr_vocab().names() {
                if seen_a.insert(name.clone()) {
                    attr_names.push(name.clone());
                }
            }
        }
    }
    let group_vocab = GroupVocabulary::new(group_names)?;
    let attr_vocab = AttributeVocabulary::new(attr_names)?;

    let train = train.remap(&group_vocab, &attr_vocab)?;
    let test_gt = test_gt.remap(&group_vocab, &attr_vocab)?;
    let test_pred = test_pred.remap(&group_vocab, &attr_vocab)?;

    // test_pred must carry exactly the test_gt id set; reorder to match.
    let pred_by_id: HashMap<&str, usize> = test_pred
        .instances()
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.id.as_str(), i))
        .collect();
    let mut missing: Vec<&str> = Vec::new();
    let mut reordered = Vec::with_capacity(test_gt.len());
    for inst in test_gt.instances() {
        match pred_by_id.get(inst.id.as_str()) {
            Some(&i) => reordered.push(test_pred.instances()[i].clone()),
            None => missing.push(&inst.id),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Alignment(format!(
            "test_pred is missing ids present in test_gt: {missing:?}"
        )));
    }
    if test_pred.len() != test_gt.len() {
        let gt_ids: HashSet<&str> = test_gt.instances().iter().map(|i| i.id.as_str()).collect();
        let extra: Vec<&str> = test_pred
            .instances()
            .iter()
            .map(|i| i.id.as_str())
            .filter(|id| !gt_ids.contains(id))
            .collect();
        return Err(Error::Alignment(format!(
            "test_pred contains ids absent from test_gt: {extra:?}"
        )));
    }
    let test_pred = Dataset::new(
        group_vocab.clone(),
        attr_vocab.clone(),
        reordered,
        DatasetRole::TestPred,
    )?;

    for (ds, which) in [(&train, "train"), (&test_gt, "test_gt")] {
        let mut present = vec![false; group_vocab.len()];
        for inst in ds.instances() {
            present[inst.group as usize] = true;
        }
        if let Some(g) = present.iter().position(|p| !p) {
            return Err(Error::Alignment(format!(
                "group {:?} never occurs in {which}",
                group_vocab.name(g as GroupId)
            )));
        }
    }

    Ok(EvaluationBundle {
        train,
        test_gt,
        test_pred,
    })
}

/// Quantifier over groups for [`filter_by_support`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportScope {
    /// Keep an attribute if some group meets the threshold.
    EitherGroup,
    /// Keep an attribute only if every group meets the threshold.
    EachGroup,
}

/// Restrict the attribute vocabulary to attributes whose train-set
/// co-occurrence with groups meets `min_count` under `scope`.
///
/// Counts come from the train set only; the test views inherit the restricted
/// vocabulary. Instances are never dropped, only their attribute sets shrink.
pub fn filter_by_support(
    bundle: &EvaluationBundle,
    min_count: u64,
    scope: SupportScope,
) -> Result<EvaluationBundle> {
    if min_count < 1 {
        return Err(Error::InvalidConfig("min_count must be >= 1".into()));
    }
    let t = bundle.train.group_vocab().len();
    let n = bundle.train.attr_vocab().len();
    let mut counts = vec![0u64; n * t];
    for inst in bundle.train.instances() {
        for &a in inst.attributes.ids() {
            counts[a as usize * t + inst.group as usize] += 1;
        }
    }
    let keep: Vec<bool> = (0..n)
        .map(|a| {
            let row = &counts[a * t..(a + 1) * t];
            match scope {
                SupportScope::EitherGroup => row.iter().any(|&c| c >= min_count),
                SupportScope::EachGroup => row.iter().all(|&c| c >= min_count),
            }
        })
        .collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::EmptyVocabularyAfterFilter { min_count });
    }
    Ok(EvaluationBundle {
        train: bundle.train.restrict_attributes(&keep)?,
        test_gt: bundle.test_gt.restrict_attributes(&keep)?,
        test_pred: bundle.test_pred.restrict_attributes(&keep)?,
    })
}
