//! Tabular data ingestion and the encoded feature space.
//!
//! Raw tables (UCI `german.data` layout or generic CSV with a sidecar schema)
//! are encoded into `R^D`: numeric columns parse as reals, categorical columns
//! map to consecutive integer codes in declaration order. All geometric
//! routines downstream (support sampling, spheres, fidelity balls) operate on
//! a min-max scaled copy of this space so that no single large-magnitude
//! feature dominates Euclidean distances.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::seeding;

/// Class label, always a small consecutive integer `0..C-1`.
pub type Label = usize;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no rows in {0}")]
    NoRows(String),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("row {row}: unknown level {level:?} for feature {feature:?}")]
    UnknownLevel {
        row: usize,
        feature: String,
        level: String,
    },
    #[error("feature {feature:?}: {message}")]
    BadFeature { feature: String, message: String },
    #[error("bad schema: {0}")]
    BadSchema(String),
    #[error("class {label} has {count} members; stratified split needs at least 2")]
    TooFewInClass { label: Label, count: usize },
    #[error("train fraction must be in (0,1), got {0}")]
    BadFraction(f64),
    #[error("instance has {got} values, schema has {want} features")]
    DimensionMismatch { got: usize, want: usize },
}

/// What kind of values a column holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// Levels in declaration order; codes are their positions.
    Categorical { levels: Vec<String> },
}

/// One column of the encoded space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
    /// Lower bound in encoded units (min over fitted data, or 0 for categorical).
    pub lower: f64,
    /// Upper bound in encoded units (max over fitted data, or L-1 for categorical).
    pub upper: f64,
}

impl FeatureMeta {
    pub fn numeric(name: &str) -> Self {
        FeatureMeta {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        FeatureMeta {
            name: name.to_string(),
            kind: FeatureKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
            lower: 0.0,
            upper: (levels.len().max(1) - 1) as f64,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }
}

/// A raw (un-encoded) cell value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Number(x) => write!(f, "{x}"),
            RawValue::Text(s) => write!(f, "{s}"),
        }
    }
}

/// One encoded input vector in `R^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance(pub Vec<f64>);

impl Instance {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for Instance {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Instance {
    fn from(v: Vec<f64>) -> Self {
        Instance(v)
    }
}

/// Euclidean distance between two equal-length vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Ordered feature descriptions for one table; fixes the dimension `D`,
/// the encoding, and the per-dimension bounds used for min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureMeta>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureMeta>) -> Result<Self, DatasetError> {
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(f.name.clone()) {
                return Err(DatasetError::BadSchema(format!(
                    "duplicate feature name {:?}",
                    f.name
                )));
            }
        }
        Ok(FeatureSchema { features })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Encode one raw row into `R^D`. Categorical text maps to its level code.
    pub fn encode_row(&self, row: &[RawValue], row_idx: usize) -> Result<Instance, DatasetError> {
        if row.len() != self.dim() {
            return Err(DatasetError::BadRow {
                row: row_idx,
                message: format!("expected {} values, got {}", self.dim(), row.len()),
            });
        }
        let mut out = Vec::with_capacity(self.dim());
        for (meta, value) in self.features.iter().zip(row) {
            let encoded = match (&meta.kind, value) {
                (FeatureKind::Numeric, RawValue::Number(x)) => *x,
                (FeatureKind::Numeric, RawValue::Text(s)) => {
                    s.parse::<f64>().map_err(|_| DatasetError::BadRow {
                        row: row_idx,
                        message: format!("feature {:?}: cannot parse {s:?} as number", meta.name),
                    })?
                }
                (FeatureKind::Categorical { levels }, RawValue::Text(s)) => levels
                    .iter()
                    .position(|l| l == s)
                    .ok_or_else(|| DatasetError::UnknownLevel {
                        row: row_idx,
                        feature: meta.name.clone(),
                        level: s.clone(),
                    })? as f64,
                (FeatureKind::Categorical { .. }, RawValue::Number(x)) => {
                    return Err(DatasetError::BadRow {
                        row: row_idx,
                        message: format!(
                            "feature {:?}: expected a categorical level, got number {x}",
                            meta.name
                        ),
                    })
                }
            };
            if !encoded.is_finite() {
                return Err(DatasetError::BadRow {
                    row: row_idx,
                    message: format!("feature {:?}: non-finite value", meta.name),
                });
            }
            out.push(encoded);
        }
        Ok(Instance(out))
    }

    /// Decode an encoded vector back to raw values (level strings / numbers).
    pub fn decode_row(&self, instance: &Instance) -> Result<Vec<RawValue>, DatasetError> {
        if instance.dim() != self.dim() {
            return Err(DatasetError::DimensionMismatch {
                got: instance.dim(),
                want: self.dim(),
            });
        }
        let mut out = Vec::with_capacity(self.dim());
        for (meta, &v) in self.features.iter().zip(instance.values()) {
            match &meta.kind {
                FeatureKind::Numeric => out.push(RawValue::Number(v)),
                FeatureKind::Categorical { levels } => {
                    let code = v.round() as usize;
                    let level = levels.get(code).ok_or_else(|| DatasetError::BadFeature {
                        feature: meta.name.clone(),
                        message: format!("code {v} outside declared levels"),
                    })?;
                    out.push(RawValue::Text(level.clone()));
                }
            }
        }
        Ok(out)
    }

    /// Refit numeric lower/upper bounds from a set (categorical bounds stay
    /// `[0, L-1]`). Bounds feed `scale`/`unscale`.
    pub fn fit_bounds(&mut self, set: &LabeledSet) {
        for (j, meta) in self.features.iter_mut().enumerate() {
            if meta.is_categorical() {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for inst in &set.instances {
                lo = lo.min(inst[j]);
                hi = hi.max(inst[j]);
            }
            if lo.is_finite() && hi.is_finite() {
                meta.lower = lo;
                meta.upper = hi;
            }
        }
    }

    /// Min-max scale an encoded instance into roughly `[0,1]^D` using the
    /// fitted bounds. Dimensions with collapsed bounds map to 0.
    pub fn scale(&self, instance: &Instance) -> Instance {
        Instance(
            self.features
                .iter()
                .zip(instance.values())
                .map(|(m, &v)| {
                    let w = m.upper - m.lower;
                    if w > 0.0 {
                        (v - m.lower) / w
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    /// Inverse of `scale`.
    pub fn unscale(&self, instance: &Instance) -> Instance {
        Instance(
            self.features
                .iter()
                .zip(instance.values())
                .map(|(m, &v)| {
                    let w = m.upper - m.lower;
                    if w > 0.0 {
                        m.lower + v * w
                    } else {
                        m.lower
                    }
                })
                .collect(),
        )
    }

    pub fn scale_set(&self, set: &LabeledSet) -> LabeledSet {
        LabeledSet {
            instances: set.instances.iter().map(|i| self.scale(i)).collect(),
            labels: set.labels.clone(),
            n_classes: set.n_classes,
        }
    }

    /// SHA-256 over the canonical JSON form; ties serialized models to the
    /// schema that produced their feature space.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The 20-attribute UCI German Credit layout: 7 numeric, 13 categorical
    /// with `Axy` level codes, label column last (1 = good -> 0, 2 = bad -> 1).
    pub fn german_credit() -> Self {
        FeatureSchema {
            features: vec![
                FeatureMeta::categorical(
                    "Status of existing checking account",
                    &["A11", "A12", "A13", "A14"],
                ),
                FeatureMeta::numeric("Duration in month"),
                FeatureMeta::categorical(
                    "Credit history",
                    &["A30", "A31", "A32", "A33", "A34"],
                ),
                FeatureMeta::categorical(
                    "Purpose",
                    &[
                        "A40", "A41", "A42", "A43", "A44", "A45", "A46", "A48", "A49", "A410",
                    ],
                ),
                FeatureMeta::numeric("Credit amount"),
                FeatureMeta::categorical(
                    "Savings account/bonds",
                    &["A61", "A62", "A63", "A64", "A65"],
                ),
                FeatureMeta::categorical(
                    "Present employment since",
                    &["A71", "A72", "A73", "A74", "A75"],
                ),
                FeatureMeta::numeric("Installment rate in percentage of disposable income"),
                FeatureMeta::categorical(
                    "Personal status and sex",
                    &["A91", "A92", "A93", "A94", "A95"],
                ),
                FeatureMeta::categorical("Other debtors / guarantors", &["A101", "A102", "A103"]),
                FeatureMeta::numeric("Present residence since"),
                FeatureMeta::categorical("Property", &["A121", "A122", "A123", "A124"]),
                FeatureMeta::numeric("Age in years"),
                FeatureMeta::categorical("Other installment plans", &["A141", "A142", "A143"]),
                FeatureMeta::categorical("Housing", &["A151", "A152", "A153"]),
                FeatureMeta::numeric("Number of existing credits at this bank"),
                FeatureMeta::categorical("Job", &["A171", "A172", "A173", "A174"]),
                FeatureMeta::numeric("Number of people being liable to provide maintenance for"),
                FeatureMeta::categorical("Telephone", &["A191", "A192"]),
                FeatureMeta::categorical("Foreign worker", &["A201", "A202"]),
            ],
        }
    }
}

/// Encoded instances with their class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub instances: Vec<Instance>,
    pub labels: Vec<Label>,
    pub n_classes: usize,
}

impl LabeledSet {
    pub fn new(instances: Vec<Instance>, labels: Vec<Label>) -> Result<Self, DatasetError> {
        if instances.len() != labels.len() {
            return Err(DatasetError::BadSchema(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        Ok(LabeledSet {
            instances,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.instances.first().map_or(0, |i| i.dim())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Fraction of the most common class; the accuracy of always guessing it.
    pub fn majority_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let max = self.class_counts().into_iter().max().unwrap_or(0);
        max as f64 / self.len() as f64
    }
}

/// Per-dimension `(min, max)` sampling domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub dims: Vec<(f64, f64)>,
}

impl BoundingBox {
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.dims
            .iter()
            .zip(x)
            .all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (&(lo, hi), v) in self.dims.iter().zip(x.iter_mut()) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Smallest enlargement that also contains `x`.
    pub fn expanded_to_contain(&self, x: &[f64]) -> BoundingBox {
        BoundingBox {
            dims: self
                .dims
                .iter()
                .zip(x)
                .map(|(&(lo, hi), &v)| (lo.min(v), hi.max(v)))
                .collect(),
        }
    }

    /// True if at least one dimension has positive width.
    pub fn is_nondegenerate(&self) -> bool {
        self.dims.iter().any(|&(lo, hi)| hi > lo)
    }
}

/// Declares how to interpret a table on disk.
#[derive(Debug, Clone)]
pub enum SchemaSpec {
    /// UCI `german.data`: space-separated, 20 attributes, label last (1/2).
    GermanCredit,
    /// CSV with a header row plus a sidecar JSON schema.
    CsvWithSidecar(SidecarSchema),
}

/// Sidecar schema for generic CSV:
/// `{"columns": [{"name", "kind", "levels"?}], "label": name}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarSchema {
    pub columns: Vec<SidecarColumn>,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarColumn {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl SidecarSchema {
    pub fn from_path(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| DatasetError::BadSchema(e.to_string()))
    }
}

/// Load a table and encode it. Numeric bounds are fitted on the loaded rows;
/// refit on the training split before scaling if a split follows.
pub fn load_table(
    path: &Path,
    spec: &SchemaSpec,
) -> Result<(LabeledSet, FeatureSchema), DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let (set, mut schema) = match spec {
        SchemaSpec::GermanCredit => parse_german(&text, path),
        SchemaSpec::CsvWithSidecar(sidecar) => parse_csv(&text, sidecar, path),
    }?;
    schema.fit_bounds(&set);
    Ok((set, schema))
}

fn parse_german(text: &str, path: &Path) -> Result<(LabeledSet, FeatureSchema), DatasetError> {
    let schema = FeatureSchema::german_credit();
    let d = schema.dim();
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (row_idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != d + 1 {
            return Err(DatasetError::BadRow {
                row: row_idx,
                message: format!("expected {} fields, got {}", d + 1, tokens.len()),
            });
        }
        let raw: Vec<RawValue> = tokens[..d]
            .iter()
            .map(|t| RawValue::Text(t.to_string()))
            .collect();
        instances.push(schema.encode_row(&raw, row_idx)?);
        let label = match tokens[d] {
            "1" => 0,
            "2" => 1,
            other => {
                return Err(DatasetError::BadRow {
                    row: row_idx,
                    message: format!("expected label 1 or 2, got {other:?}"),
                })
            }
        };
        labels.push(label);
    }
    if instances.is_empty() {
        return Err(DatasetError::NoRows(path.display().to_string()));
    }
    Ok((LabeledSet::new(instances, labels)?, schema))
}

fn parse_csv(
    text: &str,
    sidecar: &SidecarSchema,
    path: &Path,
) -> Result<(LabeledSet, FeatureSchema), DatasetError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| DatasetError::NoRows(path.display().to_string()))?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();

    let mut features = Vec::new();
    let mut label_meta: Option<SidecarColumn> = None;
    for col in &sidecar.columns {
        if col.name == sidecar.label {
            label_meta = Some(col.clone());
            continue;
        }
        let meta = match col.kind.as_str() {
            "numeric" => FeatureMeta::numeric(&col.name),
            "categorical" => {
                let levels = col.levels.clone().ok_or_else(|| {
                    DatasetError::BadSchema(format!(
                        "categorical column {:?} declares no levels",
                        col.name
                    ))
                })?;
                let refs: Vec<&str> = levels.iter().map(String::as_str).collect();
                FeatureMeta::categorical(&col.name, &refs)
            }
            other => {
                return Err(DatasetError::BadSchema(format!(
                    "column {:?}: unknown kind {other:?}",
                    col.name
                )))
            }
        };
        features.push(meta);
    }
    let label_meta =
        label_meta.ok_or_else(|| DatasetError::BadSchema("label column not declared".into()))?;
    let schema = FeatureSchema::new(features)?;

    // Map header positions to schema order.
    let mut positions = Vec::with_capacity(schema.dim());
    for meta in &schema.features {
        let pos = header
            .iter()
            .position(|h| *h == meta.name)
            .ok_or_else(|| DatasetError::BadFeature {
                feature: meta.name.clone(),
                message: "missing from CSV header".into(),
            })?;
        positions.push(pos);
    }
    let label_pos = header
        .iter()
        .position(|h| *h == sidecar.label)
        .ok_or_else(|| DatasetError::BadFeature {
            feature: sidecar.label.clone(),
            message: "label column missing from CSV header".into(),
        })?;

    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (row_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(DatasetError::BadRow {
                row: row_idx,
                message: format!("expected {} cells, got {}", header.len(), cells.len()),
            });
        }
        let raw: Vec<RawValue> = positions
            .iter()
            .map(|&p| RawValue::Text(cells[p].to_string()))
            .collect();
        instances.push(schema.encode_row(&raw, row_idx)?);

        let cell = cells[label_pos];
        let label = match (&label_meta.kind[..], &label_meta.levels) {
            ("categorical", Some(levels)) => levels.iter().position(|l| l == cell).ok_or_else(
                || DatasetError::UnknownLevel {
                    row: row_idx,
                    feature: sidecar.label.clone(),
                    level: cell.to_string(),
                },
            )?,
            _ => cell.parse::<usize>().map_err(|_| DatasetError::BadRow {
                row: row_idx,
                message: format!("label {cell:?} is not a class index"),
            })?,
        };
        labels.push(label);
    }
    if instances.is_empty() {
        return Err(DatasetError::NoRows(path.display().to_string()));
    }
    Ok((LabeledSet::new(instances, labels)?, schema))
}

/// Deterministic stratified split: each class contributes
/// `round(count * train_fraction)` rows to the train side.
pub fn split(
    set: &LabeledSet,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledSet, LabeledSet), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(train_fraction));
    }
    let mut by_class: HashMap<Label, Vec<usize>> = HashMap::new();
    for (i, &l) in set.labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut classes: Vec<Label> = by_class.keys().copied().collect();
    classes.sort_unstable();

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for &c in &classes {
        let members = &by_class[&c];
        if members.len() < 2 {
            return Err(DatasetError::TooFewInClass {
                label: c,
                count: members.len(),
            });
        }
        let mut shuffled = members.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive(seed, c as u64));
        shuffled.shuffle(&mut rng);
        let k = (members.len() as f64 * train_fraction).round() as usize;
        train_idx.extend_from_slice(&shuffled[..k]);
        test_idx.extend_from_slice(&shuffled[k..]);
    }
    // Stable row order regardless of class interleaving.
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize]| LabeledSet {
        instances: idx.iter().map(|&i| set.instances[i].clone()).collect(),
        labels: idx.iter().map(|&i| set.labels[i]).collect(),
        n_classes: set.n_classes,
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

/// Per-dimension min/max of the set, widened by `margin_fraction * width`
/// on each side.
pub fn bounding_box(set: &LabeledSet, margin_fraction: f64) -> BoundingBox {
    assert!(!set.is_empty(), "bounding_box of an empty set");
    let d = set.dim();
    let mut dims = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for inst in &set.instances {
        for (j, &v) in inst.values().iter().enumerate() {
            dims[j].0 = dims[j].0.min(v);
            dims[j].1 = dims[j].1.max(v);
        }
    }
    for (lo, hi) in dims.iter_mut() {
        let margin = margin_fraction * (*hi - *lo);
        *lo -= margin;
        *hi += margin;
    }
    BoundingBox { dims }
}

/// Largest Euclidean distance from `x_hat` to any member of the set.
pub fn max_distance(x_hat: &Instance, set: &LabeledSet) -> f64 {
    assert!(!set.is_empty(), "max_distance against an empty set");
    set.instances
        .iter()
        .map(|i| euclidean(x_hat, i))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn tiny_set(points: &[(&[f64], Label)]) -> LabeledSet {
        LabeledSet::new(
            points.iter().map(|(p, _)| Instance(p.to_vec())).collect(),
            points.iter().map(|&(_, l)| l).collect(),
        )
        .unwrap()
    }

    #[test]
    fn categorical_codes_follow_declaration_order() {
        let schema = FeatureSchema::new(vec![
            FeatureMeta::categorical("c", &["a", "b"]),
            FeatureMeta::numeric("x"),
        ])
        .unwrap();
        let rows = [
            vec![RawValue::Text("a".into()), RawValue::Number(1.0)],
            vec![RawValue::Text("b".into()), RawValue::Number(2.0)],
            vec![RawValue::Text("a".into()), RawValue::Number(3.0)],
        ];
        let encoded: Vec<Instance> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| schema.encode_row(r, i).unwrap())
            .collect();
        assert_eq!(encoded[0][0], 0.0);
        assert_eq!(encoded[1][0], 1.0);
        assert_eq!(encoded[2][0], 0.0);
    }

    #[test]
    fn unknown_level_names_feature_and_level() {
        let schema =
            FeatureSchema::new(vec![FeatureMeta::categorical("color", &["red", "blue"])]).unwrap();
        let err = schema
            .encode_row(&[RawValue::Text("green".into())], 7)
            .unwrap_err();
        match err {
            DatasetError::UnknownLevel {
                row,
                feature,
                level,
            } => {
                assert_eq!(row, 7);
                assert_eq!(feature, "color");
                assert_eq!(level, "green");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn german_format_round_trips() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1"
        )
        .unwrap();
        writeln!(
            file,
            "A12 48 A32 A43 5951 A61 A73 2 A92 A101 2 A121 22 A143 A152 1 A173 1 A191 A201 2"
        )
        .unwrap();
        let (set, schema) = load_table(file.path(), &SchemaSpec::GermanCredit).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.n_classes, 2);
        assert_eq!(schema.dim(), 20);
        assert_eq!(set.labels, vec![0, 1]);
        // Duration / Credit amount / Age parse as numbers.
        assert_eq!(set.instances[0][1], 6.0);
        assert_eq!(set.instances[0][4], 1169.0);
        assert_eq!(set.instances[0][12], 67.0);
        // Decoding restores the original tokens.
        let decoded = schema.decode_row(&set.instances[1]).unwrap();
        assert_eq!(decoded[0], RawValue::Text("A12".into()));
        assert_eq!(decoded[1], RawValue::Number(48.0));
    }

    #[test]
    fn empty_file_is_no_rows() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let err = load_table(file.path(), &SchemaSpec::GermanCredit).unwrap_err();
        assert!(matches!(err, DatasetError::NoRows(_)), "{err}");
    }

    #[test]
    fn malformed_row_carries_index() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1"
        )
        .unwrap();
        writeln!(file, "A11 6 A34").unwrap();
        let err = load_table(file.path(), &SchemaSpec::GermanCredit).unwrap_err();
        match err {
            DatasetError::BadRow { row, .. } => assert_eq!(row, 1),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn csv_with_sidecar_loads() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("t.csv");
        std::fs::write(&csv_path, "x,c,y\n1.5,a,0\n2.5,b,1\n3.5,a,0\n").unwrap();
        let sidecar = SidecarSchema {
            columns: vec![
                SidecarColumn {
                    name: "x".into(),
                    kind: "numeric".into(),
                    levels: None,
                },
                SidecarColumn {
                    name: "c".into(),
                    kind: "categorical".into(),
                    levels: Some(vec!["a".into(), "b".into()]),
                },
                SidecarColumn {
                    name: "y".into(),
                    kind: "numeric".into(),
                    levels: None,
                },
            ],
            label: "y".into(),
        };
        let (set, schema) = load_table(&csv_path, &SchemaSpec::CsvWithSidecar(sidecar)).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(schema.dim(), 2);
        assert_eq!(set.instances[1][1], 1.0); // "b" -> 1 in declaration order
        assert_eq!(set.labels, vec![0, 1, 0]);
    }

    #[test]
    fn split_is_stratified_with_rounded_counts() {
        // 100 rows, 60/40 class ratio, fraction 0.7 -> 42/28 in train.
        let mut instances = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            instances.push(Instance(vec![i as f64]));
            labels.push(if i < 60 { 0 } else { 1 });
        }
        let set = LabeledSet::new(instances, labels).unwrap();
        let (train, test) = split(&set, 0.7, 11).unwrap();
        let counts = train.class_counts();
        assert_eq!(counts, vec![42, 28]);
        assert_eq!(train.len(), 70);
        assert_eq!(test.len(), 30);
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let mut instances = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            instances.push(Instance(vec![i as f64]));
            labels.push(i % 2);
        }
        let set = LabeledSet::new(instances, labels).unwrap();
        let (a1, b1) = split(&set, 0.7, 1).unwrap();
        let (a2, b2) = split(&set, 0.7, 1).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let (a3, _) = split(&set, 0.7, 2).unwrap();
        assert_ne!(a1, a3, "different seeds should give different partitions");
    }

    #[test]
    fn split_partition_is_disjoint_and_complete() {
        let mut instances = Vec::new();
        let mut labels = Vec::new();
        for i in 0..50 {
            instances.push(Instance(vec![i as f64, (i * 7 % 13) as f64]));
            labels.push(i % 3);
        }
        let set = LabeledSet::new(instances, labels).unwrap();
        let (train, test) = split(&set, 0.6, 5).unwrap();
        assert_eq!(train.len() + test.len(), 50);
        let mut seen: Vec<f64> = train
            .instances
            .iter()
            .chain(&test.instances)
            .map(|i| i[0])
            .collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn split_rejects_tiny_classes() {
        let set = tiny_set(&[(&[0.0], 0), (&[1.0], 0), (&[2.0], 1)]);
        let err = split(&set, 0.5, 0).unwrap_err();
        assert!(matches!(err, DatasetError::TooFewInClass { label: 1, .. }));
    }

    #[test]
    fn bounding_box_min_max_and_margin() {
        let set = tiny_set(&[(&[0.0, 0.0], 0), (&[1.0, 2.0], 1)]);
        let bare = bounding_box(&set, 0.0);
        assert_eq!(bare.dims, vec![(0.0, 1.0), (0.0, 2.0)]);
        let wide = bounding_box(&set, 0.1);
        assert!((wide.dims[0].0 - -0.1).abs() < 1e-12);
        assert!((wide.dims[0].1 - 1.1).abs() < 1e-12);
        assert!((wide.dims[1].0 - -0.2).abs() < 1e-12);
        assert!((wide.dims[1].1 - 2.2).abs() < 1e-12);
    }

    #[test]
    fn bounding_box_degenerate_dimension() {
        let set = tiny_set(&[(&[3.0, 1.0], 0), (&[3.0, 2.0], 1)]);
        let b = bounding_box(&set, 0.0);
        assert_eq!(b.dims[0], (3.0, 3.0));
        assert!(b.is_nondegenerate());
    }

    #[test]
    fn max_distance_examples() {
        let set = tiny_set(&[(&[3.0, 4.0], 0), (&[1.0, 1.0], 1)]);
        let x = Instance(vec![0.0, 0.0]);
        assert_eq!(max_distance(&x, &set), 5.0);
        let solo = tiny_set(&[(&[2.0, 2.0], 0)]);
        assert_eq!(max_distance(&Instance(vec![2.0, 2.0]), &solo), 0.0);
    }

    #[test]
    fn max_distance_matches_brute_force_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        let instances: Vec<Instance> = (0..100)
            .map(|_| Instance((0..4).map(|_| rng.gen_range(-5.0..5.0)).collect()))
            .collect();
        let set = LabeledSet::new(instances.clone(), vec![0; 100]).unwrap();
        let x = Instance(vec![0.3, -0.7, 2.0, 1.1]);
        let brute = instances
            .iter()
            .map(|i| euclidean(&x, i))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max_distance(&x, &set), brute);
    }

    #[test]
    fn scaling_uses_fitted_bounds() {
        let mut schema = FeatureSchema::new(vec![
            FeatureMeta::numeric("x"),
            FeatureMeta::categorical("c", &["a", "b", "c"]),
        ])
        .unwrap();
        let set = tiny_set(&[(&[10.0, 0.0], 0), (&[30.0, 2.0], 1)]);
        schema.fit_bounds(&set);
        assert_eq!(schema.features[0].lower, 10.0);
        assert_eq!(schema.features[0].upper, 30.0);
        let scaled = schema.scale(&Instance(vec![20.0, 1.0]));
        assert!((scaled[0] - 0.5).abs() < 1e-12);
        assert!((scaled[1] - 0.5).abs() < 1e-12);
        let back = schema.unscale(&scaled);
        assert!((back[0] - 20.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(
            nums in proptest::collection::vec(-1e6f64..1e6, 5),
            codes in proptest::collection::vec(0usize..3, 3),
        ) {
            let schema = FeatureSchema::new(vec![
                FeatureMeta::numeric("n0"),
                FeatureMeta::numeric("n1"),
                FeatureMeta::numeric("n2"),
                FeatureMeta::numeric("n3"),
                FeatureMeta::numeric("n4"),
                FeatureMeta::categorical("c0", &["u", "v", "w"]),
                FeatureMeta::categorical("c1", &["u", "v", "w"]),
                FeatureMeta::categorical("c2", &["u", "v", "w"]),
            ]).unwrap();
            let levels = ["u", "v", "w"];
            let mut raw: Vec<RawValue> = nums.iter().map(|&x| RawValue::Number(x)).collect();
            raw.extend(codes.iter().map(|&c| RawValue::Text(levels[c].into())));
            let encoded = schema.encode_row(&raw, 0).unwrap();
            let decoded = schema.decode_row(&encoded).unwrap();
            prop_assert_eq!(raw, decoded);
        }

        #[test]
        fn bounding_box_contains_every_instance(
            rows in proptest::collection::vec(
                proptest::collection::vec(-100.0f64..100.0, 3), 1..40),
            margin in 0.0f64..0.5,
        ) {
            let set = LabeledSet::new(
                rows.iter().cloned().map(Instance).collect(),
                vec![0; rows.len()],
            ).unwrap();
            let b = bounding_box(&set, margin);
            for inst in &set.instances {
                prop_assert!(b.contains(inst.values()));
            }
        }
    }
}
