//! Datasets: synthetic generators, CSV ingestion, splitting and feature scaling.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::loss::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Targets {
    /// Row-major `rows x dim` real targets.
    Regression { values: Vec<f64>, dim: usize },
    /// Integer labels in `[0, classes.len())`; `classes` holds the original names.
    Classification { labels: Vec<usize>, classes: Vec<String> },
}

/// An in-memory table of `rows` samples with `feature_dim` real features each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    rows: usize,
    feature_dim: usize,
    targets: Targets,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    /// `(height, width, channels)` when features are flattened HWC images.
    pub image_shape: Option<(usize, usize, usize)>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        feature_dim: usize,
        targets: Targets,
        feature_names: Vec<String>,
        target_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if feature_dim == 0 {
            return Err(DataError::Invalid("no feature columns".into()));
        }
        if !features.len().is_multiple_of(feature_dim) {
            return Err(DataError::Invalid("feature buffer is not a whole number of rows".into()));
        }
        let rows = features.len() / feature_dim;
        if rows == 0 {
            return Err(DataError::Invalid("dataset has no rows".into()));
        }
        match &targets {
            Targets::Regression { values, dim } => {
                if *dim == 0 || values.len() != rows * dim {
                    return Err(DataError::Invalid("target rows do not match feature rows".into()));
                }
            }
            Targets::Classification { labels, classes } => {
                if labels.len() != rows {
                    return Err(DataError::Invalid("label count does not match feature rows".into()));
                }
                if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
                    return Err(DataError::Invalid(format!("label {bad} outside {} classes", classes.len())));
                }
            }
        }
        if feature_names.len() != feature_dim {
            return Err(DataError::Invalid("feature name count mismatch".into()));
        }
        Ok(Self { features, rows, feature_dim, targets, feature_names, target_names, image_shape: None })
    }

    pub fn with_image_shape(mut self, shape: (usize, usize, usize)) -> Result<Self, DataError> {
        if shape.0 * shape.1 * shape.2 != self.feature_dim {
            return Err(DataError::Invalid(format!("image shape {shape:?} does not cover {} features", self.feature_dim)));
        }
        self.image_shape = Some(shape);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn task(&self) -> Task {
        match self.targets {
            Targets::Regression { .. } => Task::Regression,
            Targets::Classification { .. } => Task::Classification,
        }
    }

    /// Width of the model output: target dimension or number of classes.
    pub fn output_dim(&self) -> usize {
        match &self.targets {
            Targets::Regression { dim, .. } => *dim,
            Targets::Classification { classes, .. } => classes.len(),
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Classification { labels, .. } => Some(labels),
            Targets::Regression { .. } => None,
        }
    }

    pub fn classes(&self) -> Option<&[String]> {
        match &self.targets {
            Targets::Classification { classes, .. } => Some(classes),
            Targets::Regression { .. } => None,
        }
    }

    pub fn regression_targets(&self) -> Option<&[f64]> {
        match &self.targets {
            Targets::Regression { values, .. } => Some(values),
            Targets::Classification { .. } => None,
        }
    }

    /// Training targets as a `rows x output_dim` matrix; one-hot rows for classification.
    pub fn target_matrix(&self) -> Vec<f64> {
        match &self.targets {
            Targets::Regression { values, .. } => values.clone(),
            Targets::Classification { labels, classes } => {
                let k = classes.len();
                let mut out = vec![0.0; labels.len() * k];
                for (i, &l) in labels.iter().enumerate() {
                    out[i * k + l] = 1.0;
                }
                out
            }
        }
    }

    /// Rows selected by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.feature_dim);
        for &i in indices {
            features.extend_from_slice(self.feature_row(i));
        }
        let targets = match &self.targets {
            Targets::Regression { values, dim } => {
                let mut v = Vec::with_capacity(indices.len() * dim);
                for &i in indices {
                    v.extend_from_slice(&values[i * dim..(i + 1) * dim]);
                }
                Targets::Regression { values: v, dim: *dim }
            }
            Targets::Classification { labels, classes } => {
                Targets::Classification { labels: indices.iter().map(|&i| labels[i]).collect(), classes: classes.clone() }
            }
        };
        Dataset {
            features,
            rows: indices.len(),
            feature_dim: self.feature_dim,
            targets,
            feature_names: self.feature_names.clone(),
            target_names: self.target_names.clone(),
            image_shape: self.image_shape,
        }
    }
}

/// The Eggbox surface `[2 + cos(x/2) cos(y/2)]^5`, with range `[1, 243]` on `[0, 2pi]^2`.
pub fn eggbox(x: f64, y: f64) -> f64 {
    (2.0 + (x / 2.0).cos() * (y / 2.0).cos()).powi(5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingScheme {
    #[default]
    Uniform,
    Grid,
}

pub const EGGBOX_DEFAULT_COUNT: usize = 4000;

/// Samples the Eggbox surface at `count` points of `[0, 2pi]^2`.
///
/// `Grid` lays points row-major on a `ceil(sqrt(count))`-sided lattice and
/// ignores `seed`.
pub fn gen_eggbox(count: usize, seed: u64, scheme: SamplingScheme) -> Result<Dataset, DataError> {
    if count == 0 {
        return Err(DataError::TooSmall("eggbox needs at least one point".into()));
    }
    let mut features = Vec::with_capacity(2 * count);
    match scheme {
        SamplingScheme::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                features.push(rng.random_range(0.0..=2.0 * PI));
                features.push(rng.random_range(0.0..=2.0 * PI));
            }
        }
        SamplingScheme::Grid => {
            let side = (count as f64).sqrt().ceil() as usize;
            let step = if side > 1 { 2.0 * PI / (side - 1) as f64 } else { 0.0 };
            for i in 0..count {
                features.push((i / side) as f64 * step);
                features.push((i % side) as f64 * step);
            }
        }
    }
    let values = features.chunks(2).map(|p| eggbox(p[0], p[1])).collect();
    Dataset::new(features, 2, Targets::Regression { values, dim: 1 }, vec!["x".into(), "y".into()], vec!["f".into()])
}

/// Square grayscale images holding one horizontal (class 0) or vertical
/// (class 1) bar of ones plus Gaussian pixel noise.
pub fn gen_bars(count: usize, side: usize, noise: f64, seed: u64) -> Result<Dataset, DataError> {
    if count == 0 || side < 2 {
        return Err(DataError::TooSmall("bars needs at least one image of side >= 2".into()));
    }
    let normal = Normal::new(0.0, noise.max(0.0)).map_err(|e| DataError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(count * side * side);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let label = i % 2;
        let pos = rng.random_range(0..side);
        for r in 0..side {
            for c in 0..side {
                let on = if label == 0 { r == pos } else { c == pos };
                let base = if on { 1.0 } else { 0.0 };
                features.push(base + normal.sample(&mut rng));
            }
        }
        labels.push(label);
    }
    let names = (0..side * side).map(|i| format!("px{}_{}", i / side, i % side)).collect();
    Dataset::new(
        features,
        side * side,
        Targets::Classification { labels, classes: vec!["horizontal".into(), "vertical".into()] },
        names,
        vec!["orientation".into()],
    )?
    .with_image_shape((side, side, 1))
}

/// Reads a headered, comma-separated UTF-8 file. Classification targets may be
/// arbitrary strings, encoded in order of first appearance.
pub fn load_csv(path: &Path, target_columns: &[String], task: Task) -> Result<Dataset, DataError> {
    load_csv_with_classes(path, target_columns, task, None)
}

/// As [`load_csv`], but classification labels are mapped onto a fixed class
/// list; unseen labels are an error.
pub fn load_csv_with_classes(
    path: &Path,
    target_columns: &[String],
    task: Task,
    known_classes: Option<&[String]>,
) -> Result<Dataset, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = reader.headers().map_err(|e| DataError::Csv(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateHeader(h.clone()));
        }
    }
    if target_columns.is_empty() {
        return Err(DataError::Invalid("no target column given".into()));
    }
    if task == Task::Classification && target_columns.len() != 1 {
        return Err(DataError::Invalid("classification takes exactly one target column".into()));
    }
    let mut target_idx = Vec::with_capacity(target_columns.len());
    for t in target_columns {
        let idx = header.iter().position(|h| h == t).ok_or_else(|| DataError::MissingColumn(t.clone()))?;
        target_idx.push(idx);
    }
    let feature_idx: Vec<usize> = (0..header.len()).filter(|i| !target_idx.contains(i)).collect();
    if feature_idx.is_empty() {
        return Err(DataError::Invalid("no feature columns".into()));
    }

    let mut features = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut classes: Vec<String> = known_classes.map(<[String]>::to_vec).unwrap_or_default();
    let mut class_index: HashMap<String, usize> = classes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();

    for (r, record) in reader.records().enumerate() {
        // data rows are numbered from 1; the header is row 0
        let row = r + 1;
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        if record.len() != header.len() {
            return Err(DataError::Ragged { row, expected: header.len(), found: record.len() });
        }
        let parse = |i: usize| -> Result<f64, DataError> {
            let cell = record[i].trim();
            cell.parse::<f64>().map_err(|_| DataError::NotNumeric { row, column: header[i].clone(), value: cell.to_string() })
        };
        for &i in &feature_idx {
            features.push(parse(i)?);
        }
        match task {
            Task::Regression => {
                for &i in &target_idx {
                    values.push(parse(i)?);
                }
            }
            Task::Classification => {
                let label = record[target_idx[0]].trim().to_string();
                let id = match class_index.get(&label) {
                    Some(&id) => id,
                    None if known_classes.is_some() => return Err(DataError::UnknownLabel { row, label }),
                    None => {
                        classes.push(label.clone());
                        class_index.insert(label, classes.len() - 1);
                        classes.len() - 1
                    }
                };
                labels.push(id);
            }
        }
    }
    if labels.is_empty() && values.is_empty() {
        return Err(DataError::TooSmall(format!("{} has no data rows", path.display())));
    }
    let targets = match task {
        Task::Regression => Targets::Regression { values, dim: target_idx.len() },
        Task::Classification => Targets::Classification { labels, classes },
    };
    Dataset::new(features, feature_idx.len(), targets, feature_idx.iter().map(|&i| header[i].clone()).collect(), target_columns.to_vec())
}

/// Writes features then targets under a header row. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<(), DataError> {
    let io = |source| DataError::Io { path: path.to_path_buf(), source };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    let header: Vec<&str> = ds.feature_names.iter().chain(&ds.target_names).map(String::as_str).collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let mut line = String::new();
    for i in 0..ds.rows() {
        line.clear();
        for (j, v) in ds.feature_row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        match &ds.targets {
            Targets::Regression { values, dim } => {
                for v in &values[i * dim..(i + 1) * dim] {
                    line.push(',');
                    line.push_str(&v.to_string());
                }
            }
            Targets::Classification { labels, classes } => {
                line.push(',');
                line.push_str(&classes[labels[i]]);
            }
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub test_fraction: f64,
    /// Fraction of the non-test remainder held out for validation.
    pub val_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { test_fraction: 0.10, val_fraction: 0.10, stratified: true, seed: 0 }
    }
}

/// Train, validation and test parts of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Row indices of each part, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Part sizes: `floor(test_fraction * m)` for test, then
/// `floor(val_fraction * (m - test))` for validation, the rest for training.
pub fn split_sizes(m: usize, spec: &SplitSpec) -> (usize, usize, usize) {
    let test = (spec.test_fraction * m as f64).floor() as usize;
    let val = (spec.val_fraction * (m - test) as f64).floor() as usize;
    (m - test - val, val, test)
}

pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<SplitIndices, DataError> {
    for f in [spec.test_fraction, spec.val_fraction] {
        if !(f > 0.0 && f < 1.0) {
            return Err(DataError::Invalid(format!("split fraction {f} outside (0, 1)")));
        }
    }
    let m = ds.rows();
    let (n_train, n_val, n_test) = split_sizes(m, spec);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(DataError::TooSmall(format!("{m} rows give parts of {n_train}/{n_val}/{n_test}; every part must be nonempty")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let stratify = spec.stratified || ds.task() == Task::Classification;
    let mut parts = match (ds.labels(), stratify) {
        (Some(labels), true) => stratified_parts(labels, ds.output_dim(), n_val, n_test, &mut rng)?,
        _ => {
            let mut idx: Vec<usize> = (0..m).collect();
            idx.shuffle(&mut rng);
            let test = idx[..n_test].to_vec();
            let val = idx[n_test..n_test + n_val].to_vec();
            let train = idx[n_test + n_val..].to_vec();
            SplitIndices { train, val, test }
        }
    };
    parts.train.sort_unstable();
    parts.val.sort_unstable();
    parts.test.sort_unstable();
    Ok(parts)
}

/// Splits `ds` into train/validation/test. Classification data is always
/// stratified so every class keeps its proportion (within one sample) in each part.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<SplitData, DataError> {
    let idx = split_indices(ds, spec)?;
    Ok(SplitData { train: ds.subset(&idx.train), val: ds.subset(&idx.val), test: ds.subset(&idx.test) })
}

fn stratified_parts(
    labels: &[usize],
    num_classes: usize,
    n_val: usize,
    n_test: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SplitIndices, DataError> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < 3 {
            return Err(DataError::SparseClass { class, count: members.len() });
        }
    }
    for members in by_class.iter_mut() {
        members.shuffle(rng);
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let test_counts = apportion(&sizes, n_test);
    let remaining: Vec<usize> = sizes.iter().zip(&test_counts).map(|(s, t)| s - t).collect();
    let val_counts = apportion(&remaining, n_val);

    let mut parts = SplitIndices { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (class, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let (t, v) = (test_counts[class], val_counts[class]);
        if t == 0 || v == 0 || t + v >= members.len() {
            return Err(DataError::TooSmall(format!("class {class} with {} samples cannot appear in every part", members.len())));
        }
        parts.test.extend_from_slice(&members[..t]);
        parts.val.extend_from_slice(&members[t..t + v]);
        parts.train.extend_from_slice(&members[t + v..]);
    }
    Ok(parts)
}

/// Largest-remainder apportionment of `total` units proportionally to `weights`.
/// Ties in the remainder go to the lower index.
fn apportion(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut counts: Vec<usize> = weights.iter().map(|&w| w * total / sum).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // remainder numerators (w * total) mod sum, compared exactly
    order.sort_by(|&a, &b| ((weights[b] * total) % sum).cmp(&((weights[a] * total) % sum)).then(a.cmp(&b)));
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Z-score parameters fitted on a training set. Features with zero spread are
/// centred only. Regression targets are optionally scaled the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub target_mean: Option<Vec<f64>>,
    pub target_scale: Option<Vec<f64>>,
}

impl Standardizer {
    /// The identity transform for `feature_dim` features.
    pub fn identity(feature_dim: usize) -> Self {
        Self { feature_mean: vec![0.0; feature_dim], feature_scale: vec![1.0; feature_dim], target_mean: None, target_scale: None }
    }

    pub fn fit(train: &Dataset, features: bool, targets: bool) -> Self {
        let mut s = Self::identity(train.feature_dim());
        if features {
            let (mean, scale) = column_stats(train.features(), train.feature_dim());
            s.feature_mean = mean;
            s.feature_scale = scale;
        }
        if targets {
            if let Targets::Regression { values, dim } = train.targets() {
                let (mean, scale) = column_stats(values, *dim);
                s.target_mean = Some(mean);
                s.target_scale = Some(scale);
            }
        }
        s
    }

    pub fn transform(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        let d = ds.feature_dim();
        for (i, v) in out.features.iter_mut().enumerate() {
            let j = i % d;
            *v = (*v - self.feature_mean[j]) / self.feature_scale[j];
        }
        if let (Some(mean), Some(scale), Targets::Regression { values, dim }) = (&self.target_mean, &self.target_scale, &mut out.targets) {
            for (i, v) in values.iter_mut().enumerate() {
                let j = i % *dim;
                *v = (*v - mean[j]) / scale[j];
            }
        }
        out
    }

    /// Maps model outputs back to original target units (no-op without target scaling).
    pub fn inverse_targets(&self, values: &mut [f64]) {
        if let (Some(mean), Some(scale)) = (&self.target_mean, &self.target_scale) {
            let dim = mean.len();
            for (i, v) in values.iter_mut().enumerate() {
                let j = i % dim;
                *v = *v * scale[j] + mean[j];
            }
        }
    }
}

fn column_stats(values: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let rows = values.len() / dim;
    let mut mean = vec![0.0; dim];
    for row in values.chunks(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= rows as f64;
    }
    let mut var = vec![0.0; dim];
    for row in values.chunks(dim) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / rows as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Fits a [`Standardizer`] on `split.train` and applies it to all three parts.
pub fn standardize(split: &SplitData, features: bool, targets: bool) -> (SplitData, Standardizer) {
    let s = Standardizer::fit(&split.train, features, targets);
    let out = SplitData { train: s.transform(&split.train), val: s.transform(&split.val), test: s.transform(&split.test) };
    (out, s)
}
