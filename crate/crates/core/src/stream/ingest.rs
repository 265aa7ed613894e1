use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{into_chunks, Chunk, Group, Instance};
use crate::error::{Error, Result};

fn default_window_size() -> usize {
    1000
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "?".into(), "NA".into()]
}

/// Describes how a CSV file maps onto a labeled stream with a binary
/// sensitive attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamManifest {
    /// CSV file; relative paths resolve against the manifest's directory
    /// when loaded with [`StreamManifest::from_path`].
    pub source: PathBuf,
    pub target: String,
    pub positive_label: String,
    /// When set, target values other than the two labels reject the row.
    #[serde(default)]
    pub negative_label: Option<String>,
    pub sensitive: String,
    pub protected_values: Vec<String>,
    pub unprotected_values: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default = "default_window_size")]
    pub window_size: usize,
    #[serde(default)]
    pub drop_sensitive: bool,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Cell values treated as missing (after trimming).
    #[serde(default = "default_missing")]
    pub missing_values: Vec<String>,
}

impl StreamManifest {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: StreamManifest = serde_json::from_str(&text)?;
        if manifest.source.is_relative() {
            if let Some(dir) = path.parent() {
                manifest.source = dir.join(&manifest.source);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.protected_values.is_empty() || self.unprotected_values.is_empty() {
            return Err(Error::InvalidManifest(
                "protected and unprotected value sets must be non-empty".into(),
            ));
        }
        let protected: HashSet<&String> = self.protected_values.iter().collect();
        if let Some(v) = self.unprotected_values.iter().find(|v| protected.contains(v)) {
            return Err(Error::InvalidManifest(format!(
                "value `{v}` is both protected and unprotected"
            )));
        }
        if self.window_size < 10 {
            return Err(Error::InvalidManifest(format!(
                "window_size {} is below the minimum of 10",
                self.window_size
            )));
        }
        Ok(())
    }
}

/// Row accounting from one ingestion pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_used: usize,
    pub rejected_missing: usize,
    pub rejected_target: usize,
    pub rejected_sensitive: usize,
}

impl IngestReport {
    pub fn rejected(&self) -> usize {
        self.rejected_missing + self.rejected_target + self.rejected_sensitive
    }
}

#[derive(Debug, Clone)]
pub struct IngestedStream {
    pub chunks: Vec<Chunk>,
    pub feature_names: Vec<String>,
    pub report: IngestReport,
}

impl IngestedStream {
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.chunks.iter().map(Chunk::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }
}

enum Column {
    Numeric { idx: usize },
    Categorical { idx: usize },
    /// The kept sensitive column when it is not categorical: 1 for the
    /// protected group, 0 otherwise.
    Group,
}

struct Layout {
    target: usize,
    sensitive: usize,
    columns: Vec<Column>,
    /// Every column whose value must be present.
    used: Vec<usize>,
}

enum RowOutcome {
    Usable { group: Group, label: u8 },
    Missing,
    BadTarget,
    BadSensitive,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn layout(manifest: &StreamManifest, headers: &csv::StringRecord) -> Result<Layout> {
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let find = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let target = find(&manifest.target)?;
    let sensitive = find(&manifest.sensitive)?;
    let mut categorical = HashSet::new();
    for c in &manifest.categorical {
        categorical.insert(find(c)?);
    }
    let mut dropped = HashSet::new();
    for c in &manifest.drop_columns {
        dropped.insert(find(c)?);
    }
    dropped.insert(target);
    if manifest.drop_sensitive {
        dropped.insert(sensitive);
    }

    let mut columns = Vec::new();
    let mut used = vec![target, sensitive];
    for idx in 0..headers.len() {
        if dropped.contains(&idx) {
            continue;
        }
        if idx != sensitive {
            used.push(idx);
        }
        if categorical.contains(&idx) {
            columns.push(Column::Categorical { idx });
        } else if idx == sensitive {
            columns.push(Column::Group);
        } else {
            columns.push(Column::Numeric { idx });
        }
    }
    Ok(Layout {
        target,
        sensitive,
        columns,
        used,
    })
}

fn classify(manifest: &StreamManifest, layout: &Layout, record: &csv::StringRecord) -> RowOutcome {
    let missing = |idx: usize| match record.get(idx) {
        None => true,
        Some(v) => manifest.missing_values.iter().any(|m| m == v),
    };
    if layout.used.iter().any(|&i| missing(i)) {
        return RowOutcome::Missing;
    }
    for col in &layout.columns {
        if let Column::Numeric { idx } = col {
            match record[*idx].parse::<f64>() {
                Ok(v) if v.is_finite() => {}
                _ => return RowOutcome::Missing,
            }
        }
    }
    let target = &record[layout.target];
    let label = if *target == manifest.positive_label {
        1
    } else {
        match &manifest.negative_label {
            Some(neg) if neg != target => return RowOutcome::BadTarget,
            _ => 0,
        }
    };
    let sensitive = &record[layout.sensitive];
    let group = if manifest.protected_values.iter().any(|v| v == sensitive) {
        Group::Protected
    } else if manifest.unprotected_values.iter().any(|v| v == sensitive) {
        Group::Unprotected
    } else {
        return RowOutcome::BadSensitive;
    };
    RowOutcome::Usable { group, label }
}

/// Running min-max scaler; extremes are updated before a value is scaled.
#[derive(Debug, Clone, Copy)]
struct RunningRange {
    min: f64,
    max: f64,
}

impl RunningRange {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn scale(&mut self, v: f64) -> f64 {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Read a CSV stream described by `manifest`.
///
/// Categorical columns (including the sensitive one when it is listed as
/// categorical) are one-hot encoded in lexicographic category order; numeric
/// columns are scaled with running minima and maxima so no value depends on
/// rows that come after it. A kept sensitive column that is not categorical
/// becomes a 0/1 protected-group indicator.
pub fn ingest(manifest: &StreamManifest) -> Result<IngestedStream> {
    manifest.validate()?;
    let path = manifest.source.as_path();

    // First pass: category vocabularies over usable rows.
    let mut reader = open(path)?;
    let headers = reader.headers()?.clone();
    let layout = layout(manifest, &headers)?;
    let mut vocab: HashMap<usize, BTreeSet<String>> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        if let RowOutcome::Usable { .. } = classify(manifest, &layout, &record) {
            for col in &layout.columns {
                if let Column::Categorical { idx } = col {
                    vocab.entry(*idx).or_default().insert(record[*idx].to_string());
                }
            }
        }
    }

    let mut feature_names = Vec::new();
    let mut category_slots: HashMap<usize, HashMap<String, usize>> = HashMap::new();
    for col in &layout.columns {
        match col {
            Column::Numeric { idx } => feature_names.push(headers[*idx].to_string()),
            Column::Group => feature_names.push(headers[layout.sensitive].to_string()),
            Column::Categorical { idx } => {
                let slots = category_slots.entry(*idx).or_default();
                for value in vocab.get(idx).into_iter().flatten() {
                    slots.insert(value.clone(), slots.len());
                    feature_names.push(format!("{}={}", &headers[*idx], value));
                }
            }
        }
    }

    // Second pass: encode.
    let mut reader = open(path)?;
    let mut report = IngestReport::default();
    let mut ranges: HashMap<usize, RunningRange> = HashMap::new();
    let mut instances = Vec::new();
    for record in reader.records() {
        let record = record?;
        report.rows_read += 1;
        let (group, label) = match classify(manifest, &layout, &record) {
            RowOutcome::Usable { group, label } => (group, label),
            RowOutcome::Missing => {
                report.rejected_missing += 1;
                continue;
            }
            RowOutcome::BadTarget => {
                report.rejected_target += 1;
                continue;
            }
            RowOutcome::BadSensitive => {
                report.rejected_sensitive += 1;
                continue;
            }
        };
        let mut features = Vec::with_capacity(feature_names.len());
        for col in &layout.columns {
            match col {
                Column::Numeric { idx } => {
                    let v: f64 = record[*idx].parse().expect("checked by classify");
                    let range = ranges.entry(*idx).or_insert_with(RunningRange::new);
                    features.push(range.scale(v));
                }
                Column::Categorical { idx } => {
                    let slots = &category_slots[idx];
                    let start = features.len();
                    features.resize(start + slots.len(), 0.0);
                    features[start + slots[&record[*idx]]] = 1.0;
                }
                Column::Group => features.push(if group.is_protected() { 1.0 } else { 0.0 }),
            }
        }
        instances.push(Instance {
            features,
            group,
            label,
        });
        report.rows_used += 1;
    }

    if instances.is_empty() {
        return Err(Error::NoUsableRows(path.to_path_buf()));
    }
    let chunks = into_chunks(instances, manifest.window_size)?;
    Ok(IngestedStream {
        chunks,
        feature_names,
        report,
    })
}
