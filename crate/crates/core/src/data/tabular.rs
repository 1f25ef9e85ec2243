//! Delimiter-separated tabular ingestion.
//!
//! Files may be comma-, tab-, semicolon- or whitespace-separated, with or
//! without a header, optionally gzip-compressed (`.gz`). Columns that hold any
//! non-numeric value (other than the label column) are one-hot encoded with
//! categories in lexicographic order.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, Label};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delimiter {
    /// Comma if the first data line contains one, whitespace otherwise.
    #[default]
    Auto,
    Comma,
    Tab,
    Semicolon,
    Whitespace,
}

/// Label values selecting a class. `Rest` matches every label not claimed by
/// the other set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelSet {
    Values(Vec<String>),
    Rest(RestMarker),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestMarker {
    Rest,
}

impl LabelSet {
    pub fn values<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        LabelSet::Values(values.into_iter().map(|s| s.to_string()).collect())
    }

    pub fn rest() -> Self {
        LabelSet::Rest(RestMarker::Rest)
    }

    fn contains(&self, label: &str) -> bool {
        match self {
            LabelSet::Values(v) => v.iter().any(|c| labels_match(c, label)),
            LabelSet::Rest(_) => false,
        }
    }

    fn is_rest(&self) -> bool {
        matches!(self, LabelSet::Rest(_))
    }
}

/// Labels compare after trimming and dropping a trailing `.`; numeric labels
/// compare by value so `2` matches `2.0`.
fn labels_match(a: &str, b: &str) -> bool {
    let clean = |s: &str| s.trim().trim_end_matches('.').to_string();
    let (a, b) = (clean(a), clean(b));
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Where and how to read a tabular benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularSpec {
    /// Files concatenated in order (e.g. a train and a test file).
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub delimiter: Delimiter,
    #[serde(default)]
    pub has_header: bool,
    /// Column names for headerless files; defaults to `c0, c1, ...`.
    #[serde(default)]
    pub column_names: Option<Vec<String>>,
    pub label_column: String,
    pub normal_labels: LabelSet,
    pub anomaly_labels: LabelSet,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Keep at most this many normal rows, chosen by a seeded shuffle.
    #[serde(default)]
    pub max_normals: Option<usize>,
    /// Keep at most this many anomaly rows.
    #[serde(default)]
    pub max_anomalies: Option<usize>,
    #[serde(default)]
    pub subsample_seed: u64,
}

impl TabularSpec {
    pub fn new(path: impl Into<PathBuf>, label_column: &str, normal: LabelSet, anomaly: LabelSet) -> Self {
        TabularSpec {
            paths: vec![path.into()],
            delimiter: Delimiter::Auto,
            has_header: false,
            column_names: None,
            label_column: label_column.to_string(),
            normal_labels: normal,
            anomaly_labels: anomaly,
            drop_columns: Vec::new(),
            max_normals: None,
            max_anomalies: None,
            subsample_seed: 0,
        }
    }

    pub fn with_header(mut self) -> Self {
        self.has_header = true;
        self
    }

    /// Resolves relative paths against `root`.
    pub fn rooted(mut self, root: &Path) -> Self {
        for p in &mut self.paths {
            if p.is_relative() {
                *p = root.join(&*p);
            }
        }
        self
    }

    pub fn load(&self) -> Result<Dataset> {
        load_spec(self)
    }
}

/// Reads `path` (comma- or whitespace-separated, first line a header when it
/// is not numeric) and labels rows by `label_column`.
pub fn load_tabular(
    path: &Path,
    label_column: &str,
    normal_labels: &LabelSet,
    anomaly_labels: &LabelSet,
) -> Result<Dataset> {
    let mut spec = TabularSpec::new(path, label_column, normal_labels.clone(), anomaly_labels.clone());
    spec.has_header = sniff_header(path)?;
    spec.load()
}

pub(crate) fn open_text(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

fn sniff_header(path: &Path) -> Result<bool> {
    let mut first = String::new();
    open_text(path)?
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    let fields = split_line(&first, resolve_delimiter(Delimiter::Auto, &first));
    Ok(fields.iter().any(|f| f.parse::<f64>().is_err()))
}

fn resolve_delimiter(d: Delimiter, sample_line: &str) -> Delimiter {
    match d {
        Delimiter::Auto if sample_line.contains(',') => Delimiter::Comma,
        Delimiter::Auto => Delimiter::Whitespace,
        other => other,
    }
}

fn split_line(line: &str, d: Delimiter) -> Vec<String> {
    let line = line.trim_end_matches(['\n', '\r']);
    let parts: Vec<&str> = match d {
        Delimiter::Comma => line.split(',').collect(),
        Delimiter::Tab => line.split('\t').collect(),
        Delimiter::Semicolon => line.split(';').collect(),
        Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
    };
    parts.into_iter().map(|s| s.trim().to_string()).collect()
}

fn load_spec(spec: &TabularSpec) -> Result<Dataset> {
    if spec.paths.is_empty() {
        return Err(Error::InvalidArgument("tabular spec lists no files".into()));
    }
    if spec.normal_labels.is_rest() && spec.anomaly_labels.is_rest() {
        return Err(Error::InvalidArgument(
            "normal and anomaly labels cannot both be `rest`".into(),
        ));
    }

    let mut header: Option<Vec<String>> = spec.column_names.clone();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for path in &spec.paths {
        let reader = open_text(path)?;
        let mut delim = None;
        let mut first = true;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() || line.starts_with('@') || line.starts_with('#') {
                continue;
            }
            let d = *delim.get_or_insert_with(|| resolve_delimiter(spec.delimiter, &line));
            let fields = split_line(&line, d);
            if first && spec.has_header {
                first = false;
                match &header {
                    None => header = Some(fields),
                    Some(h) if spec.column_names.is_none() && *h != fields => {
                        return Err(Error::Schema(format!(
                            "header of {} differs from the first file's",
                            path.display()
                        )))
                    }
                    _ => {}
                }
                continue;
            }
            first = false;
            rows.push(fields);
        }
    }
    let width = match (&header, rows.first()) {
        (Some(h), _) => h.len(),
        (None, Some(r)) => r.len(),
        (None, None) => 0,
    };
    let names: Vec<String> = header.unwrap_or_else(|| (0..width).map(|j| format!("c{j}")).collect());
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != names.len()) {
        return Err(Error::Schema(format!(
            "row {i} has {} fields, expected {}",
            r.len(),
            names.len()
        )));
    }
    let label_idx = names
        .iter()
        .position(|n| n == &spec.label_column)
        .ok_or_else(|| {
            Error::Schema(format!(
                "label column {:?} not found among {:?}",
                spec.label_column, names
            ))
        })?;
    for d in &spec.drop_columns {
        if !names.contains(d) {
            return Err(Error::Schema(format!("drop column {d:?} not found")));
        }
    }

    // Label filtering.
    let mut kept: Vec<(usize, Label)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let lab = &r[label_idx];
        let is_normal = spec.normal_labels.contains(lab);
        let is_anomaly = spec.anomaly_labels.contains(lab);
        let label = match (is_normal, is_anomaly) {
            (true, true) => {
                return Err(Error::Schema(format!("label {lab:?} is both normal and anomalous")))
            }
            (true, false) => Some(Label::Normal),
            (false, true) => Some(Label::Anomaly),
            (false, false) if spec.anomaly_labels.is_rest() => Some(Label::Anomaly),
            (false, false) if spec.normal_labels.is_rest() => Some(Label::Normal),
            (false, false) => None,
        };
        if let Some(l) = label {
            kept.push((i, l));
        }
    }
    if !kept.iter().any(|(_, l)| *l == Label::Normal) {
        return Err(Error::EmptyClass(format!(
            "no rows carry a normal label {:?}",
            spec.normal_labels
        )));
    }
    kept = subsample(kept, spec);

    // Column typing over kept rows only.
    let feature_cols: Vec<usize> = (0..names.len())
        .filter(|&j| j != label_idx && !spec.drop_columns.contains(&names[j]))
        .collect();
    let mut encoders: Vec<ColumnEncoder> = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let numeric = kept.iter().all(|(i, _)| rows[*i][j].parse::<f64>().is_ok());
        if numeric {
            encoders.push(ColumnEncoder::Numeric { column: j });
        } else {
            let cats: BTreeSet<&str> = kept.iter().map(|(i, _)| rows[*i][j].as_str()).collect();
            let categories: Vec<String> = cats.into_iter().map(str::to_string).collect();
            let index = categories.iter().enumerate().map(|(k, c)| (c.clone(), k)).collect();
            encoders.push(ColumnEncoder::OneHot {
                column: j,
                categories,
                index,
            });
        }
    }
    let out_width: usize = encoders.iter().map(ColumnEncoder::width).sum();
    if out_width == 0 {
        return Err(Error::Schema("no feature columns left".into()));
    }
    let mut features = Array2::zeros((kept.len(), out_width));
    for (row_out, (i, _)) in kept.iter().enumerate() {
        let mut col = 0;
        for enc in &encoders {
            enc.write(&rows[*i], &mut features.row_mut(row_out).as_slice_mut().unwrap()[col..]);
            col += enc.width();
        }
    }
    let mut feature_names = Vec::with_capacity(out_width);
    for enc in &encoders {
        match enc {
            ColumnEncoder::Numeric { column } => feature_names.push(names[*column].clone()),
            ColumnEncoder::OneHot { column, categories, .. } => {
                feature_names.extend(categories.iter().map(|c| format!("{}={c}", names[*column])))
            }
        }
    }
    let labels = kept.iter().map(|(_, l)| *l).collect();
    let classes = kept.iter().map(|(i, _)| rows[*i][label_idx].clone()).collect();
    let mut ds = Dataset::new(features, labels, classes)?;
    ds.feature_names = feature_names;
    Ok(ds)
}

fn subsample(kept: Vec<(usize, Label)>, spec: &TabularSpec) -> Vec<(usize, Label)> {
    let cap = |label: Label, max: Option<usize>, stream: u64| -> Vec<(usize, Label)> {
        let mut rows: Vec<(usize, Label)> = kept.iter().copied().filter(|(_, l)| *l == label).collect();
        if let Some(m) = max {
            if rows.len() > m {
                rows.shuffle(&mut rng::stream(spec.subsample_seed, stream));
                rows.truncate(m);
            }
        }
        rows
    };
    let mut out = cap(Label::Normal, spec.max_normals, 1);
    out.extend(cap(Label::Anomaly, spec.max_anomalies, 2));
    out.sort_unstable_by_key(|(i, _)| *i);
    out
}

enum ColumnEncoder {
    Numeric {
        column: usize,
    },
    OneHot {
        column: usize,
        categories: Vec<String>,
        index: HashMap<String, usize>,
    },
}

impl ColumnEncoder {
    fn width(&self) -> usize {
        match self {
            ColumnEncoder::Numeric { .. } => 1,
            ColumnEncoder::OneHot { categories, .. } => categories.len(),
        }
    }

    fn write(&self, row: &[String], out: &mut [f64]) {
        match self {
            ColumnEncoder::Numeric { column } => out[0] = row[*column].parse().expect("checked numeric"),
            ColumnEncoder::OneHot { column, index, .. } => out[index[&row[*column]]] = 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn headered_csv_with_categorical_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.csv",
            "proto,bytes,label\ntcp,10,normal.\nudp,3,smurf.\nicmp,7,normal.\ntcp,1,neptune.\n",
        );
        let ds = load_tabular(&p, "label", &LabelSet::values(["normal"]), &LabelSet::rest()).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.feature_names, vec!["proto=icmp", "proto=tcp", "proto=udp", "bytes"]);
        assert_eq!(ds.features.row(0).to_vec(), vec![0.0, 1.0, 0.0, 10.0]);
        assert_eq!(ds.features.row(1).to_vec(), vec![0.0, 0.0, 1.0, 3.0]);
        assert_eq!(ds.count(Label::Anomaly), 2);
    }

    #[test]
    fn headerless_whitespace_with_numeric_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.trn", "1 2 3 1\n4 5 6 4\n7 8 9 2\n0 0 0 5\n");
        let spec = TabularSpec::new(&p, "c3", LabelSet::values(["2"]), LabelSet::values(["4.0"]));
        let ds = spec.load().unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![Label::Anomaly, Label::Normal]);
        assert_eq!(ds.classes, vec!["4", "2"]);
        assert_eq!(ds.dim(), 3);
    }

    #[test]
    fn gzip_input_is_decoded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.data.gz");
        let mut enc = flate2::write::GzEncoder::new(File::create(&p).unwrap(), flate2::Compression::fast());
        enc.write_all(b"1,2,1\n3,4,2\n5,6,1\n").unwrap();
        enc.finish().unwrap();
        let spec = TabularSpec::new(&p, "c2", LabelSet::values(["1"]), LabelSet::values(["2"]));
        assert_eq!(spec.load().unwrap().len(), 3);
    }

    #[test]
    fn error_paths() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.csv");
        let err = load_tabular(&missing, "y", &LabelSet::values(["1"]), &LabelSet::rest()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));

        let p = write(&dir, "b.csv", "a,b\n1,2\n");
        let err = load_tabular(&p, "label", &LabelSet::values(["1"]), &LabelSet::rest()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));

        let p = write(&dir, "c.csv", "a,y\n1,3\n2,4\n");
        let err = load_tabular(&p, "y", &LabelSet::values(["9"]), &LabelSet::rest()).unwrap_err();
        assert!(matches!(err, Error::EmptyClass(_)));
    }

    #[test]
    fn subsampling_caps_normals_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = (0..50).map(|i| format!("{i},{}\n", if i % 10 == 0 { 4 } else { 2 })).collect();
        let p = write(&dir, "d.csv", &body);
        let mut spec = TabularSpec::new(&p, "c1", LabelSet::values(["2"]), LabelSet::values(["4"]));
        spec.max_normals = Some(10);
        spec.subsample_seed = 7;
        let a = spec.load().unwrap();
        assert_eq!(a.count(Label::Normal), 10);
        assert_eq!(a.count(Label::Anomaly), 5);
        assert_eq!(a, spec.load().unwrap());
    }

    #[test]
    fn label_matching_rules() {
        assert!(labels_match("normal.", "normal"));
        assert!(labels_match("2", "2.0"));
        assert!(!labels_match("2", "20"));
    }
}
