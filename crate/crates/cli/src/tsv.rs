//! Tab-separated artifact files with a one-line header.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back yields bit-identical values and rewriting it yields identical
//! bytes.

use std::fs;
use std::path::Path;

use minlgan::Dataset;

use crate::error::{CliError, Result};

pub struct Table {
    header: Vec<String>,
    body: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        assert_eq!(cells.len(), self.header.len(), "row width must match the header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push('\t');
            }
            let c = c.as_ref();
            debug_assert!(!c.contains(['\t', '\n']), "cell {c:?} contains a separator");
            self.body.push_str(c);
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join("\t");
        s.push('\n');
        s.push_str(&self.body);
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Parsed table: header plus string cells.
pub struct Parsed {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Parsed {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::parse(path, "table", "missing header"))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let rows = lines
            .enumerate()
            .map(|(i, l)| {
                let cells: Vec<String> = l.split('\t').map(str::to_string).collect();
                if cells.len() == header.len() {
                    Ok(cells)
                } else {
                    Err(CliError::parse(path, "table", format!("row {} has {} cells", i + 2, cells.len())))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Parsed { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn parse_f64(path: &Path, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|e| CliError::parse(path, "number", format!("{cell:?}: {e}")))
}

/// Scores of one scoring mode over a labelled set.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreFile {
    pub ids: Vec<usize>,
    pub labels: Vec<bool>,
    pub classes: Vec<String>,
    /// One column per member, or a single column.
    pub columns: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

pub const SCORE_COLUMNS: [&str; 3] = ["id", "label", "class"];

impl ScoreFile {
    pub fn from_dataset(ds: &Dataset, columns: Vec<String>, scores: Vec<Vec<f64>>) -> Self {
        assert_eq!(columns.len(), scores.len());
        assert!(scores.iter().all(|s| s.len() == ds.len()));
        ScoreFile {
            ids: ds.ids.clone(),
            labels: ds.is_anomaly(),
            classes: ds.classes.clone(),
            columns,
            scores,
        }
    }

    pub fn single(ds: &Dataset, scores: Vec<f64>) -> Self {
        Self::from_dataset(ds, vec!["score".into()], vec![scores])
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut header: Vec<String> = SCORE_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend(self.columns.iter().cloned());
        let mut t = Table::new(&header);
        for i in 0..self.ids.len() {
            let mut row = vec![
                self.ids[i].to_string(),
                if self.labels[i] { "anomaly" } else { "normal" }.to_string(),
                self.classes[i].clone(),
            ];
            row.extend(self.scores.iter().map(|s| fmt_f64(s[i])));
            t.row(&row);
        }
        t.write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let p = Parsed::read(path)?;
        if p.header.len() < 4 || p.header[..3] != SCORE_COLUMNS {
            return Err(CliError::parse(path, "score file", "header must start with id, label, class"));
        }
        let columns = p.header[3..].to_vec();
        let mut out = ScoreFile {
            ids: Vec::with_capacity(p.rows.len()),
            labels: Vec::with_capacity(p.rows.len()),
            classes: Vec::with_capacity(p.rows.len()),
            scores: vec![Vec::with_capacity(p.rows.len()); columns.len()],
            columns,
        };
        for r in &p.rows {
            out.ids.push(r[0].parse().map_err(|e| CliError::parse(path, "id", e))?);
            out.labels.push(match r[1].as_str() {
                "anomaly" => true,
                "normal" => false,
                other => return Err(CliError::parse(path, "label", other)),
            });
            out.classes.push(r[2].clone());
            for (j, cell) in r[3..].iter().enumerate() {
                out.scores[j].push(parse_f64(path, cell)?);
            }
        }
        Ok(out)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|i| self.scores[i].as_slice())
    }
}

pub fn write_roc(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut t = Table::new(&["fpr", "tpr"]);
    for (f, tp) in points {
        t.row(&[fmt_f64(*f), fmt_f64(*tp)]);
    }
    t.write(path)
}

pub fn read_roc(path: &Path) -> Result<Vec<(f64, f64)>> {
    let p = Parsed::read(path)?;
    p.rows
        .iter()
        .map(|r| Ok((parse_f64(path, &r[0])?, parse_f64(path, &r[1])?)))
        .collect()
}
