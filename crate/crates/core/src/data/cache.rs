//! Binary columnar dataset cache.
//!
//! Layout (all integers little-endian `u64`, floats little-endian `f64`):
//!
//! ```text
//! magic "MLGDSET1"
//! rows, dim
//! dim x (name)                     feature names
//! dim x rows x f64                 features, column-major
//! rows x u8                        label (0 normal, 1 anomaly)
//! rows x u64                       ids
//! rows x (name)                    classes
//! u8 has_normalization [dim x f64 shift, dim x f64 scale]
//! ```
//!
//! where `(name)` is a length followed by UTF-8 bytes.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use super::{Dataset, Label, Normalization, TabularSpec};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MLGDSET1";

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format("dataset cache is truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("length overflow".into()))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn encode(ds: &Dataset) -> Vec<u8> {
    let (rows, dim) = ds.features.dim();
    let mut w = Writer(Vec::with_capacity(16 + rows * dim * 8 + rows * 24));
    w.0.extend_from_slice(MAGIC);
    w.u64(rows as u64);
    w.u64(dim as u64);
    for n in &ds.feature_names {
        w.str(n);
    }
    for col in ds.features.columns() {
        for &v in col {
            w.f64(v);
        }
    }
    for l in &ds.labels {
        w.0.push(u8::from(l.is_anomaly()));
    }
    for &id in &ds.ids {
        w.u64(id as u64);
    }
    for c in &ds.classes {
        w.str(c);
    }
    match &ds.normalization {
        None => w.0.push(0),
        Some(n) => {
            w.0.push(1);
            n.shift.iter().chain(n.scale.iter()).for_each(|&v| w.f64(v));
        }
    }
    w.0
}

pub fn decode(buf: &[u8]) -> Result<Dataset> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a dataset cache file".into()));
    }
    let rows = r.len()?;
    let dim = r.len()?;
    let feature_names = (0..dim).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
    let mut features = Array2::zeros((rows, dim));
    for j in 0..dim {
        for i in 0..rows {
            features[[i, j]] = r.f64()?;
        }
    }
    let labels = (0..rows)
        .map(|_| match r.u8()? {
            0 => Ok(Label::Normal),
            1 => Ok(Label::Anomaly),
            b => Err(Error::Format(format!("bad label byte {b}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = (0..rows).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
    let classes = (0..rows).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
    let normalization = match r.u8()? {
        0 => None,
        1 => {
            let shift = (0..dim).map(|_| r.f64()).collect::<Result<Array1<f64>>>()?;
            let scale = (0..dim).map(|_| r.f64()).collect::<Result<Array1<f64>>>()?;
            Some(Normalization { shift, scale })
        }
        b => return Err(Error::Format(format!("bad normalization flag {b}"))),
    };
    if r.pos != buf.len() {
        return Err(Error::Format("trailing bytes after dataset cache".into()));
    }
    Ok(Dataset {
        features,
        labels,
        classes,
        ids,
        feature_names,
        normalization,
    })
}

pub fn write_cache(ds: &Dataset, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(ds)).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: &Path) -> Result<Dataset> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode(&buf)
}

/// SHA-256 over the `TabularSpec` and the bytes of every input file.
pub fn cache_key(spec: &TabularSpec) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(spec).map_err(|e| Error::Format(e.to_string()))?);
    for p in &spec.paths {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// Loads through `cache_dir/<key>.mlgds`, creating it on a miss.
pub fn load_tabular_cached(spec: &TabularSpec, cache_dir: &Path) -> Result<Dataset> {
    let key = cache_key(spec)?;
    let path: PathBuf = cache_dir.join(format!("{key}.mlgds"));
    if path.exists() {
        return read_cache(&path);
    }
    let ds = spec.load()?;
    fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let tmp = cache_dir.join(format!("{key}.mlgds.tmp"));
    write_cache(&ds, &tmp)?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, LabelSet, SplitSpec};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_lossless(
            rows in 1usize..20, dim in 1usize..5,
            vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 100),
            normalized in any::<bool>(),
        ) {
            let features = Array2::from_shape_fn((rows, dim), |(i, j)| vals[(i * dim + j) % vals.len()]);
            let labels = (0..rows).map(|i| if i % 3 == 0 { Label::Anomaly } else { Label::Normal }).collect();
            let classes = (0..rows).map(|i| format!("k{}", i % 4)).collect();
            let mut ds = Dataset::new(features, labels, classes).unwrap();
            ds.ids = (0..rows).map(|i| i * 31 + 5).collect();
            if normalized {
                ds.normalization = Some(Normalization {
                    shift: Array1::from_elem(dim, 0.25),
                    scale: Array1::from_elem(dim, 3.5),
                });
            }
            let back = decode(&encode(&ds)).unwrap();
            let bits = |d: &Dataset| d.features.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&ds), bits(&back));
            prop_assert_eq!(ds, back);
        }
    }

    #[test]
    fn cached_load_matches_direct_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "0.1,0.2,1\n0.3,0.4,2\n0.5,0.6,1\n").unwrap();
        let spec = TabularSpec::new(&p, "c2", LabelSet::values(["1"]), LabelSet::values(["2"]));
        let cache_dir = dir.path().join("cache");
        let first = load_tabular_cached(&spec, &cache_dir).unwrap();
        let second = load_tabular_cached(&spec, &cache_dir).unwrap();
        assert_eq!(first, spec.load().unwrap());
        assert_eq!(first, second);
        assert_eq!(fs::read_dir(&cache_dir).unwrap().count(), 1);

        let splits = split(&first, &SplitSpec { train_fraction: 0.5, holdout_fraction: 0.0, seed: 1 }).unwrap();
        let p2 = dir.path().join("t.mlgds");
        write_cache(&splits.test, &p2).unwrap();
        assert_eq!(read_cache(&p2).unwrap(), splits.test);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        assert!(matches!(decode(b"nope"), Err(Error::Format(_))));
        let ds = Dataset::new(Array2::zeros((2, 1)), vec![Label::Normal; 2], vec!["a".into(), "b".into()]).unwrap();
        let mut bytes = encode(&ds);
        bytes.pop();
        assert!(decode(&bytes).is_err());
    }
}
