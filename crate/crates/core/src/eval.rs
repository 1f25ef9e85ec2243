//! ROC curves and areas, score distribution summaries, ensemble-size
//! stability curves.
//!
//! Anomalies are the positive class. Thresholds sweep the distinct scores in
//! descending order and tied scores share one threshold, which makes the
//! trapezoidal area equal to the Mann–Whitney statistic with half credit for
//! ties.

use std::collections::BTreeMap;

use ndarray::Array1;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::score::{ensemble_from_logits, scaled_ensemble_from_logits, EnsembleCalibration, ScoreVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocResult {
    /// Trapezoidal area of the stored points.
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
            .sum()
    }
}

/// `labels[i]` is `true` for an anomaly.
pub fn roc(scores: &[f64], labels: &[bool]) -> Result<RocResult> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!("{} labels", scores.len()), labels.len()));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidArgument(format!("score {s} cannot be ranked")));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::EmptyClass(format!(
            "ROC needs both classes, got {pos} anomalies and {neg} normals"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::with_capacity(order.len() + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the area in units of one (positive, negative) pair.
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp0 + tp);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocResult { points, auc })
}

pub fn roc_of(scores: &ScoreVector, labels: &[bool]) -> Result<RocResult> {
    roc(&scores.scores, labels)
}

/// Five-number summary; quartiles by linear interpolation between order
/// statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("cannot summarize an empty group".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        Ok(BoxStats {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

/// One [`BoxStats`] per distinct group label, in label order.
pub fn boxstats(scores: &[f64], groups: &[String]) -> Result<Vec<(String, BoxStats)>> {
    if scores.len() != groups.len() {
        return Err(Error::shape(format!("{} group labels", scores.len()), groups.len()));
    }
    let mut by_group: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (s, g) in scores.iter().zip(groups) {
        by_group.entry(g.as_str()).or_default().push(*s);
    }
    by_group
        .into_iter()
        .map(|(g, v)| Ok((g.to_string(), BoxStats::from_values(&v)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    Plain,
    Scaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub k: usize,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub subsets: usize,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// AUC of `k`-member sub-ensembles for every `k` in `1..=N`.
///
/// `member_scores` are per-member GAN scores (negated logits). When every
/// `k`-subset fits in `trials` they are enumerated exhaustively; otherwise
/// `trials` subsets are drawn at random. The standard deviation is the
/// population one.
pub fn stability_curve(
    member_scores: &[ScoreVector],
    labels: &[bool],
    mode: EnsembleMode,
    calibration: Option<&EnsembleCalibration>,
    trials: usize,
    seed: u64,
) -> Result<Vec<StabilityPoint>> {
    if trials < 1 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = member_scores.len();
    if n == 0 {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    let logits: Vec<Array1<f64>> = member_scores
        .iter()
        .map(|s| s.scores.iter().map(|v| -v).collect())
        .collect();
    let cal = match mode {
        EnsembleMode::Plain => None,
        EnsembleMode::Scaled => {
            let cal = calibration.ok_or_else(|| {
                Error::InvalidArgument("scaled stability curve needs a calibration".into())
            })?;
            if cal.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "calibration covers {} members but {n} were given",
                    cal.len()
                )));
            }
            Some(cal)
        }
    };

    let mut rng = rng::stream(seed, 0x57ab);
    let mut curve = Vec::with_capacity(n);
    for k in 1..=n {
        let subsets = if binomial(n, k) <= trials as u128 {
            all_subsets(n, k)
        } else {
            (0..trials)
                .map(|_| {
                    let mut s = sample(&mut rng, n, k).into_vec();
                    s.sort_unstable();
                    s
                })
                .collect()
        };
        let aucs = subsets
            .iter()
            .map(|subset| {
                let chosen: Vec<Array1<f64>> = subset.iter().map(|&i| logits[i].clone()).collect();
                let agg = match cal {
                    None => ensemble_from_logits(&chosen)?,
                    Some(c) => scaled_ensemble_from_logits(&chosen, &c.subset(subset))?,
                };
                Ok(roc(&agg.scores, labels)?.auc)
            })
            .collect::<Result<Vec<f64>>>()?;
        let m = aucs.len() as f64;
        let mean = aucs.iter().sum::<f64>() / m;
        let var = aucs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / m;
        curve.push(StabilityPoint {
            k,
            mean_auc: mean,
            std_auc: var.sqrt(),
            subsets: aucs.len(),
        });
    }
    Ok(curve)
}
