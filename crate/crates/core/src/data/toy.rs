//! Two-dimensional toy distributions.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Label};
use crate::error::{Error, Result};
use crate::rng;

fn normal_toy(points: Array2<f64>, class: &str) -> Result<Dataset> {
    let n = points.nrows();
    Dataset::new(points, vec![Label::Normal; n], vec![class.to_string(); n])
}

/// `n` points on the unit circle with isotropic Gaussian noise of standard
/// deviation `noise_sigma`, all labelled normal.
pub fn make_circle(n: usize, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::InvalidArgument("make_circle needs n >= 1".into()));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise_sigma {noise_sigma} must be >= 0")));
    }
    let mut rng = rng::stream(seed, 0xc1c1);
    let mut x = Array2::zeros((n, 2));
    for mut row in x.rows_mut() {
        let t: f64 = rng.random_range(0.0..2.0 * PI);
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        row[0] = t.cos() + noise_sigma * nx;
        row[1] = t.sin() + noise_sigma * ny;
    }
    normal_toy(x, "circle")
}

/// Two interleaving half circles: the upper arc of the unit circle and the
/// lower arc of the unit circle centred at `(1, 0.5)`. The upper arc gets
/// `n / 2` points, the lower one the rest.
pub fn make_moons(n: usize, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidArgument("make_moons needs n >= 2".into()));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise_sigma {noise_sigma} must be >= 0")));
    }
    let mut rng = rng::stream(seed, 0x3003);
    let n_upper = n / 2;
    let mut x = Array2::zeros((n, 2));
    for (i, mut row) in x.rows_mut().into_iter().enumerate() {
        let t: f64 = rng.random_range(0.0..=PI);
        let (px, py) = if i < n_upper {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        row[0] = px + noise_sigma * nx;
        row[1] = py + noise_sigma * ny;
    }
    normal_toy(x, "moons")
}

fn half_circle_distance(px: f64, py: f64, cx: f64, cy: f64, upper: bool) -> f64 {
    let (qx, qy) = (px - cx, py - cy);
    let inside = if upper { qy >= 0.0 } else { qy <= 0.0 };
    if inside {
        ((qx * qx + qy * qy).sqrt() - 1.0).abs()
    } else {
        let d1 = ((qx - 1.0).powi(2) + qy * qy).sqrt();
        let d2 = ((qx + 1.0).powi(2) + qy * qy).sqrt();
        d1.min(d2)
    }
}

/// Euclidean distance from `(x, y)` to the nearer of the two moon arcs.
pub fn moons_arc_distance(x: f64, y: f64) -> f64 {
    half_circle_distance(x, y, 0.0, 0.0, true).min(half_circle_distance(x, y, 1.0, 0.5, false))
}

/// `n` points uniform on `[lo, hi]^dim`, all labelled `label`.
pub fn uniform_box(n: usize, dim: usize, lo: f64, hi: f64, label: Label, seed: u64) -> Result<Dataset> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty box [{lo}, {hi}]")));
    }
    let mut rng = rng::stream(seed, 0xb0b0);
    let x = Array2::from_shape_simple_fn((n, dim), || rng.random_range(lo..hi));
    Dataset::new(x, vec![label; n], vec!["uniform".to_string(); n])
}
