//! Scatter and score-map figures for runs on 2-D toy data.

use std::path::PathBuf;

use minlgan::data::moons_arc_distance;
use minlgan::rng::stream;
use minlgan::score::score_model;
use minlgan::train::vae_score_rng;
use minlgan::{Checkpoint, Model};
use ndarray::{Array2, ArrayView2};

use crate::config::{DatasetConfig, ToyShape};
use crate::error::{CliError, Result};
use crate::plots::{color, Canvas, Frame};
use crate::runner::{prepare_toy, FinishedRun};
use crate::tsv::{fmt_f64, Table};

/// Generator samples drawn per figure.
pub const GENERATED: usize = 1000;
/// Distance from the normal manifold beyond which a sample counts as off it.
pub const OFF_MANIFOLD: f64 = 0.3;
const SAMPLE_STREAM: u64 = 0x9e17;

/// Distance of each row to the noiseless manifold of `shape`.
pub fn manifold_distances(shape: ToyShape, x: ArrayView2<f64>) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|r| match shape {
            ToyShape::Circle => (r[0].hypot(r[1]) - 1.0).abs(),
            ToyShape::Moons => moons_arc_distance(r[0], r[1]),
        })
        .collect()
}

pub fn off_manifold_fraction(shape: ToyShape, x: ArrayView2<f64>) -> f64 {
    let d = manifold_distances(shape, x);
    d.iter().filter(|&&v| v > OFF_MANIFOLD).count() as f64 / d.len().max(1) as f64
}

/// `GENERATED` samples from the generator of `ckpt`, if it has one.
pub fn generator_samples(ckpt: &Checkpoint, seed: u64) -> Result<Option<Array2<f64>>> {
    let Some(g) = ckpt.generator() else { return Ok(None) };
    let z = g.sample_prior(GENERATED, &mut stream(seed, SAMPLE_STREAM));
    Ok(Some(g.generate(z.view())?))
}

/// Per-restart figures: data with generator samples, and the anomaly score
/// over a `grid` x `grid` lattice. Returns the files written.
pub fn emit_toy_figures(run: &FinishedRun, grid: usize) -> Result<Vec<PathBuf>> {
    let dim = run.data.feature_names.len();
    let DatasetConfig::Toy(toy) = &run.config.dataset else {
        return Err(CliError::InvalidArgument(format!(
            "toy figures need 2-D toy data; run {} uses {dim}-D tabular data",
            run.dir.display()
        )));
    };
    if dim != 2 {
        return Err(CliError::InvalidArgument(format!("toy figures need 2-D data, got {dim}-D")));
    }
    if grid < 2 {
        return Err(CliError::InvalidArgument("grid resolution must be at least 2".into()));
    }
    let data = prepare_toy(toy)?;
    let normals: Vec<(f64, f64)> = data.train.features.rows().into_iter().map(|r| (r[0], r[1])).collect();
    let [lo, hi] = toy.anomaly_box;
    let frame = Frame { x: [lo, hi], y: [lo, hi] };
    let lattice: Array2<f64> = Array2::from_shape_fn((grid * grid, 2), |(i, j)| {
        let (row, col) = (i / grid, i % grid);
        let t = if j == 0 { col } else { row } as f64 / (grid - 1) as f64;
        lo + t * (hi - lo)
    });

    let noise = &run.config.train.noise;
    let mut written = Vec::new();
    let mut summary = Table::new(&["restart", "seed", "generator", "off_manifold_fraction"]);
    for r in &run.record.restarts {
        let rdir = run.restart_dir(r.index);
        let selected = Checkpoint::load(&rdir.join("checkpoint.json"))?;
        let last = match Checkpoint::load(&rdir.join("final.json")) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("{}: {e}; plotting the selected generator", rdir.display());
                None
            }
        };
        let (which, gen) = match &last {
            Some(c) => ("final", generator_samples(c, r.seed)?),
            None => ("selected", generator_samples(&selected, r.seed)?),
        };

        let mut canvas = Canvas::new(2, &format!("{} restart {} (seed {})", run.config.name, r.index, r.seed));
        let mut left = canvas.panel(0, frame, "normal data and generator samples");
        left.points(&normals, color(0), 1.5);
        let mut legend = vec![("normal", color(0))];
        if let Some(g) = &gen {
            let pts: Vec<(f64, f64)> = g.rows().into_iter().map(|r| (r[0], r[1])).collect();
            left.points(&pts, color(1), 1.5);
            legend.push(("generated", color(1)));
            let frac = off_manifold_fraction(toy.shape, g.view());
            summary.row(&[r.index.to_string(), r.seed.to_string(), which.to_string(), fmt_f64(frac)]);
        }
        left.legend(&legend);

        let mut rng = vae_score_rng(r.seed);
        let scores = score_model(&selected.model, noise, lattice.view(), run.config.train.vae_score_samples, &mut rng)?;
        // Discriminator panels show logits (high = normal); others show the
        // negated anomaly score so that the colour convention matches.
        let values: Vec<Vec<f64>> = scores.scores.chunks(grid).map(|row| row.iter().map(|s| -s).collect()).collect();
        let label = match selected.model {
            Model::Gan { .. } => "discriminator logit",
            _ => "negated anomaly score",
        };
        let mut right = canvas.panel(1, frame, label);
        right.heatmap(&values);
        right.points(&normals, "#000000", 0.6);

        let path = rdir.join("toy.svg");
        canvas.save(&path)?;
        written.push(path);
    }
    let path = run.dir.join("toy_generator.tsv");
    summary.write(&path)?;
    written.push(path);
    Ok(written)
}
