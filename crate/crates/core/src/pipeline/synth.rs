//! Deterministic synthetic datasets for the three bundled scenarios.

use super::config::{PipelineConfig, SpaceKind};
use super::io::ObjectSet;
use crate::corrmat::CorrelationMatrix;
use crate::curves::bump_curve;
use crate::error::{Error, Result};
use crate::shapes::LandmarkConfiguration;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Shape predictor, shape response: the response perturbation is a
    /// rolled copy of the predictor perturbation.
    ShapesOnShapes,
    /// Curve predictor (bumps), shape response driven by bump height and
    /// peak position.
    CurveOnShape,
    /// Scalar speed predictor, two-block correlation response whose
    /// cross-block level follows the speed.
    SpeedOnCorrmat,
}

impl FromStr for SynthKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shapes-on-shapes" => Ok(SynthKind::ShapesOnShapes),
            "curve-on-shape" => Ok(SynthKind::CurveOnShape),
            "speed-on-corrmat" => Ok(SynthKind::SpeedOnCorrmat),
            other => Err(Error::InvalidInput(format!(
                "unknown scenario {other:?} \
                 (expected shapes-on-shapes|curve-on-shape|speed-on-corrmat)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub ids: Vec<String>,
    pub predictors: ObjectSet,
    pub responses: ObjectSet,
    pub config: PipelineConfig,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// An irregular reference configuration of k landmarks in 3D.
fn base_shape(k: usize) -> Array2<f64> {
    Array2::from_shape_fn((k, 3), |(i, j)| {
        let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
        match j {
            0 => th.cos() * (1.0 + 0.08 * i as f64),
            1 => th.sin() * (1.25 - 0.04 * i as f64),
            _ => 0.35 * (1.3 * i as f64).sin(),
        }
    })
}

/// A centered random k x 3 perturbation (translation removed so it acts on
/// shape, not position).
fn centered_noise(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> Array2<f64> {
    let mut e = Array2::from_shape_fn((k, 3), |_| scale * gauss(rng));
    for j in 0..3 {
        let mean = e.column(j).sum() / k as f64;
        e.column_mut(j).mapv_inplace(|v| v - mean);
    }
    e
}

/// Rolls landmark rows by one: a fixed linear, norm-preserving map used as
/// the ground-truth effect in the shape-on-shape scenario.
fn roll_rows(e: &Array2<f64>) -> Array2<f64> {
    let k = e.nrows();
    Array2::from_shape_fn(e.dim(), |(i, j)| e[[(i + 1) % k, j]])
}

pub fn synth_dataset(
    kind: SynthKind,
    n: usize,
    seed: u64,
    signal_strength: f64,
) -> Result<SynthDataset> {
    if n < 8 {
        return Err(Error::InvalidParams(format!(
            "synthetic datasets need n >= 8, got {n}"
        )));
    }
    if !signal_strength.is_finite() || signal_strength < 0.0 {
        return Err(Error::InvalidParams(format!(
            "signal strength must be a nonnegative real, got {signal_strength}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..n).map(|i| format!("s{:03}", i + 1)).collect();
    let (predictors, responses, px, py) = match kind {
        SynthKind::ShapesOnShapes => {
            let k = 8;
            let base = base_shape(k);
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let e = centered_noise(&mut rng, k, 0.06);
                let noise = centered_noise(&mut rng, k, 0.015);
                xs.push(LandmarkConfiguration::new(&base + &e)?);
                ys.push(LandmarkConfiguration::new(
                    &base + &(roll_rows(&e) * signal_strength) + &noise,
                )?);
            }
            (
                ObjectSet::Shapes(xs),
                ObjectSet::Shapes(ys),
                SpaceKind::Shape,
                SpaceKind::Shape,
            )
        }
        SynthKind::CurveOnShape => {
            let k = 8;
            let base = base_shape(k);
            // fixed effect directions, shared by every seed
            let mut dir_rng = ChaCha8Rng::seed_from_u64(0x0eff_ec7);
            let d1 = centered_noise(&mut dir_rng, k, 0.06);
            let d2 = centered_noise(&mut dir_rng, k, 0.06);
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let u1: f64 = rng.gen_range(-1.0..1.0); // peak offset
                let u2: f64 = rng.gen_range(-1.0..1.0); // height offset
                let noise = centered_noise(&mut rng, k, 0.012);
                xs.push(bump_curve(0.5 + 0.15 * u1, 0.12, 1.0 + 0.3 * u2, 120));
                ys.push(LandmarkConfiguration::new(
                    &base + &((&d1 * u1 + &d2 * u2) * signal_strength) + &noise,
                )?);
            }
            (
                ObjectSet::Curves(xs),
                ObjectSet::Shapes(ys),
                SpaceKind::Curve,
                SpaceKind::Shape,
            )
        }
        SynthKind::SpeedOnCorrmat => {
            let m = 6;
            let within = 0.7;
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let speed: f64 = rng.gen_range(0.5..2.0);
                let noise = 0.2 * gauss(&mut rng);
                let cross = 0.65 * (signal_strength * (speed - 1.25) * 2.0 + noise).tanh();
                let mut c = Array2::<f64>::eye(m);
                for i in 0..m {
                    for j in 0..m {
                        if i == j {
                            continue;
                        }
                        c[[i, j]] = if (i < m / 2) == (j < m / 2) { within } else { cross };
                    }
                }
                xs.push(vec![speed]);
                ys.push(CorrelationMatrix::new(c)?);
            }
            (
                ObjectSet::Points(xs),
                ObjectSet::Corrs(ys),
                SpaceKind::Point,
                SpaceKind::Corr,
            )
        }
    };
    let mut config = PipelineConfig::new(px, py);
    config.seed = seed;
    Ok(SynthDataset {
        ids,
        predictors,
        responses,
        config,
    })
}
