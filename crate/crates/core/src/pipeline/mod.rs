//! End-to-end distance-based regression: embed both metric spaces, fit a
//! partial-least-squares map between the score spaces, and translate
//! predictions and effects back into objects.

pub mod config;
pub mod io;
pub mod motion;
pub mod report;
pub mod synth;

use crate::curves::{normalize_curves, CurveBackscorer, CurveSearchConfig, SampledCurve};
use crate::corrmat::{CorrBackscoreConfig, CorrBackscorer};
use crate::error::{Error, Result};
use crate::euclid::EuclideanBackscorer;
use crate::inference::{
    f_statistic, permutation_test, sum_residuals, FitAssessment, PermutationResult, ResidualSum,
};
use crate::mds::{cmds, covering_dimension, gower_score, MdsEmbedding, Score};
use crate::metric::Backscorer;
use crate::pls::{assemble_design, loo_select, simpls_fit, DesignBlock, PlsModel};
use crate::shapes::ShapeBackscorer;
use config::PipelineConfig;
use io::{Object, ObjectSet};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

/// A fitted backscorer for whichever space the response lives in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum FittedBackscorer {
    Shape(ShapeBackscorer),
    Curve(CurveBackscorer),
    Corr(CorrBackscorer),
    Point(EuclideanBackscorer),
}

impl FittedBackscorer {
    fn fit(set: &ObjectSet, embedding: MdsEmbedding, tol_score: Option<f64>) -> Result<Self> {
        Ok(match set {
            ObjectSet::Shapes(v) => {
                let mut bs = ShapeBackscorer::fit(v.clone(), embedding)?;
                if let Some(t) = tol_score {
                    bs.tol_score = t;
                }
                FittedBackscorer::Shape(bs)
            }
            ObjectSet::Curves(v) => {
                let cfg = CurveSearchConfig {
                    tol_score,
                    ..CurveSearchConfig::default()
                };
                FittedBackscorer::Curve(CurveBackscorer::fit(v.clone(), embedding, cfg)?)
            }
            ObjectSet::Corrs(v) => {
                let cfg = CorrBackscoreConfig {
                    tol_score,
                    ..CorrBackscoreConfig::default()
                };
                FittedBackscorer::Corr(CorrBackscorer::fit(v.clone(), embedding, cfg)?)
            }
            ObjectSet::Points(v) => {
                let mut bs = EuclideanBackscorer::fit(v.clone(), embedding)?;
                if let Some(t) = tol_score {
                    bs.tol_score = t;
                }
                FittedBackscorer::Point(bs)
            }
        })
    }

    pub fn backscore(&self, target: &Score) -> Result<Object> {
        Ok(match self {
            FittedBackscorer::Shape(bs) => Object::Shape(bs.backscore(target)?),
            FittedBackscorer::Curve(bs) => Object::Curve(bs.backscore(target)?),
            FittedBackscorer::Corr(bs) => Object::Corr(bs.backscore(target)?),
            FittedBackscorer::Point(bs) => Object::Point(bs.backscore(target)?),
        })
    }

    pub fn centroid(&self) -> Object {
        match self {
            FittedBackscorer::Shape(bs) => Object::Shape(bs.centroid().clone()),
            FittedBackscorer::Curve(bs) => Object::Curve(bs.centroid().clone()),
            FittedBackscorer::Corr(bs) => Object::Corr(bs.centroid().clone()),
            FittedBackscorer::Point(bs) => Object::Point(bs.centroid().clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub ids: Vec<String>,
    /// Training predictors (curves stored normalized; see `predictor_scale`).
    pub predictors: ObjectSet,
    pub responses: ObjectSet,
    /// Curve sets are divided by their global maximum at ingest; objects
    /// returned to the caller are multiplied back by these.
    pub predictor_scale: f64,
    pub response_scale: f64,
    pub predictor_embedding: MdsEmbedding,
    pub response_embedding: MdsEmbedding,
    pub covariate_names: Vec<String>,
    pub covariate_rows: Vec<Vec<f64>>,
    pub pls: PlsModel,
    pub predictor_backscorer: FittedBackscorer,
    pub response_backscorer: FittedBackscorer,
    /// In-sample fit quality measured between backscored predictions and
    /// the observed responses, against the response centroid as null.
    pub assessment: FitAssessment,
}

/// Divides every curve by the set's global maximum; other spaces pass
/// through with scale 1.
fn normalize_set(set: ObjectSet) -> Result<(ObjectSet, f64)> {
    match set {
        ObjectSet::Curves(v) => {
            let (normalized, scale) = normalize_curves(&v)?;
            Ok((ObjectSet::Curves(normalized), scale))
        }
        other => Ok((other, 1.0)),
    }
}

fn rescale_object(obj: Object, scale: f64) -> Object {
    match obj {
        Object::Curve(c) if scale != 1.0 => {
            let f = c.f.iter().map(|v| v * scale).collect();
            Object::Curve(SampledCurve { t: c.t, f })
        }
        other => other,
    }
}

/// Column mean/sd (n-1 denominator) pairs for covariate standardization.
fn covariate_stats(rows: &[Vec<f64>], p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for row in rows {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v / n as f64;
        }
    }
    if n > 1 {
        for j in 0..p {
            let var: f64 = rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>()
                / (n - 1) as f64;
            sds[j] = var.sqrt();
        }
    }
    (means, sds)
}

fn embed(
    set: &ObjectSet,
    dims: Option<usize>,
    coverage: f64,
    dim_cap: usize,
) -> Result<MdsEmbedding> {
    let d = set.distance_matrix()?;
    let full = cmds(&d, d.n().saturating_sub(1).max(1), 0.0)?;
    let k = match dims {
        Some(k) => k.min(full.k).max(1),
        None => covering_dimension(&full.explained, coverage, dim_cap),
    };
    Ok(full.truncated(k))
}

fn object_assessment(
    predicted: &[Object],
    observed: &ObjectSet,
    null_prediction: &Object,
    mode: ResidualSum,
) -> Result<FitAssessment> {
    let residuals: Vec<f64> = predicted
        .iter()
        .enumerate()
        .map(|(i, p)| ObjectSet::object_distance(p, &observed.get(i)))
        .collect::<Result<_>>()?;
    let rss = sum_residuals(&residuals, mode);
    let null_res = observed.distances_to(null_prediction)?;
    let tss = sum_residuals(&null_res, mode);
    if tss <= 0.0 {
        return Err(Error::ZeroTss);
    }
    Ok(FitAssessment {
        residuals,
        rss,
        tss,
        r2: 1.0 - rss / tss,
    })
}

pub fn fit_pipeline(
    ids: Vec<String>,
    predictors: ObjectSet,
    responses: ObjectSet,
    covariates: Option<(Vec<String>, Vec<Vec<f64>>)>,
    config: PipelineConfig,
) -> Result<FittedPipeline> {
    let n = predictors.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 subjects, got {n}"
        )));
    }
    if responses.len() != n || ids.len() != n {
        return Err(Error::DimensionMismatch {
            what: "subject count",
            expected: n,
            found: responses.len().min(ids.len()),
        });
    }
    if predictors.kind() != config.predictor_space || responses.kind() != config.response_space {
        return Err(Error::InvalidInput(
            "dataset spaces disagree with the configuration".into(),
        ));
    }
    let (covariate_names, covariate_rows) = covariates.unwrap_or_default();
    if !covariate_names.is_empty() {
        if covariate_rows.len() != n {
            return Err(Error::DimensionMismatch {
                what: "covariate rows",
                expected: n,
                found: covariate_rows.len(),
            });
        }
        for row in &covariate_rows {
            if row.len() != covariate_names.len() {
                return Err(Error::DimensionMismatch {
                    what: "covariate columns",
                    expected: covariate_names.len(),
                    found: row.len(),
                });
            }
        }
    }

    let (predictors, predictor_scale) = normalize_set(predictors)?;
    let (responses, response_scale) = normalize_set(responses)?;

    let predictor_embedding = embed(
        &predictors,
        config.predictor_dims,
        config.coverage,
        config.dim_cap,
    )?;
    // the modeled response components also bound the embedding used for
    // backscoring: predictions never leave the modeled subspace
    let response_dims = match (config.response_dims, config.response_components) {
        (d, Some(q)) => Some(d.unwrap_or(q).min(q)),
        (d, None) => d,
    };
    let response_embedding = embed(&responses, response_dims, config.coverage, config.dim_cap)?;

    let mut blocks = vec![DesignBlock::scores(
        "scores",
        predictor_embedding.scores.clone(),
    )];
    for (j, name) in covariate_names.iter().enumerate() {
        let values: Vec<f64> = covariate_rows.iter().map(|r| r[j]).collect();
        blocks.push(DesignBlock::covariate(name, &values));
    }
    let x = assemble_design(&blocks)?;
    let y = response_embedding.scores.clone();

    let a_cap = config.a_max.min(x.ncols()).min(n.saturating_sub(2)).max(1);
    let a = loo_select(&x, &y, a_cap)?;
    let pls = simpls_fit(&x, &y, a)?;

    let predictor_backscorer =
        FittedBackscorer::fit(&predictors, predictor_embedding.clone(), config.tol_score)?;
    let response_backscorer =
        FittedBackscorer::fit(&responses, response_embedding.clone(), config.tol_score)?;

    let predicted_scores = pls.predict_rows(&x)?;
    let predicted: Vec<Object> = (0..n)
        .map(|i| response_backscorer.backscore(&Score(predicted_scores.row(i).to_vec())))
        .collect::<Result<_>>()?;
    let assessment = object_assessment(
        &predicted,
        &responses,
        &response_backscorer.centroid(),
        config.residuals,
    )?;

    Ok(FittedPipeline {
        config,
        ids,
        predictors,
        responses,
        predictor_scale,
        response_scale,
        predictor_embedding,
        response_embedding,
        covariate_names,
        covariate_rows,
        pls,
        predictor_backscorer,
        response_backscorer,
        assessment,
    })
}

impl FittedPipeline {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Rebuilds the assembled design matrix (scores block + standardized
    /// covariates).
    pub fn design(&self) -> Result<Array2<f64>> {
        let mut blocks = vec![DesignBlock::scores(
            "scores",
            self.predictor_embedding.scores.clone(),
        )];
        for (j, name) in self.covariate_names.iter().enumerate() {
            let values: Vec<f64> = self.covariate_rows.iter().map(|r| r[j]).collect();
            blocks.push(DesignBlock::covariate(name, &values));
        }
        assemble_design(&blocks)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Predicts the response object for a new predictor and covariate row.
    pub fn predict_new(&self, x_new: &Object, extra: &[f64]) -> Result<Object> {
        if x_new.kind() != self.config.predictor_space {
            return Err(Error::InvalidInput(format!(
                "new predictor lives in {} space, model expects {}",
                x_new.kind(),
                self.config.predictor_space
            )));
        }
        if extra.len() != self.covariate_names.len() {
            return Err(Error::DimensionMismatch {
                what: "covariate values",
                expected: self.covariate_names.len(),
                found: extra.len(),
            });
        }
        let x_new = match x_new {
            Object::Curve(c) => Object::Curve(SampledCurve::new(
                c.t.clone(),
                c.f.iter().map(|v| v / self.predictor_scale).collect(),
            )?),
            other => other.clone(),
        };
        let d_new = self.predictors.distances_to(&x_new)?;
        let score = gower_score(&self.predictor_embedding, &d_new)?;
        let row = self.design_row(&score, extra);
        let target = Score(self.pls.predict(&row)?);
        let obj = self.response_backscorer.backscore(&target)?;
        Ok(rescale_object(obj, self.response_scale))
    }

    /// A design row for the given predictor score, standardizing covariates
    /// with the training statistics.
    fn design_row(&self, score: &Score, extra: &[f64]) -> Vec<f64> {
        let mut row = score.0.clone();
        row.resize(self.predictor_embedding.k, 0.0);
        let (means, sds) = covariate_stats(&self.covariate_rows, self.covariate_names.len());
        for (j, &v) in extra.iter().enumerate() {
            row.push(if sds[j] > 0.0 { (v - means[j]) / sds[j] } else { 0.0 });
        }
        row
    }

    /// Backscores the perturbation pair for predictor component `component`
    /// (1-based) at +/- c standard deviations, together with the model's
    /// paired response objects.
    pub fn explain_component(
        &self,
        component: usize,
        c: f64,
        amplification: f64,
    ) -> Result<Explanation> {
        if component == 0 || component > self.predictor_embedding.k {
            return Err(Error::InvalidParams(format!(
                "component {component} outside 1..={}",
                self.predictor_embedding.k
            )));
        }
        let j = component - 1;
        let sd = self.predictor_embedding.component_sd(j);
        let mut plus = Score::zeros(self.predictor_embedding.k);
        plus.0[j] = c * sd;
        let mut minus = Score::zeros(self.predictor_embedding.k);
        minus.0[j] = -c * sd;

        let zeros = vec![0.0; self.covariate_names.len()];
        let baseline = self.pls.predict(&self.design_row(
            &Score::zeros(self.predictor_embedding.k),
            &zeros,
        ))?;
        let response_target = |s: &Score| -> Result<Vec<f64>> {
            let raw = self.pls.predict(&self.design_row(s, &zeros))?;
            Ok(raw
                .iter()
                .zip(&baseline)
                .map(|(&y, &b)| b + amplification * (y - b))
                .collect())
        };
        let rt_minus = response_target(&minus)?;
        let rt_plus = response_target(&plus)?;

        let side = |bs: &FittedBackscorer, target: &Score, scale: f64| -> Result<SideOutcome> {
            match bs.backscore(target) {
                Ok(obj) => Ok(SideOutcome::Feasible(rescale_object(obj, scale))),
                Err(Error::NoFeasibleSolution { target, detail }) => {
                    Ok(SideOutcome::Infeasible { target, detail })
                }
                Err(e) => Err(e),
            }
        };
        Ok(Explanation {
            component,
            c,
            amplification,
            predictor_minus: side(&self.predictor_backscorer, &minus, self.predictor_scale)?,
            predictor_plus: side(&self.predictor_backscorer, &plus, self.predictor_scale)?,
            response_minus: side(
                &self.response_backscorer,
                &Score(rt_minus.clone()),
                self.response_scale,
            )?,
            response_plus: side(
                &self.response_backscorer,
                &Score(rt_plus.clone()),
                self.response_scale,
            )?,
            predictor_centroid: rescale_object(
                self.predictor_backscorer.centroid(),
                self.predictor_scale,
            ),
            response_centroid: rescale_object(
                self.response_backscorer.centroid(),
                self.response_scale,
            ),
            predictor_targets: (minus.0, plus.0),
            response_targets: (rt_minus, rt_plus),
        })
    }

    /// Euclidean residual sum of squares of a PLS fit in response score
    /// space.
    fn score_rss(x: &Array2<f64>, y: &Array2<f64>, a: usize) -> Result<f64> {
        let model = simpls_fit(x, y, a)?;
        let yhat = model.predict_rows(x)?;
        Ok((y - &yhat).iter().map(|r| r * r).sum())
    }

    fn score_tss(y: &Array2<f64>) -> f64 {
        let n = y.nrows() as f64;
        let mut tss = 0.0;
        for col in y.axis_iter(Axis(1)) {
            let mean = col.sum() / n;
            tss += col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>();
        }
        tss
    }

    /// Permutation F-test of the whole model: response scores are permuted
    /// against the design. The component count is held at the observed fit.
    pub fn test_response(&self, r: usize, seed: u64) -> Result<PermutationResult> {
        let x = self.design()?;
        let y = self.response_embedding.scores.clone();
        let a = self.pls.a.max(1);
        let n = self.n();
        permutation_test(
            n,
            |perm| {
                let yp = y.select(Axis(0), perm);
                let rss = Self::score_rss(&x, &yp, a)?;
                f_statistic(Self::score_tss(&yp), rss)
            },
            r,
            seed,
        )
    }

    /// Permutation F-test of one design block ("scores" or a covariate
    /// name): the block's rows are permuted, the F statistic compares the
    /// full fit with the fit that drops the block entirely.
    pub fn test_block(&self, name: &str, r: usize, seed: u64) -> Result<PermutationResult> {
        let x = self.design()?;
        let y = self.response_embedding.scores.clone();
        let kx = self.predictor_embedding.k;
        let cols: Vec<usize> = if name == "scores" {
            (0..kx).collect()
        } else {
            match self.covariate_names.iter().position(|n| n == name) {
                Some(j) => vec![kx + j],
                None => {
                    return Err(Error::InvalidInput(format!(
                        "unknown design block {name:?} (have \"scores\"{})",
                        self.covariate_names
                            .iter()
                            .map(|n| format!(", {n:?}"))
                            .collect::<String>()
                    )))
                }
            }
        };
        let rest: Vec<usize> = (0..x.ncols()).filter(|c| !cols.contains(c)).collect();
        let x_small = x.select(Axis(1), &rest);
        let a = self.pls.a.max(1);
        let rss_small = if rest.is_empty() {
            Self::score_tss(&y)
        } else {
            Self::score_rss(&x_small, &y, a.min(rest.len()))?
        };
        let n = self.n();
        permutation_test(
            n,
            |perm| {
                let mut xp = x.clone();
                for &col in &cols {
                    for (i, &src) in perm.iter().enumerate() {
                        xp[[i, col]] = x[[src, col]];
                    }
                }
                let rss_large = Self::score_rss(&xp, &y, a)?;
                f_statistic(rss_small, rss_large)
            },
            r,
            seed,
        )
    }
}

/// One side of a component perturbation: the backscored object, or the
/// infeasibility report when no object scores close enough to the target.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SideOutcome {
    Feasible(Object),
    Infeasible { target: Vec<f64>, detail: String },
}

impl SideOutcome {
    pub fn object(&self) -> Option<&Object> {
        match self {
            SideOutcome::Feasible(o) => Some(o),
            SideOutcome::Infeasible { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Explanation {
    pub component: usize,
    pub c: f64,
    pub amplification: f64,
    pub predictor_minus: SideOutcome,
    pub predictor_plus: SideOutcome,
    pub response_minus: SideOutcome,
    pub response_plus: SideOutcome,
    pub predictor_centroid: Object,
    pub response_centroid: Object,
    pub predictor_targets: (Vec<f64>, Vec<f64>),
    pub response_targets: (Vec<f64>, Vec<f64>),
}

#[cfg(test)]
mod tests {
    use super::synth::{synth_dataset, SynthKind};
    use super::*;

    fn quick_fit(kind: SynthKind, n: usize, seed: u64, signal: f64) -> FittedPipeline {
        let d = synth_dataset(kind, n, seed, signal).unwrap();
        fit_pipeline(d.ids, d.predictors, d.responses, None, d.config).unwrap()
    }

    #[test]
    fn shapes_on_shapes_strong_signal_fits_well() {
        let fp = quick_fit(SynthKind::ShapesOnShapes, 24, 7, 1.0);
        assert!(fp.assessment.r2 > 0.5, "r2 = {}", fp.assessment.r2);
        assert!(fp.pls.a >= 1);
    }

    #[test]
    fn training_predictions_reproduce_responses() {
        let fp = quick_fit(SynthKind::ShapesOnShapes, 16, 3, 1.0);
        // in-sample scoring is near-exact, so refitting through predict_new
        // must land close to the stored in-sample predictions
        let x0 = fp.predictors.get(0);
        let pred = fp.predict_new(&x0, &[]).unwrap();
        let d = ObjectSet::object_distance(&pred, &fp.responses.get(0)).unwrap();
        let spread = fp.assessment.tss.sqrt();
        assert!(d < spread, "prediction error {d} vs spread {spread}");
    }

    #[test]
    fn explain_component_zero_magnitude_returns_centroids() {
        let fp = quick_fit(SynthKind::ShapesOnShapes, 12, 11, 1.0);
        let ex = fp.explain_component(1, 0.0, 1.0).unwrap();
        let p = ex.predictor_plus.object().unwrap();
        let d = ObjectSet::object_distance(p, &ex.predictor_centroid).unwrap();
        assert!(d < 1e-6, "zero perturbation strays {d} from the centroid");
        let r = ex.response_plus.object().unwrap();
        let d = ObjectSet::object_distance(r, &ex.response_centroid).unwrap();
        assert!(d < 0.05, "zero-target response strays {d} from the centroid");
    }

    #[test]
    fn explain_component_sides_differ_under_signal() {
        let fp = quick_fit(SynthKind::ShapesOnShapes, 20, 5, 1.0);
        let ex = fp.explain_component(1, 2.0, 1.0).unwrap();
        let (pm, pp) = (
            ex.predictor_minus.object().unwrap(),
            ex.predictor_plus.object().unwrap(),
        );
        assert!(ObjectSet::object_distance(pm, pp).unwrap() > 1e-4);
    }

    #[test]
    fn response_test_detects_signal_and_respects_null_once() {
        let fp = quick_fit(SynthKind::ShapesOnShapes, 24, 13, 1.0);
        let res = fp.test_response(99, 1).unwrap();
        assert_eq!(res.p, 0.0, "observed F {} beaten by a permutation", res.observed);
        assert_eq!(res.replicates.len(), 99);
    }

    #[test]
    fn block_test_rejects_unknown_name() {
        let fp = quick_fit(SynthKind::ShapesOnShapes, 12, 2, 1.0);
        assert!(fp.test_block("nope", 9, 0).is_err());
    }

    #[test]
    fn covariate_block_test_runs() {
        let d = synth_dataset(SynthKind::ShapesOnShapes, 16, 21, 1.0).unwrap();
        // attach a pure-noise covariate; its block test should not be
        // extreme
        let rows: Vec<Vec<f64>> = (0..16).map(|i| vec![((i * 37 + 11) % 16) as f64]).collect();
        let fp = fit_pipeline(
            d.ids,
            d.predictors,
            d.responses,
            Some((vec!["junk".into()], rows)),
            d.config,
        )
        .unwrap();
        let res = fp.test_block("junk", 99, 4).unwrap();
        assert!(res.p > 0.01, "noise covariate flagged, p = {}", res.p);
        let scores = fp.test_block("scores", 99, 4).unwrap();
        assert!(scores.p < 0.05, "signal block missed, p = {}", scores.p);
    }

    #[test]
    fn model_json_round_trips() {
        let fp = quick_fit(SynthKind::ShapesOnShapes, 10, 17, 1.0);
        let text = fp.to_json().unwrap();
        let back = FittedPipeline::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let d = synth_dataset(SynthKind::ShapesOnShapes, 8, 1, 1.0).unwrap();
        let short_ids = d.ids[..7].to_vec();
        assert!(fit_pipeline(short_ids, d.predictors, d.responses, None, d.config).is_err());
    }
}
