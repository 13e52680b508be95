//! Deterministic report rendering: a JSON summary plus SVG visualizations
//! of the fitted effect in each space.

use super::config::SpaceKind;
use super::io::{write, Object};
use super::{Explanation, FittedPipeline, SideOutcome};
use crate::corrmat::CorrelationMatrix;
use crate::curves::SampledCurve;
use crate::error::Result;
use crate::inference::{PermutationResult, ResidualSum};
use crate::shapes::LandmarkConfiguration;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct ReportOptions {
    /// 1-based predictor component visualized.
    pub component: usize,
    /// Perturbation magnitude in component standard deviations.
    pub c: f64,
    pub amplification: f64,
    pub permutation: Option<PermutationResult>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            component: 1,
            c: 2.0,
            amplification: 1.0,
            permutation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationSummary {
    pub observed: f64,
    #[serde(rename = "R")]
    pub r: usize,
    pub p: f64,
    pub p_conservative: f64,
    pub excluded_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub n: usize,
    pub predictor_space: SpaceKind,
    pub response_space: SpaceKind,
    pub predictor_dims: usize,
    pub response_dims: usize,
    pub components: usize,
    pub r2: f64,
    pub rss: f64,
    pub tss: f64,
    pub residuals: ResidualSum,
    pub predictor_explained: Vec<f64>,
    pub response_explained: Vec<f64>,
    pub visualized_component: usize,
    pub c: f64,
    pub amplification: f64,
    pub permutation: Option<PermutationSummary>,
}

pub fn summarize(fp: &FittedPipeline, opts: &ReportOptions) -> ReportSummary {
    ReportSummary {
        n: fp.n(),
        predictor_space: fp.config.predictor_space,
        response_space: fp.config.response_space,
        predictor_dims: fp.predictor_embedding.k,
        response_dims: fp.response_embedding.k,
        components: fp.pls.a,
        r2: fp.assessment.r2,
        rss: fp.assessment.rss,
        tss: fp.assessment.tss,
        residuals: fp.config.residuals,
        predictor_explained: fp.predictor_embedding.explained.clone(),
        response_explained: fp.response_embedding.explained.clone(),
        visualized_component: opts.component,
        c: opts.c,
        amplification: opts.amplification,
        permutation: opts.permutation.as_ref().map(|p| PermutationSummary {
            observed: p.observed,
            r: p.r,
            p: p.p,
            p_conservative: p.p_conservative,
            excluded_replicates: p.excluded_replicates,
        }),
    }
}

/// Writes summary.json, explain.json and per-space SVGs into `out_dir`;
/// returns the written paths.
pub fn render_report(
    fp: &FittedPipeline,
    out_dir: &Path,
    opts: &ReportOptions,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let explanation = fp.explain_component(opts.component, opts.c, opts.amplification)?;
    let mut written = Vec::new();

    let summary = summarize(fp, opts);
    let path = out_dir.join("summary.json");
    write(&path, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    written.push(path);

    let path = out_dir.join("explain.json");
    write(&path, &format!("{}\n", serde_json::to_string_pretty(&explanation)?))?;
    written.push(path);

    for (side, prefix) in [(Side::Predictor, "predictor"), (Side::Response, "response")] {
        for (name, svg) in side_svgs(fp, &explanation, side) {
            let path = out_dir.join(format!("{prefix}_{name}.svg"));
            write(&path, &svg)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Clone, Copy)]
enum Side {
    Predictor,
    Response,
}

fn side_svgs(
    fp: &FittedPipeline,
    ex: &Explanation,
    side: Side,
) -> Vec<(&'static str, String)> {
    let (centroid, minus, plus, kind) = match side {
        Side::Predictor => (
            &ex.predictor_centroid,
            &ex.predictor_minus,
            &ex.predictor_plus,
            fp.config.predictor_space,
        ),
        Side::Response => (
            &ex.response_centroid,
            &ex.response_minus,
            &ex.response_plus,
            fp.config.response_space,
        ),
    };
    match kind {
        SpaceKind::Shape => {
            let c = as_shape(centroid);
            vec![(
                "arrows",
                shape_arrows_svg(c, shape_side(minus), shape_side(plus)),
            )]
        }
        SpaceKind::Curve => {
            let training: Vec<&SampledCurve> = match (side, &fp.predictors, &fp.responses) {
                (Side::Predictor, super::io::ObjectSet::Curves(v), _) => v.iter().collect(),
                (Side::Response, _, super::io::ObjectSet::Curves(v)) => v.iter().collect(),
                _ => Vec::new(),
            };
            let scale = match side {
                Side::Predictor => fp.predictor_scale,
                Side::Response => fp.response_scale,
            };
            vec![(
                "curves",
                curve_overlay_svg(&training, scale, as_curve(centroid), curve_side(minus), curve_side(plus)),
            )]
        }
        SpaceKind::Corr => {
            let c = as_corr(centroid);
            let contrast = match (corr_side(minus), corr_side(plus)) {
                (Some(a), Some(b)) => Some(contrast_matrix(a, b)),
                _ => None,
            };
            let mut out = vec![("corr_mean", corr_heatmap_svg(&matrix_cells(c), 1.0))];
            if let Some(delta) = contrast {
                let max = delta
                    .iter()
                    .flatten()
                    .fold(0.0f64, |m, &v| m.max(v.abs()))
                    .max(1e-12);
                out.push(("corr_contrast", corr_heatmap_svg(&delta, max)));
            }
            out
        }
        SpaceKind::Point => {
            let pts: Vec<&Vec<f64>> = match (side, &fp.predictors, &fp.responses) {
                (Side::Predictor, super::io::ObjectSet::Points(v), _) => v.iter().collect(),
                (Side::Response, _, super::io::ObjectSet::Points(v)) => v.iter().collect(),
                _ => Vec::new(),
            };
            vec![(
                "points",
                point_scatter_svg(&pts, as_point(centroid), point_side(minus), point_side(plus)),
            )]
        }
    }
}

fn as_shape(o: &Object) -> &LandmarkConfiguration {
    match o {
        Object::Shape(s) => s,
        _ => unreachable!("space kind checked by caller"),
    }
}
fn as_curve(o: &Object) -> &SampledCurve {
    match o {
        Object::Curve(c) => c,
        _ => unreachable!("space kind checked by caller"),
    }
}
fn as_corr(o: &Object) -> &CorrelationMatrix {
    match o {
        Object::Corr(c) => c,
        _ => unreachable!("space kind checked by caller"),
    }
}
fn as_point(o: &Object) -> &Vec<f64> {
    match o {
        Object::Point(p) => p,
        _ => unreachable!("space kind checked by caller"),
    }
}
fn shape_side(s: &SideOutcome) -> Option<&LandmarkConfiguration> {
    s.object().map(as_shape)
}
fn curve_side(s: &SideOutcome) -> Option<&SampledCurve> {
    s.object().map(as_curve)
}
fn corr_side(s: &SideOutcome) -> Option<&CorrelationMatrix> {
    s.object().map(as_corr)
}
fn point_side(s: &SideOutcome) -> Option<&Vec<f64>> {
    s.object().map(as_point)
}

fn fmt(v: f64) -> String {
    // fixed precision keeps the output byte-stable
    format!("{v:.4}")
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;

struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    /// Maps the data bounding box onto the viewport with 10% padding;
    /// the y axis points up.
    fn fit(xs: &[f64], ys: &[f64]) -> Frame {
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in xs {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
        }
        for &y in ys {
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        if !xmin.is_finite() || xmax - xmin < 1e-12 {
            xmin -= 0.5;
            xmax = xmin + 1.0;
        }
        if !ymin.is_finite() || ymax - ymin < 1e-12 {
            ymin -= 0.5;
            ymax = ymin + 1.0;
        }
        let pad = 0.1;
        let span_x = (xmax - xmin) * (1.0 + 2.0 * pad);
        let span_y = (ymax - ymin) * (1.0 + 2.0 * pad);
        Frame {
            x0: xmin - (xmax - xmin) * pad,
            y0: ymax + (ymax - ymin) * pad,
            sx: WIDTH / span_x,
            sy: HEIGHT / span_y,
        }
    }

    fn x(&self, v: f64) -> f64 {
        (v - self.x0) * self.sx
    }

    fn y(&self, v: f64) -> f64 {
        (self.y0 - v) * self.sy
    }
}

fn svg_open(body: &mut String) {
    body.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
}

fn svg_close(body: &mut String) {
    body.push_str("</svg>\n");
}

/// Mean shape as dots; arrows to the plus-side landmarks (solid) and the
/// minus side (faint). Arrows shorter than the pixel threshold render as
/// dots. Only the first two coordinates are drawn.
pub fn shape_arrows_svg(
    centroid: &LandmarkConfiguration,
    minus: Option<&LandmarkConfiguration>,
    plus: Option<&LandmarkConfiguration>,
) -> String {
    let k = centroid.landmarks();
    let pre = centroid.preshape().expect("centroid is nondegenerate");
    let align = |c: &LandmarkConfiguration| {
        crate::shapes::opa_align(c, centroid).map(|(a, _)| a)
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sides = Vec::new();
    for (cfg, color) in [(minus, "#2166ac"), (plus, "#b2182b")] {
        if let Some(cfg) = cfg {
            if let Ok(a) = align(cfg) {
                for i in 0..k {
                    xs.push(a[[i, 0]]);
                    ys.push(a[[i, 1]]);
                }
                sides.push((a, color));
            }
        }
    }
    for i in 0..k {
        xs.push(pre[[i, 0]]);
        ys.push(pre[[i, 1]]);
    }
    let frame = Frame::fit(&xs, &ys);
    let mut svg = String::new();
    svg_open(&mut svg);
    for (a, color) in &sides {
        for i in 0..k {
            let (x1, y1) = (frame.x(pre[[i, 0]]), frame.y(pre[[i, 1]]));
            let (x2, y2) = (frame.x(a[[i, 0]]), frame.y(a[[i, 1]]));
            let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
            if len < 1.0 {
                svg.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"{color}\"/>\n",
                    fmt(x1),
                    fmt(y1)
                ));
            } else {
                // stem plus a small V head
                let (ux, uy) = ((x2 - x1) / len, (y2 - y1) / len);
                let head = 6.0f64.min(len * 0.4);
                svg.push_str(&format!(
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                    fmt(x1), fmt(y1), fmt(x2), fmt(y2)
                ));
                for rot in [0.5f64, -0.5f64] {
                    let (c, s) = (rot.cos(), rot.sin());
                    let hx = x2 - head * (ux * c - uy * s);
                    let hy = y2 - head * (ux * s + uy * c);
                    svg.push_str(&format!(
                        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                        fmt(x2), fmt(y2), fmt(hx), fmt(hy)
                    ));
                }
            }
        }
    }
    for i in 0..k {
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#333333\"/>\n",
            fmt(frame.x(pre[[i, 0]])),
            fmt(frame.y(pre[[i, 1]]))
        ));
    }
    svg_close(&mut svg);
    svg
}

/// Training curves in gray, the centroid solid black, the minus/plus pair
/// dashed blue/red.
pub fn curve_overlay_svg(
    training: &[&SampledCurve],
    scale: f64,
    centroid: &SampledCurve,
    minus: Option<&SampledCurve>,
    plus: Option<&SampledCurve>,
) -> String {
    let mut xs = vec![0.0, 1.0];
    let mut ys = vec![0.0];
    for c in training {
        ys.extend(c.f.iter().map(|v| v * scale));
    }
    ys.extend(centroid.f.iter().copied());
    for c in [minus, plus].into_iter().flatten() {
        ys.extend(c.f.iter().copied());
    }
    xs.push(0.0);
    let frame = Frame::fit(&xs, &ys);
    let polyline = |svg: &mut String, c: &SampledCurve, mul: f64, style: &str| {
        let pts: Vec<String> = c
            .t
            .iter()
            .zip(&c.f)
            .map(|(&t, &v)| format!("{},{}", fmt(frame.x(t)), fmt(frame.y(v * mul))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" points=\"{}\" {style}/>\n",
            pts.join(" ")
        ));
    };
    let mut svg = String::new();
    svg_open(&mut svg);
    for c in training {
        polyline(&mut svg, c, scale, "stroke=\"#bbbbbb\" stroke-width=\"1\"");
    }
    polyline(&mut svg, centroid, 1.0, "stroke=\"#000000\" stroke-width=\"2\"");
    if let Some(c) = minus {
        polyline(
            &mut svg,
            c,
            1.0,
            "stroke=\"#2166ac\" stroke-width=\"2\" stroke-dasharray=\"6 3\"",
        );
    }
    if let Some(c) = plus {
        polyline(
            &mut svg,
            c,
            1.0,
            "stroke=\"#b2182b\" stroke-width=\"2\" stroke-dasharray=\"6 3\"",
        );
    }
    svg_close(&mut svg);
    svg
}

fn matrix_cells(c: &CorrelationMatrix) -> Vec<Vec<f64>> {
    let m = c.dim();
    (0..m)
        .map(|i| (0..m).map(|j| c.matrix()[[i, j]]).collect())
        .collect()
}

pub fn contrast_matrix(minus: &CorrelationMatrix, plus: &CorrelationMatrix) -> Vec<Vec<f64>> {
    let m = minus.dim();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| plus.matrix()[[i, j]] - minus.matrix()[[i, j]])
                .collect()
        })
        .collect()
}

/// Diverging blue-white-red color for v/scale in [-1, 1].
pub fn diverging_color(v: f64, scale: f64) -> String {
    let t = (v / scale).clamp(-1.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t.abs()).round() as u8;
    let (r, g, b) = if t >= 0.0 {
        (lerp(255.0, 178.0), lerp(255.0, 24.0), lerp(255.0, 43.0))
    } else {
        (lerp(255.0, 33.0), lerp(255.0, 102.0), lerp(255.0, 172.0))
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn corr_heatmap_svg(cells: &[Vec<f64>], scale: f64) -> String {
    let m = cells.len();
    let cell = WIDTH / m as f64;
    let mut svg = String::new();
    svg_open(&mut svg);
    for (i, row) in cells.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n",
                fmt(j as f64 * cell),
                fmt(i as f64 * cell),
                fmt(cell),
                fmt(cell),
                diverging_color(v, scale)
            ));
        }
    }
    svg_close(&mut svg);
    svg
}

/// Training points in gray, centroid black, minus/plus pair blue/red; the
/// first two coordinates are drawn (one-dimensional data plots on a line).
pub fn point_scatter_svg(
    training: &[&Vec<f64>],
    centroid: &Vec<f64>,
    minus: Option<&Vec<f64>>,
    plus: Option<&Vec<f64>>,
) -> String {
    let coord = |p: &Vec<f64>| (p[0], if p.len() > 1 { p[1] } else { 0.0 });
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in training.iter().copied().chain([centroid]).chain(minus).chain(plus) {
        let (x, y) = coord(p);
        xs.push(x);
        ys.push(y);
    }
    let frame = Frame::fit(&xs, &ys);
    let mut svg = String::new();
    svg_open(&mut svg);
    let dot = |svg: &mut String, p: &Vec<f64>, r: f64, color: &str| {
        let (x, y) = coord(p);
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{r}\" fill=\"{color}\"/>\n",
            fmt(frame.x(x)),
            fmt(frame.y(y))
        ));
    };
    for p in training {
        dot(&mut svg, p, 3.0, "#bbbbbb");
    }
    dot(&mut svg, centroid, 4.0, "#000000");
    if let Some(p) = minus {
        dot(&mut svg, p, 4.0, "#2166ac");
    }
    if let Some(p) = plus {
        dot(&mut svg, p, 4.0, "#b2182b");
    }
    svg_close(&mut svg);
    svg
}
