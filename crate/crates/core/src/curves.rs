//! Unregistered smile-type curves: normalization, discrete Fréchet distance,
//! a three-parameter warp family, weighted combinations along warps, and the
//! triple-search centroid and backscoring algorithms.

use crate::error::{Error, Result};
use crate::mds::{gower_score, MdsEmbedding, Score};
use crate::metric::{default_tol_score, nearest_by_score, Backscorer, MetricSpace};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;

/// Common evaluation grid size for combinations (the motion frame count).
pub const DEFAULT_GRID: usize = 240;

/// A curve sampled on a monotone grid over [0, 1] with nonnegative values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
}

impl SampledCurve {
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != f.len() {
            return Err(Error::InvalidInput(format!(
                "curve needs matching grids of >= 2 points, got {} and {}",
                t.len(),
                f.len()
            )));
        }
        if t[0] != 0.0 || *t.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput(
                "curve grid endpoints must be exactly 0 and 1".into(),
            ));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("curve grid not strictly increasing".into()));
        }
        if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("curve values must be finite and >= 0".into()));
        }
        Ok(Self { t, f })
    }

    /// Uniform grid on [0, 1] with the given values.
    pub fn uniform(f: Vec<f64>) -> Result<Self> {
        let n = f.len();
        let t = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Self::new(t, f)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.f.iter().cloned().fold(0.0, f64::max)
    }

    /// Linear interpolation; the argument is clamped to [0, 1].
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.t.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => self.f[i],
            Err(i) => {
                if i == 0 {
                    self.f[0]
                } else if i >= self.len() {
                    *self.f.last().unwrap()
                } else {
                    let (t0, t1) = (self.t[i - 1], self.t[i]);
                    let w = (x - t0) / (t1 - t0);
                    self.f[i - 1] * (1.0 - w) + self.f[i] * w
                }
            }
        }
    }

    /// Resamples onto a uniform grid of `n` points.
    pub fn resample(&self, n: usize) -> SampledCurve {
        let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let f = t.iter().map(|&x| self.eval(x)).collect();
        SampledCurve { t, f }
    }

    /// Grid index of the maximum value (first attaining index).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.f[i] > self.f[best] {
                best = i;
            }
        }
        best
    }

    pub fn peak_time(&self) -> f64 {
        self.t[self.argmax()]
    }
}

/// Parameters of the piecewise-linear time warp with value scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl WarpParams {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        if !(0.0 < p1 && p1 < 1.0 && 0.0 < p2 && p2 < 1.0 && p3 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "warp parameters out of range: p1={p1}, p2={p2}, p3={p3}"
            )));
        }
        Ok(Self { p1, p2, p3 })
    }

    pub fn identity() -> Self {
        Self {
            p1: 0.5,
            p2: 0.5,
            p3: 1.0,
        }
    }

    fn clamped(p1: f64, p2: f64, p3: f64) -> Self {
        const EPS: f64 = 1e-6;
        Self {
            p1: p1.clamp(EPS, 1.0 - EPS),
            p2: p2.clamp(EPS, 1.0 - EPS),
            p3: p3.max(EPS),
        }
    }
}

/// Rescales a family of curves so the global maximum value is exactly 1 and
/// every time grid spans [0, 1]. Returns the scale divided out.
pub fn normalize_curves(curves: &[SampledCurve]) -> Result<(Vec<SampledCurve>, f64)> {
    if curves.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scale = curves.iter().map(|c| c.max_value()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::AllZeroCurves);
    }
    let out = curves
        .iter()
        .map(|c| {
            let span = c.t.last().unwrap() - c.t[0];
            let t0 = c.t[0];
            let n = c.len();
            let t: Vec<f64> = c
                .t
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    if i == 0 {
                        0.0
                    } else if i == n - 1 {
                        1.0
                    } else {
                        (x - t0) / span
                    }
                })
                .collect();
            let f = c.f.iter().map(|v| v / scale).collect();
            SampledCurve::new(t, f)
        })
        .collect::<Result<_>>()?;
    Ok((out, scale))
}

/// Discrete Fréchet distance between the planar point sequences
/// (t_i, f(t_i)) of the two curves, by the standard dynamic program over
/// monotone couplings.
pub fn frechet_distance(a: &SampledCurve, b: &SampledCurve) -> f64 {
    let n = a.len();
    let m = b.len();
    let point_dist = |i: usize, j: usize| {
        let dt = a.t[i] - b.t[j];
        let df = a.f[i] - b.f[j];
        (dt * dt + df * df).sqrt()
    };
    // rolling rows of the coupling table
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for j in 0..m {
        let d = point_dist(0, j);
        prev[j] = if j == 0 { d } else { prev[j - 1].max(d) };
    }
    for i in 1..n {
        for j in 0..m {
            let d = point_dist(i, j);
            let reach = if j == 0 {
                prev[0]
            } else {
                prev[j].min(prev[j - 1]).min(cur[j - 1])
            };
            cur[j] = reach.max(d);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Applies the warp: a point p1 of the argument is moved to p2 with linear
/// rescaling either side, and values are scaled by p3. Evaluated on a
/// uniform output grid with the input's sample count.
pub fn transform_curve(f: &SampledCurve, p: &WarpParams) -> Result<SampledCurve> {
    WarpParams::new(p.p1, p.p2, p.p3)?;
    let n = f.len();
    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = t
        .iter()
        .map(|&x| {
            let arg = if x <= p.p2 {
                x * p.p1 / p.p2
            } else {
                (1.0 - p.p1) * x / (1.0 - p.p2) + (p.p1 - p.p2) / (1.0 - p.p2)
            };
            (p.p3 * f.eval(arg)).max(0.0)
        })
        .collect();
    SampledCurve::new(t, vals)
}

fn warp_objective(f1: &SampledCurve, f2: &SampledCurve, p: &WarpParams) -> f64 {
    match transform_curve(f1, p) {
        Ok(w) => frechet_distance(&w, f2),
        Err(_) => f64::INFINITY,
    }
}

/// Coordinate-descent refinement with step halving down to 1e-3.
fn refine_params(
    f1: &SampledCurve,
    f2: &SampledCurve,
    init: WarpParams,
    init_obj: f64,
) -> (WarpParams, f64) {
    let mut best = init;
    let mut best_obj = init_obj;
    let mut steps = [0.05, 0.05, 0.1];
    while steps[0] > 1e-3 || steps[2] > 1e-3 {
        let mut improved = true;
        while improved {
            improved = false;
            for coord in 0..3 {
                for dir in [-1.0, 1.0] {
                    let mut c = [best.p1, best.p2, best.p3];
                    c[coord] += dir * steps[coord];
                    let cand = WarpParams::clamped(c[0], c[1], c[2]);
                    let obj = warp_objective(f1, f2, &cand);
                    if obj < best_obj {
                        best_obj = obj;
                        best = cand;
                        improved = true;
                    }
                }
            }
        }
        for s in steps.iter_mut() {
            *s /= 2.0;
        }
    }
    (best, best_obj)
}

/// Finds warp parameters approximately minimizing the Fréchet distance from
/// the transformed first curve to the second: coarse grid search followed by
/// coordinate-descent refinement. Returns the parameters and the attained
/// objective.
pub fn match_params(f1: &SampledCurve, f2: &SampledCurve) -> (WarpParams, f64) {
    let mut best = WarpParams::identity();
    let mut best_obj = f64::INFINITY;
    for i in 1..=19 {
        let p1 = 0.05 * i as f64;
        for j in 1..=19 {
            let p2 = 0.05 * j as f64;
            for k in 0..=10 {
                let p3 = 0.5 + 0.1 * k as f64;
                let cand = WarpParams { p1, p2, p3 };
                let obj = warp_objective(f1, f2, &cand);
                if obj < best_obj {
                    best_obj = obj;
                    best = cand;
                }
            }
        }
    }
    refine_params(f1, f2, best, best_obj)
}

/// Refinement-only matching from a warm start, used inside search loops
/// where a good initial guess is available.
pub fn match_params_from(
    f1: &SampledCurve,
    f2: &SampledCurve,
    init: WarpParams,
) -> (WarpParams, f64) {
    let obj = warp_objective(f1, f2, &init);
    refine_params(f1, f2, init, obj)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(-0.1..=1.1).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::InvalidWeight(gamma));
    }
    Ok(())
}

/// Weighted combination of two curves along their matched warps, with
/// precomputed matching parameters (pa matches f1 toward f2, pb matches f2
/// toward f1).
pub fn combine_pair_with(
    f1: &SampledCurve,
    f2: &SampledCurve,
    gamma: f64,
    pa: &WarpParams,
    pb: &WarpParams,
) -> Result<SampledCurve> {
    check_gamma(gamma)?;
    let w1 = WarpParams::clamped(
        pa.p1,
        (1.0 - gamma) * pa.p2 + gamma * pa.p1,
        (1.0 - gamma) * pa.p3 + gamma,
    );
    let w2 = WarpParams::clamped(
        pb.p1,
        gamma * pb.p2 + (1.0 - gamma) * pb.p1,
        gamma * pb.p3 + (1.0 - gamma),
    );
    let n = f1.len().max(f2.len());
    let g1 = transform_curve(&f1.resample(n), &w1)?;
    let g2 = transform_curve(&f2.resample(n), &w2)?;
    let f = g1
        .f
        .iter()
        .zip(&g2.f)
        .map(|(a, b)| (gamma * a + (1.0 - gamma) * b).max(0.0))
        .collect();
    SampledCurve::uniform(f)
}

/// Weighted combination of two curves: gamma = 1 returns f1, gamma = 0
/// returns f2, intermediate values move along a geodesic-like path.
pub fn combine_pair(f1: &SampledCurve, f2: &SampledCurve, gamma: f64) -> Result<SampledCurve> {
    check_gamma(gamma)?;
    let (pa, _) = match_params(f1, f2);
    let (pb, _) = match_params(f2, f1);
    combine_pair_with(f1, f2, gamma, &pa, &pb)
}

/// Weighted average of three curves: combine the first two, then combine
/// the result with the third.
pub fn combine_triple(
    f1: &SampledCurve,
    f2: &SampledCurve,
    f3: &SampledCurve,
    w: [f64; 3],
) -> Result<SampledCurve> {
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "triple weights must sum to 1, got {total}"
        )));
    }
    for &wi in &w {
        check_gamma(wi)?;
    }
    let w12 = w[0] + w[1];
    if w12.abs() < 1e-12 {
        return Ok(f3.clone());
    }
    let gamma_pair = w[0] / w12;
    check_gamma(gamma_pair)?;
    check_gamma(w12)?;
    let c12 = combine_pair(f1, f2, gamma_pair)?;
    combine_pair(&c12, f3, w12)
}

/// The curve metric space.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CurveSpace;

impl MetricSpace for CurveSpace {
    type Object = SampledCurve;

    fn distance(&self, a: &SampledCurve, b: &SampledCurve) -> Result<f64> {
        Ok(frechet_distance(a, b))
    }
}

/// Tuning knobs for the triple-search algorithms. The defaults mirror the
/// ten-nearest / all-triples procedure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveSearchConfig {
    /// How many score-nearest curves enter the triple search.
    pub n_nearest: usize,
    /// Coarse sweep values for the pair weight.
    pub coarse_gammas: Vec<f64>,
    /// Overrides the default 0.05 * sqrt(lambda_1) feasibility tolerance.
    pub tol_score: Option<f64>,
}

impl Default for CurveSearchConfig {
    fn default() -> Self {
        CurveSearchConfig {
            n_nearest: 10,
            coarse_gammas: vec![-0.1, 0.1, 0.3, 0.5, 0.7, 0.9, 1.1],
            tol_score: None,
        }
    }
}

type PairKey = (usize, usize);

/// Shared state for repeated triple searches over one training set:
/// caches the expensive pairwise warp matches.
pub struct CurveSearcher<'a> {
    curves: &'a [SampledCurve],
    embedding: &'a MdsEmbedding,
    cfg: CurveSearchConfig,
    tol_score: f64,
    pair_cache: RefCell<HashMap<PairKey, WarpParams>>,
}

impl<'a> CurveSearcher<'a> {
    pub fn new(
        curves: &'a [SampledCurve],
        embedding: &'a MdsEmbedding,
        cfg: CurveSearchConfig,
    ) -> Self {
        let tol_score = cfg.tol_score.unwrap_or_else(|| default_tol_score(embedding));
        CurveSearcher {
            curves,
            embedding,
            cfg,
            tol_score,
            pair_cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn tol_score(&self) -> f64 {
        self.tol_score
    }

    fn pair_match(&self, i: usize, j: usize) -> WarpParams {
        if let Some(p) = self.pair_cache.borrow().get(&(i, j)) {
            return *p;
        }
        let (p, _) = match_params(&self.curves[i], &self.curves[j]);
        self.pair_cache.borrow_mut().insert((i, j), p);
        p
    }

    fn residual(&self, candidate: &SampledCurve, target: &Score) -> Result<f64> {
        let d: Vec<f64> = self
            .curves
            .iter()
            .map(|c| frechet_distance(candidate, c))
            .collect();
        let s = gower_score(self.embedding, &d)?;
        let mut acc = 0.0;
        for j in 0..target.len().min(s.len()) {
            acc += (s.0[j] - target.0[j]) * (s.0[j] - target.0[j]);
        }
        Ok(acc.sqrt())
    }

    /// For a fixed first-stage combination, minimizes the score residual
    /// over the second-stage weight by coarse scan plus golden-section
    /// refinement. Returns (gamma_t, residual, candidate).
    fn solve_outer_gamma(
        &self,
        c12: &SampledCurve,
        third: &SampledCurve,
        pa: &WarpParams,
        pb: &WarpParams,
        target: &Score,
    ) -> Result<(f64, f64, SampledCurve)> {
        let eval = |g: f64| -> Result<(f64, SampledCurve)> {
            let cand = combine_pair_with(c12, third, g, pa, pb)?;
            let r = self.residual(&cand, target)?;
            Ok((r, cand))
        };
        let mut best_g = 0.5;
        let mut best: Option<(f64, SampledCurve)> = None;
        let mut g = -0.1;
        while g <= 1.1 + 1e-12 {
            let (r, cand) = eval(g)?;
            if best.as_ref().map_or(true, |(br, _)| r < *br) {
                best = Some((r, cand));
                best_g = g;
            }
            g += 0.1;
        }
        // golden-section around the best coarse node
        let (mut lo, mut hi) = ((best_g - 0.1).max(-0.1), (best_g + 0.1).min(1.1));
        const PHI: f64 = 0.618_033_988_749_894_8;
        for _ in 0..18 {
            let x1 = hi - PHI * (hi - lo);
            let x2 = lo + PHI * (hi - lo);
            let (r1, c1) = eval(x1)?;
            let (r2, c2) = eval(x2)?;
            if r1 < r2 {
                hi = x2;
                if best.as_ref().map_or(true, |(br, _)| r1 < *br) {
                    best = Some((r1, c1));
                    best_g = x1;
                }
            } else {
                lo = x1;
                if best.as_ref().map_or(true, |(br, _)| r2 < *br) {
                    best = Some((r2, c2));
                    best_g = x2;
                }
            }
        }
        let (r, cand) = best.unwrap();
        Ok((best_g, r, cand))
    }

    /// Evaluates one ordered triple (pair = a,b then third = c): sweeps the
    /// pair weight, solving the outer weight at each value. Returns the best
    /// feasible candidate, if any.
    fn search_triple(
        &self,
        a: usize,
        b: usize,
        c: usize,
        target: &Score,
    ) -> Result<Option<SampledCurve>> {
        let pa = self.pair_match(a, b);
        let pb = self.pair_match(b, a);
        let init_ac = self.pair_match(a, c);
        let init_bc = self.pair_match(b, c);
        let init_ca = self.pair_match(c, a);
        let init_cb = self.pair_match(c, b);

        let mut best: Option<(f64, SampledCurve)> = None;
        let mut evaluate_gp = |gp: f64| -> Result<f64> {
            let c12 = combine_pair_with(&self.curves[a], &self.curves[b], gp, &pa, &pb)?;
            let (fwd_init, rev_init) = if gp >= 0.5 {
                (init_ac, init_ca)
            } else {
                (init_bc, init_cb)
            };
            let (p_fwd, _) = match_params_from(&c12, &self.curves[c], fwd_init);
            let (p_rev, _) = match_params_from(&self.curves[c], &c12, rev_init);
            let (_, r, cand) = self.solve_outer_gamma(&c12, &self.curves[c], &p_fwd, &p_rev, target)?;
            if best.as_ref().map_or(true, |(br, _)| r < *br) {
                best = Some((r, cand));
            }
            Ok(r)
        };

        let mut best_gp = 0.5;
        let mut best_r = f64::INFINITY;
        for &gp in &self.cfg.coarse_gammas.clone() {
            let r = evaluate_gp(gp)?;
            if r < best_r {
                best_r = r;
                best_gp = gp;
            }
        }
        // local refinement of the pair weight around the best coarse value
        let mut step = 0.1;
        while step > 0.0125 {
            for dir in [-1.0, 1.0] {
                let gp = (best_gp + dir * step).clamp(-0.1, 1.1);
                let r = evaluate_gp(gp)?;
                if r < best_r {
                    best_r = r;
                    best_gp = gp;
                }
            }
            step /= 2.0;
        }
        match best {
            Some((r, cand)) if r <= self.tol_score => Ok(Some(cand)),
            _ => Ok(None),
        }
    }

    /// All feasible triple-combination candidates for a target score, over
    /// every triple (and all three pair-then-third orderings) of the
    /// score-nearest curves.
    pub fn feasible_candidates(&self, target: &Score) -> Result<Vec<SampledCurve>> {
        let nearest = nearest_by_score(self.embedding, target, self.cfg.n_nearest);
        let mut out = Vec::new();
        for x in 0..nearest.len() {
            for y in (x + 1)..nearest.len() {
                for z in (y + 1)..nearest.len() {
                    let (i, j, k) = (nearest[x], nearest[y], nearest[z]);
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, k, i)] {
                        if let Some(cand) = self.search_triple(a, b, c, target)? {
                            out.push(cand);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Curve centroid: among feasible triple combinations with score 0, the one
/// minimizing the sum of distances to all curves.
pub fn curve_centroid(
    curves: &[SampledCurve],
    e: &MdsEmbedding,
    cfg: &CurveSearchConfig,
) -> Result<SampledCurve> {
    let searcher = CurveSearcher::new(curves, e, cfg.clone());
    let target = Score::zeros(e.k);
    let feasible = searcher.feasible_candidates(&target)?;
    if feasible.is_empty() {
        return Err(Error::NoFeasibleSolution {
            target: target.0,
            detail: "no triple combination reaches score 0".into(),
        });
    }
    let mut best = 0;
    let mut best_sum = f64::INFINITY;
    for (idx, cand) in feasible.iter().enumerate() {
        let sum: f64 = curves.iter().map(|c| frechet_distance(cand, c)).sum();
        if sum < best_sum {
            best_sum = sum;
            best = idx;
        }
    }
    Ok(feasible[best].clone())
}

/// Curve backscoring: among feasible triple combinations whose score equals
/// the target, the one closest to the centroid.
pub fn curve_backscore(
    target: &Score,
    e: &MdsEmbedding,
    curves: &[SampledCurve],
    centroid: &SampledCurve,
    cfg: &CurveSearchConfig,
) -> Result<SampledCurve> {
    let searcher = CurveSearcher::new(curves, e, cfg.clone());
    let feasible = searcher.feasible_candidates(target)?;
    if feasible.is_empty() {
        return Err(Error::NoFeasibleSolution {
            target: target.0.clone(),
            detail: format!(
                "no triple combination within tol_score {:.3e} of the target",
                searcher.tol_score()
            ),
        });
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (idx, cand) in feasible.iter().enumerate() {
        let d = frechet_distance(cand, centroid);
        if d < best_d {
            best_d = d;
            best = idx;
        }
    }
    Ok(feasible[best].clone())
}

/// Fitted curve backscorer holding the training set, embedding, centroid
/// and search configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveBackscorer {
    pub curves: Vec<SampledCurve>,
    pub embedding: MdsEmbedding,
    pub centroid: SampledCurve,
    pub cfg: CurveSearchConfig,
}

impl CurveBackscorer {
    pub fn fit(
        curves: Vec<SampledCurve>,
        embedding: MdsEmbedding,
        cfg: CurveSearchConfig,
    ) -> Result<Self> {
        let centroid = curve_centroid(&curves, &embedding, &cfg)?;
        Ok(Self {
            curves,
            embedding,
            centroid,
            cfg,
        })
    }
}

impl Backscorer for CurveBackscorer {
    type Object = SampledCurve;

    fn backscore(&self, target: &Score) -> Result<SampledCurve> {
        curve_backscore(target, &self.embedding, &self.curves, &self.centroid, &self.cfg)
    }

    fn centroid(&self) -> &SampledCurve {
        &self.centroid
    }
}

/// A smooth unimodal bump: height * exp(-((t - peak)/width)^2), useful as a
/// synthetic stand-in for smile curves.
pub fn bump_curve(peak: f64, width: f64, height: f64, samples: usize) -> SampledCurve {
    let f: Vec<f64> = (0..samples)
        .map(|i| {
            let t = i as f64 / (samples - 1) as f64;
            let z = (t - peak) / width;
            height * (-z * z).exp()
        })
        .collect();
    SampledCurve::uniform(f).expect("bump curve is valid")
}

/// Curve CSV schema: header `subject,t,value`, one row per sample.
pub fn curves_to_csv(named: &[(String, SampledCurve)]) -> String {
    let mut out = String::from("subject,t,value\n");
    for (id, c) in named {
        for (t, v) in c.t.iter().zip(&c.f) {
            out.push_str(&format!("{id},{t:?},{v:?}\n"));
        }
    }
    out
}

pub fn curves_from_csv(text: &str) -> Result<Vec<(String, SampledCurve)>> {
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(f64, f64)>> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.trim().to_lowercase().starts_with("subject") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "curve CSV line {} needs 3 columns",
                lineno + 1
            )));
        }
        let t: f64 = parts[1].trim().parse().map_err(|_| {
            Error::InvalidInput(format!("bad t on line {}", lineno + 1))
        })?;
        let v: f64 = parts[2].trim().parse().map_err(|_| {
            Error::InvalidInput(format!("bad value on line {}", lineno + 1))
        })?;
        let key = parts[0].trim().to_string();
        if !rows.contains_key(&key) {
            order.push(key.clone());
        }
        rows.entry(key).or_default().push((t, v));
    }
    order
        .into_iter()
        .map(|id| {
            let mut samples = rows.remove(&id).unwrap();
            samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let (t, f): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
            Ok((id.clone(), SampledCurve::new(t, f)?))
        })
        .collect()
}
