//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them).

use mdreg::corrmat::{
    frobenius_distance, nearest_correlation, CorrBackscoreConfig, CorrBackscorer,
    CorrelationMatrix, CorrSpace,
};
use mdreg::curves::{
    bump_curve, combine_pair, combine_triple, frechet_distance, CurveBackscorer,
    CurveSearchConfig, CurveSpace, SampledCurve,
};
use mdreg::euclid::EuclideanSpace;
use mdreg::linalg::jacobi_eigen;
use mdreg::pipeline::report::{render_report, ReportOptions};
use mdreg::pipeline::synth::{synth_dataset, SynthKind};
use mdreg::pipeline::fit_pipeline;
use mdreg::pls::{loo_select, simpls_fit};
use mdreg::shapes::{procrustes_distance, LandmarkConfiguration, ShapeBackscorer, ShapeSpace};
use mdreg::{cmds, gower_score, Backscorer, DistanceMatrix, MetricSpace};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn euclidean_dm(points: &[Vec<f64>]) -> DistanceMatrix {
    DistanceMatrix::from_fn(points.len(), |i, j| {
        Ok(points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    })
    .unwrap()
}

#[test]
fn criterion_01_mds_recovers_random_configuration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n = 50;
    let dim = 5;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| gauss(&mut rng)).collect())
        .collect();
    let e = cmds(&euclidean_dm(&points), n - 1, 0.0).unwrap();
    assert!(e.k >= dim);

    // orthogonal alignment of the leading scores onto the centered points
    let mut centered = Array2::<f64>::zeros((n, dim));
    let mean: Vec<f64> = (0..dim)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n as f64)
        .collect();
    for i in 0..n {
        for j in 0..dim {
            centered[[i, j]] = points[i][j] - mean[j];
        }
    }
    let scores = e.scores.slice(ndarray::s![.., ..dim]).to_owned();
    // orthogonal (reflections allowed) alignment via the polar factor of
    // scores^T centered, computed from its symmetric squares
    let m = scores.t().dot(&centered);
    let (_, u) = jacobi_eigen(&m.dot(&m.t()));
    let (_, v) = jacobi_eigen(&m.t().dot(&m));
    // match singular-vector signs so u s v^T reproduces m
    let mut r = Array2::<f64>::zeros((dim, dim));
    for l in 0..dim {
        let ul = u.column(l);
        let vl = v.column(l);
        let s: f64 = ul.dot(&m.dot(&vl.to_owned()));
        let sign = if s >= 0.0 { 1.0 } else { -1.0 };
        for a in 0..dim {
            for b in 0..dim {
                r[[a, b]] += sign * ul[a] * vl[b];
            }
        }
    }
    let aligned = scores.dot(&r);
    let rms = ((&aligned - &centered).mapv(|x| x * x).sum() / (n * dim) as f64).sqrt();
    assert!(rms < 1e-8, "alignment RMS {rms}");
    assert!(start.elapsed().as_secs_f64() < 1.0, "took {:?}", start.elapsed());
    println!("criterion 1 (MDS recovery, RMS {rms:.3e}): PASS");
}

fn check_in_sample(d: &DistanceMatrix, label: &str) {
    let e = cmds(d, d.n() - 1, 0.0).unwrap();
    for i in 0..d.n() {
        let s = gower_score(&e, &d.column(i)).unwrap();
        let t = e.training_score(i);
        let err: f64 = s
            .0
            .iter()
            .zip(&t.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = 1.0 + t.norm();
        assert!(err / scale < 1e-8, "{label} subject {i}: error {err}");
    }
}

#[test]
fn criterion_02_in_sample_scoring_reproduces_training_rows() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);

    let points: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..4).map(|_| gauss(&mut rng)).collect())
        .collect();
    check_in_sample(&EuclideanSpace.distance_matrix(&points).unwrap(), "euclidean");

    let shapes = concentrated_shapes(&mut rng, 10, 0.08);
    check_in_sample(&ShapeSpace.distance_matrix(&shapes).unwrap(), "shape");

    let curves: Vec<SampledCurve> = (0..8)
        .map(|_| {
            bump_curve(
                rng.gen_range(0.3..0.7),
                rng.gen_range(0.08..0.2),
                rng.gen_range(0.5..1.0),
                60,
            )
        })
        .collect();
    check_in_sample(&CurveSpace.distance_matrix(&curves).unwrap(), "curve");

    let corrs = concentrated_corrs(&mut rng, 10, 4, 0.3);
    check_in_sample(&CorrSpace.distance_matrix(&corrs).unwrap(), "correlation");

    assert!(start.elapsed().as_secs_f64() < 5.0, "took {:?}", start.elapsed());
    println!("criterion 2 (in-sample scoring, all four spaces): PASS");
}

/// Brute-force discrete Fréchet by recursing over all monotone couplings.
fn brute_frechet(a: &SampledCurve, b: &SampledCurve) -> f64 {
    fn go(a: &SampledCurve, b: &SampledCurve, i: usize, j: usize) -> f64 {
        let dt = a.t[i] - b.t[j];
        let df = a.f[i] - b.f[j];
        let d = (dt * dt + df * df).sqrt();
        let reach = match (i, j) {
            (0, 0) => return d,
            (0, _) => go(a, b, 0, j - 1),
            (_, 0) => go(a, b, i - 1, 0),
            _ => go(a, b, i - 1, j)
                .min(go(a, b, i, j - 1))
                .min(go(a, b, i - 1, j - 1)),
        };
        reach.max(d)
    }
    go(a, b, a.len() - 1, b.len() - 1)
}

#[test]
fn criterion_03_frechet_matches_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..200 {
        let make = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(2..=8usize);
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            SampledCurve::uniform(f).unwrap()
        };
        let a = make(&mut rng);
        let b = make(&mut rng);
        let fast = frechet_distance(&a, &b);
        let slow = brute_frechet(&a, &b);
        assert_eq!(fast, slow, "case {case}");
    }
    assert!(start.elapsed().as_secs_f64() < 10.0, "took {:?}", start.elapsed());
    println!("criterion 3 (discrete Fréchet brute-force oracle, 200 pairs): PASS");
}

/// Long-run Dykstra-corrected alternating projections, independent of the
/// library's stopping rule.
fn oracle_nearest_corr(a: &Array2<f64>, iters: usize) -> Array2<f64> {
    let m = a.nrows();
    let mut y = a.clone();
    let mut ds = Array2::<f64>::zeros((m, m));
    for _ in 0..iters {
        let r = &y - &ds;
        // PSD projection
        let (lam, v) = jacobi_eigen(&r);
        let mut x = Array2::<f64>::zeros((m, m));
        for l in 0..m {
            if lam[l] > 0.0 {
                for i in 0..m {
                    for j in 0..m {
                        x[[i, j]] += lam[l] * v[[i, l]] * v[[j, l]];
                    }
                }
            }
        }
        ds = &x - &r;
        y = x;
        for i in 0..m {
            y[[i, i]] = 1.0;
        }
    }
    y
}

fn random_valid_corr(rng: &mut ChaCha8Rng, m: usize) -> CorrelationMatrix {
    let a = Array2::from_shape_fn((m, m + 2), |_| gauss(rng));
    let s = a.dot(&a.t());
    let c = Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            1.0
        } else {
            s[[i, j]] / (s[[i, i]] * s[[j, j]]).sqrt()
        }
    });
    CorrelationMatrix::new(c).unwrap()
}

#[test]
fn criterion_04_nearest_correlation_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let m = 4;
    let probes: Vec<CorrelationMatrix> = (0..1000).map(|_| random_valid_corr(&mut rng, m)).collect();
    for case in 0..100 {
        let base = random_valid_corr(&mut rng, m);
        let mut a = base.matrix().clone();
        for i in 0..m {
            for j in (i + 1)..m {
                let bump = 0.4 * gauss(&mut rng);
                a[[i, j]] += bump;
                a[[j, i]] += bump;
            }
        }
        for i in 0..m {
            a[[i, i]] = 1.0;
        }
        let out = nearest_correlation(&a, 1e-10, 500).unwrap();
        for i in 0..m {
            assert_eq!(out.matrix()[[i, i]], 1.0, "case {case}: diagonal");
        }
        let (lam, _) = jacobi_eigen(out.matrix());
        assert!(lam[m - 1] >= -1e-8, "case {case}: min eigenvalue {}", lam[m - 1]);

        let oracle = oracle_nearest_corr(&a, 2000);
        let gap = (out.matrix() - &oracle).mapv(|x| x * x).sum().sqrt();
        assert!(gap < 1e-6, "case {case}: oracle gap {gap}");

        let dist = |c: &CorrelationMatrix| (c.matrix() - &a).mapv(|x| x * x).sum().sqrt();
        let d_out = dist(&out);
        for p in &probes {
            assert!(d_out <= dist(p) + 1e-12, "case {case}: probe beats output");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 30.0, "took {:?}", start.elapsed());
    println!("criterion 4 (nearest correlation: diagonal, PSD, oracle, probe): PASS");
}

fn random_shape(rng: &mut ChaCha8Rng, k: usize) -> LandmarkConfiguration {
    LandmarkConfiguration::new(Array2::from_shape_fn((k, 3), |_| gauss(rng))).unwrap()
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Array2<f64> {
    // compose rotations about the three coordinate axes
    let mut r = Array2::<f64>::eye(3);
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut g = Array2::<f64>::eye(3);
        g[[a, a]] = th.cos();
        g[[b, b]] = th.cos();
        g[[a, b]] = -th.sin();
        g[[b, a]] = th.sin();
        r = r.dot(&g);
    }
    r
}

#[test]
fn criterion_05_procrustes_metric_axioms_and_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for case in 0..500 {
        let a = random_shape(&mut rng, 10);
        let b = random_shape(&mut rng, 10);
        let c = random_shape(&mut rng, 10);
        let dab = procrustes_distance(&a, &b).unwrap();
        let dba = procrustes_distance(&b, &a).unwrap();
        assert!((dab - dba).abs() < 1e-10, "case {case}: symmetry {}", (dab - dba).abs());
        let dac = procrustes_distance(&a, &c).unwrap();
        let dbc = procrustes_distance(&b, &c).unwrap();
        assert!(dac <= dab + dbc + 1e-9, "case {case}: triangle");

        // similarity transform of a: rotate, scale, translate
        let r = random_rotation(&mut rng);
        let scale: f64 = rng.gen_range(0.2..5.0);
        let shift: Vec<f64> = (0..3).map(|_| gauss(&mut rng)).collect();
        let mut t = a.coords().dot(&r) * scale;
        for i in 0..10 {
            for j in 0..3 {
                t[[i, j]] += shift[j];
            }
        }
        let ta = LandmarkConfiguration::new(t).unwrap();
        assert!(
            procrustes_distance(&a, &ta).unwrap() < 1e-9,
            "case {case}: self-invariance"
        );
        let dtb = procrustes_distance(&ta, &b).unwrap();
        assert!((dtb - dab).abs() < 1e-9, "case {case}: invariance {}", (dtb - dab).abs());
    }
    assert!(start.elapsed().as_secs_f64() < 10.0, "took {:?}", start.elapsed());
    println!("criterion 5 (Procrustes metric axioms, 500 triples): PASS");
}

/// Multivariate least squares via the normal equations, inverted with the
/// symmetric eigendecomposition.
fn least_squares_coef(x: &Array2<f64>, y: &Array2<f64>) -> (Vec<f64>, Vec<f64>, Array2<f64>) {
    let (n, p) = x.dim();
    let q = y.ncols();
    let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let y_mean: Vec<f64> = (0..q).map(|j| y.column(j).sum() / n as f64).collect();
    let xc = Array2::from_shape_fn((n, p), |(i, j)| x[[i, j]] - x_mean[j]);
    let yc = Array2::from_shape_fn((n, q), |(i, j)| y[[i, j]] - y_mean[j]);
    let xtx = xc.t().dot(&xc);
    let (lam, v) = jacobi_eigen(&xtx);
    let mut inv = Array2::<f64>::zeros((p, p));
    for l in 0..p {
        assert!(lam[l] > 1e-10, "oracle problem not full rank");
        for i in 0..p {
            for j in 0..p {
                inv[[i, j]] += v[[i, l]] * v[[j, l]] / lam[l];
            }
        }
    }
    (x_mean, y_mean, inv.dot(&xc.t().dot(&yc)))
}

fn latent_data(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    q: usize,
    rank: usize,
    noise: f64,
) -> (Array2<f64>, Array2<f64>) {
    let t = Array2::from_shape_fn((n, rank), |_| gauss(rng));
    let a = Array2::from_shape_fn((rank, p), |_| gauss(rng));
    let b = Array2::from_shape_fn((rank, q), |_| gauss(rng));
    let x = t.dot(&a) + Array2::from_shape_fn((n, p), |_| noise * gauss(rng));
    let y = t.dot(&b) + Array2::from_shape_fn((n, q), |_| noise * gauss(rng));
    (x, y)
}

#[test]
fn criterion_06_pls_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);

    // full-rank SIMPLS equals least squares
    for case in 0..20 {
        let n = 30;
        let p = rng.gen_range(2..6usize);
        let q = rng.gen_range(1..4usize);
        let x = Array2::from_shape_fn((n, p), |_| gauss(&mut rng));
        let y = Array2::from_shape_fn((n, q), |_| gauss(&mut rng));
        let model = simpls_fit(&x, &y, p).unwrap();
        let (_, _, coef) = least_squares_coef(&x, &y);
        let num = (&model.coef - &coef).mapv(|v| v * v).sum().sqrt();
        let den = coef.mapv(|v| v * v).sum().sqrt().max(1e-12);
        assert!(num / den < 1e-6, "case {case}: relative gap {}", num / den);
    }

    // first weight proportional to X^T y for a single response
    let x = Array2::from_shape_fn((25, 5), |_| gauss(&mut rng));
    let y = Array2::from_shape_fn((25, 1), |_| gauss(&mut rng));
    let model = simpls_fit(&x, &y, 3).unwrap();
    let xc = {
        let means: Vec<f64> = (0..5).map(|j| x.column(j).sum() / 25.0).collect();
        Array2::from_shape_fn((25, 5), |(i, j)| x[[i, j]] - means[j])
    };
    let ymean = y.column(0).sum() / 25.0;
    let yc = y.mapv(|v| v - ymean);
    let xty = xc.t().dot(&yc);
    let w0: Vec<f64> = (0..5).map(|j| model.weights[[j, 0]]).collect();
    let t0: Vec<f64> = (0..5).map(|j| xty[[j, 0]]).collect();
    let dot: f64 = w0.iter().zip(&t0).map(|(a, b)| a * b).sum();
    let cos = dot.abs()
        / (w0.iter().map(|v| v * v).sum::<f64>().sqrt()
            * t0.iter().map(|v| v * v).sum::<f64>().sqrt());
    assert!(1.0 - cos < 1e-8, "first weight misaligned: cos {cos}");

    // LOO selection recovers the latent rank
    let (x1, y1) = latent_data(&mut rng, 24, 6, 3, 1, 0.01);
    assert_eq!(loo_select(&x1, &y1, 5).unwrap(), 1);
    let (x2a, y2a) = latent_data(&mut rng, 24, 6, 3, 2, 0.0);
    let x2 = &x2a + &Array2::from_shape_fn((24, 6), |_| 0.01 * gauss(&mut rng));
    let y2 = &y2a + &Array2::from_shape_fn((24, 3), |_| 0.01 * gauss(&mut rng));
    assert_eq!(loo_select(&x2, &y2, 5).unwrap(), 2);

    assert!(start.elapsed().as_secs_f64() < 20.0, "took {:?}", start.elapsed());
    println!("criterion 6 (PLS: least-squares, first-weight and rank oracles): PASS");
}

fn concentrated_shapes(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<LandmarkConfiguration> {
    let k = 8;
    let base = Array2::from_shape_fn((k, 3), |(i, j)| {
        let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
        match j {
            0 => th.cos() * (1.0 + 0.08 * i as f64),
            1 => th.sin() * (1.25 - 0.04 * i as f64),
            _ => 0.35 * (1.3 * i as f64).sin(),
        }
    });
    (0..n)
        .map(|_| {
            let noise = Array2::from_shape_fn((k, 3), |_| spread * gauss(rng));
            LandmarkConfiguration::new(&base + &noise).unwrap()
        })
        .collect()
}

fn concentrated_corrs(rng: &mut ChaCha8Rng, n: usize, m: usize, spread: f64) -> Vec<CorrelationMatrix> {
    let center = random_valid_corr(rng, m);
    (0..n)
        .map(|_| {
            let mut a = center.matrix().clone();
            for i in 0..m {
                for j in (i + 1)..m {
                    let bump = spread * gauss(rng) * 0.3;
                    a[[i, j]] = (a[[i, j]] + bump).clamp(-0.99, 0.99);
                    a[[j, i]] = a[[i, j]];
                }
            }
            nearest_correlation(&a, 1e-10, 500).unwrap()
        })
        .collect()
}

fn diameter(d: &DistanceMatrix) -> f64 {
    let mut best = 0.0f64;
    for i in 0..d.n() {
        for j in (i + 1)..d.n() {
            best = best.max(d.get(i, j));
        }
    }
    best
}

#[test]
fn criterion_07_backscore_roundtrips() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);

    // shapes
    let t0 = Instant::now();
    let shapes = concentrated_shapes(&mut rng, 12, 0.06);
    let d = ShapeSpace.distance_matrix(&shapes).unwrap();
    let e = cmds(&d, 11, 0.0).unwrap();
    let bs = ShapeBackscorer::fit(shapes.clone(), e.clone()).unwrap();
    let tol = 0.05 * diameter(&d);
    let mut hits = 0;
    for (i, y) in shapes.iter().enumerate() {
        let back = bs.backscore(&e.training_score(i)).unwrap();
        if procrustes_distance(&back, y).unwrap() <= tol {
            hits += 1;
        }
    }
    assert!(hits * 10 >= shapes.len() * 9, "shape roundtrip hits {hits}/12");
    eprintln!("  shapes roundtrip: {:?}", t0.elapsed());

    // correlation matrices
    let t0 = Instant::now();
    let corrs = concentrated_corrs(&mut rng, 12, 4, 0.35);
    let d = CorrSpace.distance_matrix(&corrs).unwrap();
    let e = cmds(&d, 11, 0.0).unwrap();
    let bs = CorrBackscorer::fit(corrs.clone(), e.clone(), CorrBackscoreConfig::default()).unwrap();
    let tol = 0.05 * diameter(&d);
    let mut hits = 0;
    for (i, y) in corrs.iter().enumerate() {
        let back = bs.backscore(&e.training_score(i)).unwrap();
        if frobenius_distance(&back, y).unwrap() <= tol {
            hits += 1;
        }
    }
    assert!(hits * 10 >= corrs.len() * 9, "corr roundtrip hits {hits}/12");
    eprintln!("  corr roundtrip: {:?}", t0.elapsed());

    // curves: tolerance is the median nearest-neighbor distance
    let t0 = Instant::now();
    let curves: Vec<SampledCurve> = (0..8)
        .map(|_| {
            bump_curve(
                rng.gen_range(0.35..0.65),
                rng.gen_range(0.1..0.18),
                rng.gen_range(0.6..1.0),
                40,
            )
        })
        .collect();
    let d = CurveSpace.distance_matrix(&curves).unwrap();
    let full = cmds(&d, 7, 0.0).unwrap();
    let e = full.truncated(mdreg::mds::covering_dimension(&full.explained, 0.95, 10));
    let cfg = CurveSearchConfig {
        n_nearest: 5,
        ..CurveSearchConfig::default()
    };
    let bs = CurveBackscorer::fit(curves.clone(), e.clone(), cfg).unwrap();
    let mut nn: Vec<f64> = (0..curves.len())
        .map(|i| {
            (0..curves.len())
                .filter(|&j| j != i)
                .map(|j| d.get(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = nn[nn.len() / 2];
    let mut hits = 0;
    for (i, y) in curves.iter().enumerate() {
        let back = bs.backscore(&e.training_score(i)).unwrap();
        if frechet_distance(&back, y) <= tol {
            hits += 1;
        }
    }
    assert!(hits * 10 >= curves.len() * 9, "curve roundtrip hits {hits}/8");
    eprintln!("  curve roundtrip: {:?}", t0.elapsed());

    assert!(start.elapsed().as_secs_f64() < 300.0, "took {:?}", start.elapsed());
    println!("criterion 7 (backscore roundtrips in all object spaces): PASS");
}

#[test]
fn criterion_08_end_to_end_signal_and_null() {
    let start = Instant::now();

    let d = synth_dataset(SynthKind::ShapesOnShapes, 36, 88, 1.0).unwrap();
    let fp = fit_pipeline(d.ids, d.predictors, d.responses, None, d.config).unwrap();
    assert!(fp.assessment.r2 > 0.5, "signal r2 {}", fp.assessment.r2);
    let res = fp.test_response(199, 7).unwrap();
    assert_eq!(res.p, 0.0, "signal p {}", res.p);

    let mut low = 0;
    let runs = 50;
    for mc in 0..runs {
        let d = synth_dataset(SynthKind::ShapesOnShapes, 36, 10_000 + mc, 0.0).unwrap();
        let fp = fit_pipeline(d.ids, d.predictors, d.responses, None, d.config).unwrap();
        let res = fp.test_response(199, 20_000 + mc).unwrap();
        if res.p <= 0.05 {
            low += 1;
        }
    }
    let frac = low as f64 / runs as f64;
    assert!(frac <= 0.16, "null rejection fraction {frac}");

    assert!(start.elapsed().as_secs_f64() < 900.0, "took {:?}", start.elapsed());
    println!(
        "criterion 8 (end-to-end: signal r2 {:.3}, p 0; null rejections {frac:.2}): PASS",
        fp.assessment.r2
    );
}

#[test]
fn criterion_09_curve_combination_endpoints() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for case in 0..100 {
        let f1 = bump_curve(
            rng.gen_range(0.25..0.75),
            rng.gen_range(0.08..0.2),
            rng.gen_range(0.4..1.2),
            rng.gen_range(30..60usize),
        );
        let f2 = bump_curve(
            rng.gen_range(0.25..0.75),
            rng.gen_range(0.08..0.2),
            rng.gen_range(0.4..1.2),
            rng.gen_range(30..60usize),
        );
        let n = f1.len().max(f2.len());
        let at1 = combine_pair(&f1, &f2, 1.0).unwrap();
        for (a, b) in at1.f.iter().zip(&f1.resample(n).f) {
            assert!((a - b).abs() < 1e-9, "case {case}: gamma=1 endpoint");
        }
        let at0 = combine_pair(&f1, &f2, 0.0).unwrap();
        for (a, b) in at0.f.iter().zip(&f2.resample(n).f) {
            assert!((a - b).abs() < 1e-9, "case {case}: gamma=0 endpoint");
        }
    }

    // unimodality of the equal-weight triple combination
    let f1 = bump_curve(0.3, 0.12, 1.0, 48);
    let f2 = bump_curve(0.5, 0.12, 0.9, 48);
    let f3 = bump_curve(0.7, 0.12, 0.8, 48);
    let avg = combine_triple(&f1, &f2, &f3, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
    let idx = avg.argmax();
    let peak = avg.max_value();
    for i in 1..avg.len() {
        if i <= idx {
            assert!(
                avg.f[i - 1] - avg.f[i] <= 0.05 * peak,
                "dip before the peak at {i}"
            );
        } else {
            assert!(
                avg.f[i] - avg.f[i - 1] <= 0.05 * peak,
                "rise after the peak at {i}"
            );
        }
    }

    assert!(start.elapsed().as_secs_f64() < 60.0, "took {:?}", start.elapsed());
    println!("criterion 9 (curve combination endpoints and unimodality): PASS");
}

#[test]
fn criterion_10_fit_and_report_are_deterministic() {
    let dir = std::env::temp_dir().join("mdreg_acceptance_determinism");
    std::fs::remove_dir_all(&dir).ok();
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for run in 0..2 {
        let d = synth_dataset(SynthKind::ShapesOnShapes, 12, 31, 1.0).unwrap();
        let fp = fit_pipeline(d.ids, d.predictors, d.responses, None, d.config).unwrap();
        let sub = dir.join(format!("run{run}"));
        let opts = ReportOptions {
            permutation: Some(fp.test_response(49, fp.config.seed).unwrap()),
            ..ReportOptions::default()
        };
        let mut files = vec![(
            "model.json".to_string(),
            fp.to_json().unwrap().into_bytes(),
        )];
        for p in render_report(&fp, &sub, &opts).unwrap() {
            files.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            ));
        }
        outputs.push(files);
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    assert_eq!(a.len(), b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between runs");
    }
    std::fs::remove_dir_all(&dir).ok();
    println!("criterion 10 (bit-identical fit + report outputs): PASS");
}
