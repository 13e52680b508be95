//! Motion-capture feature extraction: distance-to-initial-pose curves,
//! maximal poses, peak speed, and per-marker correlation structure.

use crate::corrmat::CorrelationMatrix;
use crate::curves::SampledCurve;
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::shapes::{gpa, procrustes_distance, LandmarkConfiguration, GPA_MAX_ITER, GPA_TOL};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// A recorded landmark trajectory: T frames of a k x m configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionRecord {
    pub id: String,
    pub frames: Vec<LandmarkConfiguration>,
}

impl MotionRecord {
    pub fn new(id: String, frames: Vec<LandmarkConfiguration>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "motion {id:?} has {} frames, need at least 2",
                frames.len()
            )));
        }
        let (k, m) = (frames[0].landmarks(), frames[0].dim());
        for (t, f) in frames.iter().enumerate() {
            if f.landmarks() != k || f.dim() != m {
                return Err(Error::InvalidInput(format!(
                    "motion {id:?} frame {t} has shape {}x{}, expected {k}x{m}",
                    f.landmarks(),
                    f.dim()
                )));
            }
        }
        Ok(MotionRecord { id, frames })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

/// Features of one motion: initial pose, pose at maximal excursion, the
/// distance-to-initial curve and the peak (smoothed) rate of change.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionFeatures {
    pub initial: LandmarkConfiguration,
    pub maximal: LandmarkConfiguration,
    pub curve: SampledCurve,
    pub speed: f64,
}

/// Moving average with a centered window of `w` points (shrunk at the ends).
fn smooth(values: &[f64], w: usize) -> Vec<f64> {
    let half = w / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

pub const SPEED_SMOOTH_WINDOW: usize = 5;

pub fn motion_features(rec: &MotionRecord) -> Result<MotionFeatures> {
    let t_count = rec.frame_count();
    let (k, m) = (rec.frames[0].landmarks(), rec.frames[0].dim());

    // initial pose: mean of the first ten frames (fewer if the motion is
    // shorter)
    let head = t_count.min(10);
    let mut avg = Array2::<f64>::zeros((k, m));
    for f in &rec.frames[..head] {
        avg += f.coords();
    }
    avg.mapv_inplace(|x| x / head as f64);
    let initial = LandmarkConfiguration::new(avg)?;

    let distances: Vec<f64> = rec
        .frames
        .iter()
        .map(|f| procrustes_distance(f, &initial))
        .collect::<Result<_>>()?;
    let grid: Vec<f64> = (0..t_count)
        .map(|t| t as f64 / (t_count - 1) as f64)
        .collect();
    let curve = SampledCurve::new(grid, distances.clone())?;

    let max_idx = curve.argmax();
    let maximal = rec.frames[max_idx].clone();

    // peak centered per-frame difference of the smoothed curve; kept in
    // per-frame units so faster playback of the same path reads as faster
    let smoothed = smooth(&distances, SPEED_SMOOTH_WINDOW);
    let mut speed = 0.0f64;
    for i in 1..t_count - 1 {
        let rate = (smoothed[i + 1] - smoothed[i - 1]) / 2.0;
        speed = speed.max(rate);
    }
    Ok(MotionFeatures {
        initial,
        maximal,
        curve,
        speed,
    })
}

/// Per-marker movement correlation of one record, pooled over the whole
/// sample for the principal axes.
///
/// Whole-body motion is removed by aligning each record's frames through
/// GPA; each record is then rotated onto `reference` (default: the first
/// record's mean pose). Marker trajectories are shifted to start at the
/// origin, each marker's principal axis is estimated from the pooled
/// trajectories of all records, and the k x k Pearson correlation of the
/// per-frame axis scores is returned. Zero-variance markers get their
/// correlation entries set to 0 with a warning.
pub fn motion_to_corrmat(
    rec: &MotionRecord,
    all_recs: &[MotionRecord],
    reference: Option<&LandmarkConfiguration>,
) -> Result<CorrelationMatrix> {
    if all_recs.len() < 2 {
        return Err(Error::InvalidInput(
            "marker-axis pooling needs at least 2 records".into(),
        ));
    }
    let (k, m) = (rec.frames[0].landmarks(), rec.frames[0].dim());

    // face-forward reference pose: provided, or the first record's GPA mean
    let default_ref;
    let reference = match reference {
        Some(r) => r,
        None => {
            let (mean, _) = gpa(&all_recs[0].frames, GPA_TOL, GPA_MAX_ITER)?;
            default_ref = mean;
            &default_ref
        }
    };

    // aligned, reference-rotated trajectories per record, shifted to start
    // at the origin: record -> marker -> T x m
    let extract = |r: &MotionRecord| -> Result<Vec<Array2<f64>>> {
        if r.frames[0].landmarks() != k || r.frames[0].dim() != m {
            return Err(Error::InvalidInput(format!(
                "record {:?} has mismatched marker layout",
                r.id
            )));
        }
        let (mean, aligned) = gpa(&r.frames, GPA_TOL, GPA_MAX_ITER)?;
        let cross = mean.preshape()?.t().dot(&reference.preshape()?);
        let (rot, _) = crate::linalg::best_rotation(&cross);
        let t_count = r.frame_count();
        let mut per_marker = vec![Array2::<f64>::zeros((t_count, m)); k];
        for (t, frame) in aligned.iter().enumerate() {
            let rotated = frame.dot(&rot);
            for j in 0..k {
                for c in 0..m {
                    per_marker[j][[t, c]] = rotated[[j, c]];
                }
            }
        }
        for marker in per_marker.iter_mut() {
            let start: Vec<f64> = (0..m).map(|c| marker[[0, c]]).collect();
            for t in 0..marker.nrows() {
                for c in 0..m {
                    marker[[t, c]] -= start[c];
                }
            }
        }
        Ok(per_marker)
    };

    // pooled per-marker principal axes, oriented along the pooled net
    // displacement so markers moving together score with a common sign
    let mut pooled = vec![Array2::<f64>::zeros((m, m)); k];
    let mut net = vec![vec![0.0; m]; k];
    for r in all_recs {
        let per_marker = extract(r)?;
        for j in 0..k {
            let tr = &per_marker[j];
            pooled[j] = &pooled[j] + &tr.t().dot(tr);
            for c in 0..m {
                net[j][c] += tr[[tr.nrows() - 1, c]];
            }
        }
    }
    let axes: Vec<Vec<f64>> = pooled
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let (_, v) = jacobi_eigen(s);
            let mut axis: Vec<f64> = (0..m).map(|c| v[[c, 0]]).collect();
            let mut orient: f64 = axis.iter().zip(&net[j]).map(|(a, b)| a * b).sum();
            if orient.abs() < 1e-12 {
                // no net movement: fall back to a deterministic sign
                orient = *axis.iter().find(|x| x.abs() > 1e-9).unwrap_or(&1.0);
            }
            if orient < 0.0 {
                axis.iter_mut().for_each(|x| *x = -*x);
            }
            axis
        })
        .collect();

    // score matrix for the requested record
    let per_marker = extract(rec)?;
    let t_count = rec.frame_count();
    let mut scores = Array2::<f64>::zeros((t_count, k));
    for j in 0..k {
        for t in 0..t_count {
            scores[[t, j]] = (0..m).map(|c| per_marker[j][[t, c]] * axes[j][c]).sum();
        }
    }

    // Pearson correlation with the zero-variance convention
    let means: Vec<f64> = (0..k).map(|j| scores.column(j).sum() / t_count as f64).collect();
    let sds: Vec<f64> = (0..k)
        .map(|j| {
            scores
                .column(j)
                .iter()
                .map(|&v| (v - means[j]) * (v - means[j]))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut c = Array2::<f64>::eye(k);
    for i in 0..k {
        for j in (i + 1)..k {
            if sds[i] <= 1e-12 || sds[j] <= 1e-12 {
                log::warn!(
                    "constant marker score (markers {i}/{j}); correlation set to 0"
                );
                continue;
            }
            let cov: f64 = (0..t_count)
                .map(|t| (scores[[t, i]] - means[i]) * (scores[[t, j]] - means[j]))
                .sum();
            let r = (cov / (sds[i] * sds[j])).clamp(-1.0, 1.0);
            c[[i, j]] = r;
            c[[j, i]] = r;
        }
    }
    CorrelationMatrix::new(c)
}

/// Parses motion CSV with columns subject, frame, marker, x, y[, z].
/// Frames and markers are dense 0- or 1-based indices per subject.
pub fn motions_from_csv(text: &str) -> Result<Vec<MotionRecord>> {
    use std::collections::BTreeMap;
    // subject -> frame -> marker -> coords
    let mut table: BTreeMap<String, BTreeMap<i64, BTreeMap<i64, Vec<f64>>>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("subject") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 5 {
            return Err(Error::InvalidInput(format!(
                "motion CSV line {}: expected subject,frame,marker,x,y[,z]",
                lineno + 1
            )));
        }
        let bad = |what: &str| {
            Error::InvalidInput(format!("motion CSV line {}: bad {what}", lineno + 1))
        };
        let subject = parts[0].to_string();
        let frame: i64 = parts[1].parse().map_err(|_| bad("frame"))?;
        let marker: i64 = parts[2].parse().map_err(|_| bad("marker"))?;
        let coords: Vec<f64> = parts[3..]
            .iter()
            .map(|tok| tok.parse().map_err(|_| bad("coordinate")))
            .collect::<Result<_>>()?;
        if !table.contains_key(&subject) {
            order.push(subject.clone());
        }
        table
            .entry(subject)
            .or_default()
            .entry(frame)
            .or_default()
            .insert(marker, coords);
    }
    let mut out = Vec::new();
    for subject in order {
        let frames_map = &table[&subject];
        let mut frames = Vec::new();
        for (frame_idx, markers) in frames_map {
            let k = markers.len();
            let m = markers
                .values()
                .next()
                .map(|c| c.len())
                .ok_or(Error::EmptyInput)?;
            let mut coords = Array2::<f64>::zeros((k, m));
            for (row, (_, xyz)) in markers.iter().enumerate() {
                if xyz.len() != m {
                    return Err(Error::InvalidInput(format!(
                        "subject {subject:?} frame {frame_idx}: ragged coordinates"
                    )));
                }
                for (c, &v) in xyz.iter().enumerate() {
                    coords[[row, c]] = v;
                }
            }
            frames.push(LandmarkConfiguration::new(coords)?);
        }
        out.push(MotionRecord::new(subject, frames)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base_config(k: usize) -> Array2<f64> {
        // an irregular planar polygon, lifted to 3D
        Array2::from_shape_fn((k, 3), |(i, j)| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            match j {
                0 => th.cos() * (1.0 + 0.1 * i as f64),
                1 => th.sin() * (1.3 - 0.05 * i as f64),
                _ => 0.2 * (i as f64 * 0.7).sin(),
            }
        })
    }

    /// Markers displaced along +x with per-marker amplitudes and a common
    /// time profile.
    fn profiled_motion(
        id: &str,
        t_count: usize,
        amps: &[f64],
        profile: &dyn Fn(f64) -> f64,
    ) -> MotionRecord {
        let k = amps.len();
        let base = base_config(k);
        let frames = (0..t_count)
            .map(|t| {
                let s = profile(t as f64 / (t_count - 1) as f64);
                let mut c = base.clone();
                for j in 0..k {
                    c[[j, 0]] += s * amps[j];
                }
                LandmarkConfiguration::new(c).unwrap()
            })
            .collect();
        MotionRecord::new(id.to_string(), frames).unwrap()
    }

    #[test]
    fn static_motion_features() {
        let k = 6;
        let base = LandmarkConfiguration::new(base_config(k)).unwrap();
        let rec = MotionRecord::new("s".into(), vec![base.clone(); 30]).unwrap();
        let f = motion_features(&rec).unwrap();
        assert!(f.curve.f.iter().all(|&v| v < 1e-9));
        assert!(f.speed.abs() < 1e-9);
        assert!(procrustes_distance(&f.maximal, &f.initial).unwrap() < 1e-9);
        assert_eq!(f.curve.argmax(), 0); // first attaining frame
    }

    #[test]
    fn ramp_motion_is_monotone_with_final_maximal_pose() {
        let amps: Vec<f64> = (0..6).map(|i| 0.05 + 0.02 * i as f64).collect();
        let rec = profiled_motion("s", 60, &amps, &|t| t);
        let f = motion_features(&rec).unwrap();
        // monotone nondecreasing beyond the initial-averaging window
        for w in f.curve.f[10..].windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "curve not monotone: {} -> {}", w[0], w[1]);
        }
        assert_eq!(f.curve.argmax(), 59);
        assert!(
            procrustes_distance(&f.maximal, rec.frames.last().unwrap()).unwrap() < 1e-9
        );
    }

    #[test]
    fn subsampled_ramp_doubles_speed() {
        let amps: Vec<f64> = (0..6).map(|i| 0.05 + 0.02 * i as f64).collect();
        let rec = profiled_motion("s", 120, &amps, &|t| t);
        let sub = MotionRecord::new(
            "s2".into(),
            rec.frames.iter().step_by(2).cloned().collect(),
        )
        .unwrap();
        let f_full = motion_features(&rec).unwrap();
        let f_sub = motion_features(&sub).unwrap();
        let ratio = f_sub.speed / f_full.speed;
        assert!((ratio - 2.0).abs() < 0.3, "speed ratio {ratio}");
    }

    fn dot(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
        (x * y).sum()
    }

    /// Orthonormal translation, scale, and rotation modes at `base`:
    /// displacement fields removed (to first order) by GPA alignment.
    fn similarity_modes(base: &Array2<f64>) -> Vec<Array2<f64>> {
        let k = base.nrows();
        let mut centered = base.clone();
        for j in 0..3 {
            let mean = centered.column(j).sum() / k as f64;
            centered.column_mut(j).mapv_inplace(|v| v - mean);
        }
        let mut modes = Vec::new();
        for j in 0..3 {
            let mut m = Array2::<f64>::zeros((k, 3));
            m.column_mut(j).fill(1.0);
            modes.push(m);
        }
        modes.push(centered.clone());
        for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let mut m = Array2::<f64>::zeros((k, 3));
            for i in 0..k {
                m[[i, a]] = centered[[i, b]];
                m[[i, b]] = -centered[[i, a]];
            }
            modes.push(m);
        }
        let mut ortho: Vec<Array2<f64>> = Vec::new();
        for mut m in modes {
            for o in &ortho {
                let c = dot(&m, o);
                m = m - o * c;
            }
            let norm = dot(&m, &m).sqrt();
            if norm > 1e-12 {
                ortho.push(m / norm);
            }
        }
        ortho
    }

    /// A displacement field orthogonal to all similarity modes at `base`,
    /// so tiny motions along it leave the GPA transforms at the identity
    /// up to second order.
    fn shape_mode_field(base: &Array2<f64>) -> Array2<f64> {
        let k = base.nrows();
        let mut d = Array2::from_shape_fn((k, 3), |(i, j)| {
            (i as f64 * 1.3 + j as f64 * 0.7).sin() + 0.3 * (i as f64 - 2.0 * j as f64).cos()
        });
        for o in similarity_modes(base) {
            let c = dot(&d, &o);
            d = d - &o * c;
        }
        let size = base.nrows() as f64; // rough normalization target
        d.clone() * (size.sqrt() / dot(&d, &d).sqrt())
    }

    /// A mode-free field supported on `rows` only, found as a nullspace
    /// vector of the mode-projection map restricted to that support.
    fn supported_mode_free_field(base: &Array2<f64>, rows: std::ops::Range<usize>) -> Array2<f64> {
        let k = base.nrows();
        let modes = similarity_modes(base);
        let nb = rows.len() * 3;
        // basis of fields supported on `rows`
        let basis: Vec<Array2<f64>> = rows
            .clone()
            .flat_map(|i| {
                (0..3).map(move |j| {
                    let mut e = Array2::<f64>::zeros((k, 3));
                    e[[i, j]] = 1.0;
                    e
                })
            })
            .collect();
        // coefficients orthogonal to every mode: nullspace of A^T A
        let mut ata = Array2::<f64>::zeros((nb, nb));
        for (a, ea) in basis.iter().enumerate() {
            for (b, eb) in basis.iter().enumerate() {
                ata[[a, b]] = modes
                    .iter()
                    .map(|m| dot(m, ea) * dot(m, eb))
                    .sum();
            }
        }
        let (lam, v) = crate::linalg::jacobi_eigen(&ata);
        // blend the two flattest directions so no marker ends up static
        assert!(lam[nb - 2] < 1e-10, "support too small for a mode-free field");
        let mut field = Array2::<f64>::zeros((k, 3));
        for (b, e) in basis.iter().enumerate() {
            field = field + e * (v[[b, nb - 1]] + 0.5 * v[[b, nb - 2]]);
        }
        for i in rows {
            let norm: f64 = (0..3).map(|j| field[[i, j]] * field[[i, j]]).sum::<f64>().sqrt();
            assert!(norm > 1e-3, "marker {i} left static by the field construction");
        }
        field
    }

    #[test]
    fn unison_markers_fully_correlated() {
        let k = 6;
        let base = base_config(k);
        let field = shape_mode_field(&base) * 1e-5;
        let t_count = 40;
        let recs: Vec<MotionRecord> = (0..3)
            .map(|r| {
                let frames = (0..t_count)
                    .map(|t| {
                        let s = (t as f64 / (t_count - 1) as f64).powf(1.0 + 0.3 * r as f64);
                        LandmarkConfiguration::new(&base + &(&field * s)).unwrap()
                    })
                    .collect();
                MotionRecord::new(format!("s{r}"), frames).unwrap()
            })
            .collect();
        let c = motion_to_corrmat(&recs[0], &recs, None).unwrap();
        for i in 0..k {
            assert_eq!(c.matrix()[[i, i]], 1.0);
            for j in 0..k {
                assert!(
                    c.matrix()[[i, j]] > 1.0 - 1e-8,
                    "({i},{j}) = {}",
                    c.matrix()[[i, j]]
                );
            }
        }
    }

    #[test]
    fn independent_groups_decorrelate() {
        let k = 8;
        let base = base_config(k);
        // each group rides its own mode-free displacement field, so GPA
        // does not leak one group's profile into the other
        let f1 = supported_mode_free_field(&base, 0..4) * 0.02;
        let f2 = supported_mode_free_field(&base, 4..8) * 0.02;
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let t_count = 200;
        let mut make = |id: &str| {
            // frequencies 2 and 5 are orthogonal over the grid, so the
            // groups share no signal
            let p1: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let p2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let frames: Vec<LandmarkConfiguration> = (0..t_count)
                .map(|t| {
                    let tt = t as f64 / (t_count - 1) as f64;
                    let g1 = (std::f64::consts::TAU * 2.0 * tt + p1).sin();
                    let g2 = (std::f64::consts::TAU * 5.0 * tt + p2).sin();
                    LandmarkConfiguration::new(&base + &(&f1 * g1) + &(&f2 * g2)).unwrap()
                })
                .collect();
            MotionRecord::new(id.to_string(), frames).unwrap()
        };
        let recs: Vec<MotionRecord> = (0..4).map(|r| make(&format!("s{r}"))).collect();
        let c = motion_to_corrmat(&recs[0], &recs, None).unwrap();
        let mat = c.matrix();
        let mut within = Vec::new();
        let mut across = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let same = (i < 4) == (j < 4);
                if same {
                    within.push(mat[[i, j]].abs());
                } else {
                    across.push(mat[[i, j]].abs());
                }
            }
        }
        let within_min = within.iter().cloned().fold(f64::INFINITY, f64::min);
        let across_max = across.iter().cloned().fold(0.0, f64::max);
        assert!(within_min > 0.9, "within-group correlation {within_min}");
        assert!(across_max < 0.2, "cross-group correlation {across_max}");
    }

    #[test]
    fn motion_csv_parses() {
        let text = "subject,frame,marker,x,y,z\n\
                    a,0,0,0.0,0.0,0.0\na,0,1,1.0,0.0,0.0\na,0,2,0.0,1.0,0.0\na,0,3,0.0,0.0,1.0\n\
                    a,1,0,0.1,0.0,0.0\na,1,1,1.0,0.0,0.0\na,1,2,0.0,1.1,0.0\na,1,3,0.0,0.0,1.0\n";
        let recs = motions_from_csv(text).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].frame_count(), 2);
        assert_eq!(recs[0].frames[0].landmarks(), 4);
        assert!((recs[0].frames[1].coords()[[2, 1]] - 1.1).abs() < 1e-15);
    }
}
