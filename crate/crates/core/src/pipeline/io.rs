//! Object-set containers and their on-disk formats.
//!
//! Shapes travel as a JSON landmark dataset, curves as `subject,t,value`
//! CSV, correlation matrices as per-subject CSV files behind a JSON
//! manifest, and plain points as `id,v1,v2,...` CSV.

use crate::corrmat::{frobenius_distance, CorrSpace, CorrelationMatrix};
use crate::curves::{curves_from_csv, curves_to_csv, frechet_distance, CurveSpace, SampledCurve};
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::euclid::EuclideanSpace;
use crate::metric::MetricSpace;
use crate::pipeline::config::SpaceKind;
use crate::shapes::{procrustes_distance, LandmarkConfiguration, LandmarkDataset, ShapeSpace};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A single object from one of the supported metric spaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "space", content = "object", rename_all = "snake_case")]
pub enum Object {
    Shape(LandmarkConfiguration),
    Curve(SampledCurve),
    Corr(CorrelationMatrix),
    Point(Vec<f64>),
}

impl Object {
    pub fn kind(&self) -> SpaceKind {
        match self {
            Object::Shape(_) => SpaceKind::Shape,
            Object::Curve(_) => SpaceKind::Curve,
            Object::Corr(_) => SpaceKind::Corr,
            Object::Point(_) => SpaceKind::Point,
        }
    }
}

/// A homogeneous sample of objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "space", content = "objects", rename_all = "snake_case")]
pub enum ObjectSet {
    Shapes(Vec<LandmarkConfiguration>),
    Curves(Vec<SampledCurve>),
    Corrs(Vec<CorrelationMatrix>),
    Points(Vec<Vec<f64>>),
}

impl ObjectSet {
    pub fn kind(&self) -> SpaceKind {
        match self {
            ObjectSet::Shapes(_) => SpaceKind::Shape,
            ObjectSet::Curves(_) => SpaceKind::Curve,
            ObjectSet::Corrs(_) => SpaceKind::Corr,
            ObjectSet::Points(_) => SpaceKind::Point,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ObjectSet::Shapes(v) => v.len(),
            ObjectSet::Curves(v) => v.len(),
            ObjectSet::Corrs(v) => v.len(),
            ObjectSet::Points(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Object {
        match self {
            ObjectSet::Shapes(v) => Object::Shape(v[i].clone()),
            ObjectSet::Curves(v) => Object::Curve(v[i].clone()),
            ObjectSet::Corrs(v) => Object::Corr(v[i].clone()),
            ObjectSet::Points(v) => Object::Point(v[i].clone()),
        }
    }

    pub fn distance_matrix(&self) -> Result<DistanceMatrix> {
        match self {
            ObjectSet::Shapes(v) => ShapeSpace.distance_matrix(v),
            ObjectSet::Curves(v) => CurveSpace.distance_matrix(v),
            ObjectSet::Corrs(v) => CorrSpace.distance_matrix(v),
            ObjectSet::Points(v) => EuclideanSpace.distance_matrix(v),
        }
    }

    /// Distances from every member to one external object.
    pub fn distances_to(&self, obj: &Object) -> Result<Vec<f64>> {
        match (self, obj) {
            (ObjectSet::Shapes(v), Object::Shape(o)) => {
                v.iter().map(|c| procrustes_distance(c, o)).collect()
            }
            (ObjectSet::Curves(v), Object::Curve(o)) => {
                Ok(v.iter().map(|c| frechet_distance(c, o)).collect())
            }
            (ObjectSet::Corrs(v), Object::Corr(o)) => {
                v.iter().map(|c| frobenius_distance(c, o)).collect()
            }
            (ObjectSet::Points(v), Object::Point(o)) => {
                v.iter().map(|c| EuclideanSpace.distance(c, o)).collect()
            }
            _ => Err(Error::InvalidInput(format!(
                "object from space {} cannot be compared with a {} sample",
                obj.kind(),
                self.kind()
            ))),
        }
    }

    /// Distance between two member objects of the same space.
    pub fn object_distance(a: &Object, b: &Object) -> Result<f64> {
        match (a, b) {
            (Object::Shape(x), Object::Shape(y)) => procrustes_distance(x, y),
            (Object::Curve(x), Object::Curve(y)) => Ok(frechet_distance(x, y)),
            (Object::Corr(x), Object::Corr(y)) => frobenius_distance(x, y),
            (Object::Point(x), Object::Point(y)) => EuclideanSpace.distance(x, y),
            _ => Err(Error::InvalidInput(format!(
                "cannot compare objects from spaces {} and {}",
                a.kind(),
                b.kind()
            ))),
        }
    }
}

/// Subject identifiers plus their objects, in file order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub objects: ObjectSet,
}

#[derive(Serialize, Deserialize)]
struct CorrManifest {
    m: usize,
    subjects: Vec<CorrManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct CorrManifestEntry {
    id: String,
    file: String,
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| with_path(e, path))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| with_path(e, path))
}

pub fn load_dataset(kind: SpaceKind, path: &Path) -> Result<Dataset> {
    match kind {
        SpaceKind::Shape => {
            let ds: LandmarkDataset = serde_json::from_str(&read(path)?)
                .map_err(|e| Error::InvalidInput(format!("parsing {}: {e}", path.display())))?;
            let ids = ds.subjects.iter().map(|s| s.id.clone()).collect();
            Ok(Dataset {
                ids,
                objects: ObjectSet::Shapes(ds.configurations()?),
            })
        }
        SpaceKind::Curve => {
            let named = curves_from_csv(&read(path)?)?;
            let (ids, curves) = named.into_iter().unzip();
            Ok(Dataset {
                ids,
                objects: ObjectSet::Curves(curves),
            })
        }
        SpaceKind::Corr => {
            let manifest: CorrManifest = serde_json::from_str(&read(path)?)
                .map_err(|e| Error::InvalidInput(format!("parsing {}: {e}", path.display())))?;
            let dir = path.parent().unwrap_or(Path::new("."));
            let mut ids = Vec::new();
            let mut mats = Vec::new();
            for entry in &manifest.subjects {
                let mat = CorrelationMatrix::from_csv(&read(&dir.join(&entry.file))?)?;
                if mat.dim() != manifest.m {
                    return Err(Error::DimensionMismatch {
                        what: "correlation matrix size",
                        expected: manifest.m,
                        found: mat.dim(),
                    });
                }
                ids.push(entry.id.clone());
                mats.push(mat);
            }
            Ok(Dataset {
                ids,
                objects: ObjectSet::Corrs(mats),
            })
        }
        SpaceKind::Point => {
            let mut ids = Vec::new();
            let mut pts: Vec<Vec<f64>> = Vec::new();
            for line in read(path)?.lines().filter(|l| !l.trim().is_empty()) {
                let mut parts = line.split(',');
                let id = parts
                    .next()
                    .ok_or_else(|| Error::InvalidInput("empty point row".into()))?;
                let values: Vec<f64> = parts
                    .map(|tok| {
                        tok.trim()
                            .parse()
                            .map_err(|_| Error::InvalidInput(format!("bad number {tok:?}")))
                    })
                    .collect::<Result<_>>()?;
                if let Some(first) = pts.first() {
                    if values.len() != first.len() {
                        return Err(Error::DimensionMismatch {
                            what: "point coordinates",
                            expected: first.len(),
                            found: values.len(),
                        });
                    }
                }
                ids.push(id.trim().to_string());
                pts.push(values);
            }
            if pts.is_empty() {
                return Err(Error::EmptyInput);
            }
            Ok(Dataset {
                ids,
                objects: ObjectSet::Points(pts),
            })
        }
    }
}

/// Writes a dataset under `path` in its space's format. For correlation
/// matrices, `path` is the JSON manifest and the per-subject CSVs land
/// beside it.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    if ds.ids.len() != ds.objects.len() {
        return Err(Error::DimensionMismatch {
            what: "dataset ids",
            expected: ds.objects.len(),
            found: ds.ids.len(),
        });
    }
    match &ds.objects {
        ObjectSet::Shapes(configs) => {
            let out = LandmarkDataset::from_configs(&ds.ids, configs);
            write(path, &serde_json::to_string_pretty(&out)?)
        }
        ObjectSet::Curves(curves) => {
            let named: Vec<(String, SampledCurve)> = ds
                .ids
                .iter()
                .cloned()
                .zip(curves.iter().cloned())
                .collect();
            write(path, &curves_to_csv(&named))
        }
        ObjectSet::Corrs(mats) => {
            let dir = path.parent().unwrap_or(Path::new("."));
            let mut subjects = Vec::new();
            for (id, mat) in ds.ids.iter().zip(mats) {
                let file = format!("{id}.csv");
                write(&dir.join(&file), &mat.to_csv())?;
                subjects.push(CorrManifestEntry {
                    id: id.clone(),
                    file,
                });
            }
            let manifest = CorrManifest {
                m: mats.first().map_or(0, |m| m.dim()),
                subjects,
            };
            write(
                path,
                &serde_json::to_string_pretty(&manifest)?,
            )
        }
        ObjectSet::Points(pts) => {
            let mut out = String::new();
            for (id, p) in ds.ids.iter().zip(pts) {
                out.push_str(id);
                for v in p {
                    out.push_str(&format!(",{v:?}"));
                }
                out.push('\n');
            }
            write(path, &out)
        }
    }
}

/// Loads a single object: a one-subject dataset file, or for correlation
/// matrices a bare CSV file.
pub fn load_object(kind: SpaceKind, path: &Path) -> Result<Object> {
    if kind == SpaceKind::Corr && path.extension().is_some_and(|e| e == "csv") {
        return Ok(Object::Corr(CorrelationMatrix::from_csv(&read(path)?)?));
    }
    let ds = load_dataset(kind, path)?;
    if ds.objects.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "{} holds {} objects, expected exactly 1",
            path.display(),
            ds.objects.len()
        )));
    }
    Ok(ds.objects.get(0))
}

/// Covariate table: a header line of column names, then one CSV row per
/// subject in dataset order.
pub fn load_covariates(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty covariate file".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let values: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad covariate value {tok:?}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != names.len() {
            return Err(Error::DimensionMismatch {
                what: "covariate columns",
                expected: names.len(),
                found: values.len(),
            });
        }
        rows.push(values);
    }
    Ok((names, rows))
}

pub fn save_covariates(path: &Path, names: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = names.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write(path, &out)
}
