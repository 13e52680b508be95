//! Serde adapter storing an `Array2<f64>` as a row-major list of rows.

use ndarray::Array2;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<S: Serializer>(a: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
    rows.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
    let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    let mut a = Array2::<f64>::zeros((n, m));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        for (j, &v) in row.iter().enumerate() {
            a[[i, j]] = v;
        }
    }
    Ok(a)
}
