//! JSON matrix files: `{"rows": N, "cols": M, "entries": [[re, im], …]}`, row-major.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::ComplexMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        if j.rows == 0 || j.cols == 0 {
            return Err(Error::Dimension("matrix must have positive dimensions".into()));
        }
        if j.entries.len() != j.rows * j.cols {
            return Err(Error::Dimension(format!("{} entries for a {}×{} matrix", j.entries.len(), j.rows, j.cols)));
        }
        if j.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("matrix entries must be finite".into()));
        }
        Ok(ComplexMatrix::from_fn(j.rows, j.cols, |r, c| {
            let [re, im] = j.entries[r * j.cols + c];
            Complex64::new(re, im)
        }))
    }
}

/// Serde adapter so that matrices can be embedded in other JSON structures.
pub mod serde_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(&j).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<ComplexMatrix>`.
pub mod serde_matrix_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let js: Vec<MatrixJson> = v.iter().map(MatrixJson::from).collect();
        js.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        let js = Vec::<MatrixJson>::deserialize(d)?;
        js.iter().map(|j| ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)).collect()
    }
}

pub fn matrix_from_json(text: &str) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_str(text)?;
    ComplexMatrix::try_from(&j)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("matrix serialization is infallible")
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    matrix_from_json(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    fs::write(path, matrix_to_json(m))?;
    Ok(())
}

/// Decimal rendering with 12 significant digits and trailing zeros removed, independent
/// of locale. Very large or small magnitudes use exponent notation.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        return format!("{x:.11e}");
    }
    let prec = (11 - exp).max(0) as usize;
    let s = format!("{x:.prec$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}
