//! Tensor and factor file formats.
//!
//! `ctensor-v1`: `{"format":"ctensor-v1","dims":[...],"data":[[re,im],...]}`
//! with row-major data of length equal to the dims product.
//!
//! `cpfactors-v1`: `{"format":"cpfactors-v1","dims":[...],"rank":r,
//! "factors":[F_1,...,F_m]}` where each `F_j` is a list of `r` columns and
//! each column a list of `n_j` `[re, im]` pairs.
//!
//! Doubles round-trip bit-identically through the JSON encoding.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{CPDecomposition, DenseTensor};

pub const TENSOR_FORMAT: &str = "ctensor-v1";
pub const FACTORS_FORMAT: &str = "cpfactors-v1";

#[derive(Serialize, Deserialize)]
struct TensorFile {
    format: String,
    dims: Vec<usize>,
    data: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct FactorsFile {
    format: String,
    dims: Vec<usize>,
    rank: usize,
    factors: Vec<Vec<Vec<[f64; 2]>>>,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_error(format: &'static str, path: &Path, err: &serde_json::Error) -> Error {
    Error::Malformed {
        format,
        path: path.display().to_string(),
        line: err.line(),
        column: err.column(),
        detail: err.to_string(),
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let file: TensorFile =
        serde_json::from_str(&text).map_err(|e| parse_error(TENSOR_FORMAT, path, &e))?;
    if file.format != TENSOR_FORMAT {
        return Err(Error::WrongFormatTag {
            path: path.display().to_string(),
            found: file.format,
            expected: TENSOR_FORMAT,
        });
    }
    let expected: usize = file.dims.iter().product();
    if file.data.len() != expected {
        return Err(Error::DataLengthMismatch {
            path: path.display().to_string(),
            len: file.data.len(),
            expected,
        });
    }
    DenseTensor::new(
        file.dims,
        file.data
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect(),
    )
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let file = TensorFile {
        format: TENSOR_FORMAT.to_string(),
        dims: t.dims().to_vec(),
        data: t.data().iter().map(|z| [z.re, z.im]).collect(),
    };
    let text = serde_json::to_string(&file).expect("serializable");
    write_string(path.as_ref(), &text)
}

pub fn read_factors(path: impl AsRef<Path>) -> Result<CPDecomposition> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let file: FactorsFile =
        serde_json::from_str(&text).map_err(|e| parse_error(FACTORS_FORMAT, path, &e))?;
    if file.format != FACTORS_FORMAT {
        return Err(Error::WrongFormatTag {
            path: path.display().to_string(),
            found: file.format,
            expected: FACTORS_FORMAT,
        });
    }
    if file.factors.len() != file.dims.len() {
        return Err(Error::DimMismatch(format!(
            "{}: {} factor matrices for {} dims",
            path.display(),
            file.factors.len(),
            file.dims.len()
        )));
    }
    let mut factors = Vec::with_capacity(file.factors.len());
    for (j, (columns, &n)) in file.factors.iter().zip(&file.dims).enumerate() {
        if columns.len() != file.rank || columns.iter().any(|col| col.len() != n) {
            return Err(Error::DimMismatch(format!(
                "{}: factor {j} must be {} columns of length {n}",
                path.display(),
                file.rank,
            )));
        }
        let mat = Array2::from_shape_fn((n, file.rank), |(i, s)| {
            Complex64::new(columns[s][i][0], columns[s][i][1])
        });
        factors.push(mat);
    }
    CPDecomposition::new(factors)
}

pub fn write_factors(path: impl AsRef<Path>, cp: &CPDecomposition) -> Result<()> {
    let factors = cp
        .factors()
        .iter()
        .map(|f| {
            (0..cp.rank())
                .map(|s| f.column(s).iter().map(|z| [z.re, z.im]).collect())
                .collect()
        })
        .collect();
    let file = FactorsFile {
        format: FACTORS_FORMAT.to_string(),
        dims: cp.dims(),
        rank: cp.rank(),
        factors,
    };
    let text = serde_json::to_string(&file).expect("serializable");
    write_string(path.as_ref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use crate::rng::SeededRng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("gptensor-io-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn tensor_roundtrip_bit_identical() {
        let mut rng = SeededRng::new(5);
        let t = DenseTensor::from_fn(vec![3, 2, 2], |_| rng.complex_normal()).unwrap();
        let path = tmp("roundtrip.json");
        write_tensor(&path, &t).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back.dims(), t.dims());
        for (a, b) in back.data().iter().zip(t.data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn factors_roundtrip_bit_identical() {
        let cp = reference::cubic_rank4_factors();
        let path = tmp("factors.json");
        write_factors(&path, &cp).unwrap();
        let back = read_factors(&path).unwrap();
        assert_eq!(back.rank(), cp.rank());
        for (a, b) in back.factors().iter().zip(cp.factors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn length_mismatch_rejected() {
        let path = tmp("short.json");
        std::fs::write(
            &path,
            r#"{"format":"ctensor-v1","dims":[2,2],"data":[[1.0,0.0]]}"#,
        )
        .unwrap();
        assert!(matches!(
            read_tensor(&path),
            Err(Error::DataLengthMismatch { len: 1, expected: 4, .. })
        ));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn wrong_tag_rejected() {
        let path = tmp("tag.json");
        std::fs::write(&path, r#"{"format":"ctensor-v2","dims":[1],"data":[[0.0,0.0]]}"#).unwrap();
        assert!(matches!(read_tensor(&path), Err(Error::WrongFormatTag { .. })));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn malformed_json_reports_position() {
        let path = tmp("bad.json");
        std::fs::write(&path, "{\"format\": \"ctensor-v1\",\n  broken").unwrap();
        match read_tensor(&path) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_tensor("/nonexistent/gptensor.json"),
            Err(Error::Io { .. })
        ));
    }
}
