//! Target signature, background mean and covariance, read from CSV files
//! or generated synthetically.

use std::path::{Path, PathBuf};

use hsd_core::{Error as CoreError, Matrix, SymmetricPd};
use serde::Serialize;

use crate::error::BundleError;

/// Relative asymmetry under which a covariance file is silently symmetrized.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-8;

/// Parameters of the synthetic background.
///
/// `Σ_ij = noise_std² ρ^{|i−j|}`, `μ = mu_level · r/‖r‖` with the ramp
/// `r_i = 1 + i/(p−1)`, and `t` a Gaussian bump centred at
/// `target_center·(p−1)` with width `target_width·p` bands, scaled to unit
/// Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub p: usize,
    pub rho: f64,
    pub noise_std: f64,
    pub mu_level: f64,
    pub target_center: f64,
    pub target_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BundleSource {
    Files { t: PathBuf, mu: PathBuf, sigma: PathBuf },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub t: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: SymmetricPd<f64>,
    pub provenance: BundleSource,
}

impl DatasetBundle {
    pub fn p(&self) -> usize {
        self.t.len()
    }
}

pub fn load_bundle(source: &BundleSource) -> Result<DatasetBundle, BundleError> {
    match source {
        BundleSource::Synthetic(spec) => synthetic(spec),
        BundleSource::Files { t, mu, sigma } => {
            let t_vec = read_vector(t)?;
            let mu_vec = read_vector(mu)?;
            if t_vec.len() != mu_vec.len() {
                return Err(BundleError::DimensionMismatch(format!(
                    "t has {} entries, mu has {}",
                    t_vec.len(),
                    mu_vec.len()
                )));
            }
            let sigma = read_covariance(sigma, t_vec.len())?;
            Ok(DatasetBundle {
                t: t_vec,
                mu: mu_vec,
                sigma,
                provenance: source.clone(),
            })
        }
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// AR(1) Toeplitz covariance `scale² ρ^{|i−j|}`.
pub fn ar1_covariance(p: usize, rho: f64, scale: f64) -> Matrix<f64> {
    Matrix::from_fn(p, p, |i, j| scale * scale * rho.powi(i.abs_diff(j) as i32))
}

pub fn synthetic(spec: &SyntheticSpec) -> Result<DatasetBundle, BundleError> {
    let p = spec.p;
    let last = (p.max(2) - 1) as f64;
    let centre = spec.target_center * last;
    let width = spec.target_width * p as f64;
    let t = unit(
        (0..p)
            .map(|i| {
                let x = (i as f64 - centre) / width;
                (-0.5 * x * x).exp()
            })
            .collect(),
    );
    let mu = unit((0..p).map(|i| 1.0 + i as f64 / last).collect())
        .into_iter()
        .map(|v| v * spec.mu_level)
        .collect();
    let sigma = SymmetricPd::new(ar1_covariance(p, spec.rho, spec.noise_std)).map_err(pd_error)?;
    Ok(DatasetBundle {
        t,
        mu,
        sigma,
        provenance: BundleSource::Synthetic(spec.clone()),
    })
}

fn pd_error(e: CoreError) -> BundleError {
    match e {
        CoreError::DimensionMismatch(m) => BundleError::DimensionMismatch(m),
        _ => BundleError::NotPositiveDefinite,
    }
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let content = line.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some((i + 1, content))
    })
}

fn read_text(path: &Path) -> Result<String, BundleError> {
    std::fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_cell(path: &Path, line: usize, column: usize, cell: &str) -> Result<f64, BundleError> {
    let cell = cell.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(BundleError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: format!("non-finite value {cell:?}"),
        }),
        Err(_) => Err(BundleError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: format!("cannot parse {cell:?} as a real number"),
        }),
    }
}

/// Comma-separated rows of reals; `#` starts a comment.
pub fn parse_rows(path: &Path, text: &str) -> Result<Vec<Vec<f64>>, BundleError> {
    data_lines(text)
        .map(|(line, content)| {
            content
                .split(',')
                .enumerate()
                .map(|(c, cell)| parse_cell(path, line, c + 1, cell))
                .collect()
        })
        .collect()
}

pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, BundleError> {
    parse_rows(path, &read_text(path)?)
}

/// Rows that must all have `width` entries; `width = None` takes the first row's.
pub fn read_table(path: &Path, width: Option<usize>) -> Result<Vec<Vec<f64>>, BundleError> {
    let text = read_text(path)?;
    let rows = parse_rows(path, &text)?;
    let expected = width.or_else(|| rows.first().map(Vec::len));
    for ((line, _), row) in data_lines(&text).zip(&rows) {
        if Some(row.len()) != expected {
            return Err(BundleError::Parse {
                path: path.to_path_buf(),
                line,
                column: row.len().min(expected.unwrap_or(0)) + 1,
                message: format!("expected {} values, found {}", expected.unwrap_or(0), row.len()),
            });
        }
    }
    Ok(rows)
}

/// Single-column CSV, one real per line.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, BundleError> {
    let rows = read_table(path, Some(1))?;
    if rows.is_empty() {
        return Err(BundleError::DimensionMismatch(format!("{} holds no values", path.display())));
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

/// `p` lines of `p` comma-separated reals. Slight asymmetry is averaged
/// away; larger asymmetry is an error.
pub fn read_covariance(path: &Path, p: usize) -> Result<SymmetricPd<f64>, BundleError> {
    let rows = read_table(path, Some(p))?;
    if rows.len() != p {
        return Err(BundleError::DimensionMismatch(format!(
            "{} has {} rows, expected {p}",
            path.display(),
            rows.len()
        )));
    }
    let m = Matrix::from_rows(&rows).map_err(pd_error)?;
    let asymmetry = m.asymmetry();
    if asymmetry > ASYMMETRY_TOLERANCE {
        return Err(BundleError::Asymmetry {
            path: path.to_path_buf(),
            asymmetry,
            tolerance: ASYMMETRY_TOLERANCE,
        });
    }
    SymmetricPd::new(m.symmetrized()).map_err(pd_error)
}
