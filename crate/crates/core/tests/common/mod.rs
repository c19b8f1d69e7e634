//! Random instances shared by the integration tests.
#![allow(dead_code)]

use hsd_core::linalg::Matrix;
use hsd_core::{summarize, SymmetricPd, TrainingSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-ish orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
pub fn orthogonal(rng: &mut impl Rng, p: usize) -> Matrix<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    while cols.len() < p {
        let mut v = normal_vec(rng, p);
        for c in &cols {
            let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= d * ci;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_columns(&cols).unwrap()
}

/// SPD matrix `Q diag(λ) Qᵀ` with log-uniform eigenvalues and the given
/// condition number.
pub fn spd_with_condition(rng: &mut impl Rng, p: usize, condition: f64) -> SymmetricPd<f64> {
    let q = orthogonal(rng, p);
    let eig: Vec<f64> = (0..p)
        .map(|i| {
            let s = if p == 1 { 0.0 } else { i as f64 / (p - 1) as f64 };
            condition.powf(s)
        })
        .collect();
    let d = Matrix::from_diagonal(&eig);
    let a = q.matmul(&d).unwrap().matmul(&q.transpose()).unwrap();
    SymmetricPd::new(a.symmetrized()).unwrap()
}

/// Well-conditioned random SPD matrix `AAᵀ/p + I/2`.
pub fn random_spd(rng: &mut impl Rng, p: usize) -> SymmetricPd<f64> {
    let a = normal_matrix(rng, p, p);
    let m = a.gram().scale(1.0 / p as f64).add(&Matrix::identity(p).scale(0.5)).unwrap();
    SymmetricPd::new(m).unwrap()
}

/// Random detection problem: training matrix, its summary, pixel and target.
pub struct Instance {
    pub z: Matrix<f64>,
    pub ts: TrainingSummary<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
}

/// Draws `Z` with a random mean and correlation, a target of random norm,
/// and a pixel `y = αt + βz₀` with random `α`, `β`.
pub fn instance(rng: &mut impl Rng, p: usize, n: usize) -> Instance {
    let mix = normal_matrix(rng, p, p).add(&Matrix::identity(p).scale(1.5)).unwrap();
    let mu = normal_vec(rng, p);
    let draw = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        let g: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        mix.mul_vec(&g).unwrap().iter().zip(&mu).map(|(a, b)| a + b).collect()
    };
    let cols: Vec<Vec<f64>> = (0..n).map(|_| draw(rng)).collect();
    let z = Matrix::from_columns(&cols).unwrap();
    let ts = summarize(&z).unwrap();
    let t: Vec<f64> = normal_vec(rng, p).iter().map(|v| v * rng.random_range(0.3..3.0)).collect();
    let alpha = rng.random_range(-0.5..1.5);
    let beta = rng.random_range(0.3..1.5);
    let z0 = draw(rng);
    let y = (0..p).map(|i| alpha * t[i] + beta * z0[i]).collect();
    Instance { z, ts, y, t }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Golden-section minimum of a unimodal `f` on `[lo, hi]`, written
/// independently of the library optimizer.
pub fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iterations: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Dense grid on `[lo, hi]` followed by golden refinement around the best
/// grid point.
pub fn grid_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let step = (hi - lo) / (points - 1) as f64;
    let (best, _) = (0..points)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let a = lo + step * best.saturating_sub(1) as f64;
    let b = (lo + step * (best + 1) as f64).min(hi);
    golden(f, a, b, 200)
}

/// GLR objective `p ln β + (n+1)/2 · ln[1 + c q]` evaluated with a Cholesky
/// solve, independent of the cached inverse used by the detectors.
pub fn objective(ts: &TrainingSummary<f64>, y: &[f64], t: &[f64], alpha: f64, beta: f64) -> f64 {
    if beta <= 0.0 {
        return f64::INFINITY;
    }
    let r: Vec<f64> = (0..ts.p).map(|i| (y[i] - alpha * t[i]) / beta - ts.zbar[i]).collect();
    let q = ts.scatter.inv_quad_form(&r);
    let (n, p) = (ts.n as f64, ts.p as f64);
    p * beta.ln() + (n + 1.0) / 2.0 * (1.0 + n / (n + 1.0) * q).ln()
}

/// Minimum objective implied by a reported `(2/(n+1))·ln GLR`.
pub fn implied_min(ts: &TrainingSummary<f64>, y: &[f64], log_glr: f64) -> f64 {
    objective(ts, y, &vec![0.0; ts.p], 0.0, 1.0) - (ts.n + 1) as f64 / 2.0 * log_glr
}

/// Weighted least-squares amplitude at fixed `β`.
pub fn ls_alpha(ts: &TrainingSummary<f64>, y: &[f64], t: &[f64], beta: f64) -> f64 {
    let st = ts.scatter.solve(t);
    let r: Vec<f64> = (0..ts.p).map(|i| y[i] - beta * ts.zbar[i]).collect();
    st.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / st.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()
}

pub fn kelly_oracle(ts: &TrainingSummary<f64>, y: &[f64], t: &[f64]) -> (f64, f64) {
    let centre = ls_alpha(ts, y, t, 1.0);
    grid_then_golden(|a| objective(ts, y, t, a, 1.0), centre - 50.0, centre + 50.0, 2001)
}

/// `(α̂, min)` over `s = ln β` with `α = 1 − β`.
pub fn acute_oracle(ts: &TrainingSummary<f64>, y: &[f64], t: &[f64]) -> (f64, f64) {
    let (s, v) = grid_then_golden(|s| objective(ts, y, t, 1.0 - s.exp(), s.exp()), -14.0, 14.0, 4001);
    (1.0 - s.exp(), v)
}

/// `(β̂, min)` over `s = ln β` with `α` profiled by least squares.
pub fn spade_oracle(ts: &TrainingSummary<f64>, y: &[f64], t: &[f64]) -> (f64, f64) {
    let h = |s: f64| {
        let b = s.exp();
        objective(ts, y, t, ls_alpha(ts, y, t, b), b)
    };
    let (s, v) = grid_then_golden(h, -14.0, 14.0, 4001);
    (s.exp(), v)
}

/// `[x Z]`, the pixel prepended to the training columns.
pub fn augmented(x: &[f64], z: &Matrix<f64>) -> Matrix<f64> {
    let mut cols = vec![x.to_vec()];
    cols.extend((0..z.ncols()).map(|j| z.column(j)));
    Matrix::from_columns(&cols).unwrap()
}

fn centred_spread(xz: &Matrix<f64>) -> Matrix<f64> {
    let m = xz.ncols();
    xz.matmul(&hsd_core::linalg::centering_projector(m))
        .unwrap()
        .matmul(&xz.transpose())
        .unwrap()
}

/// Largest entry of `(n+1)(μ − m)(μ − m)ᵀ + [x Z]P⊥[x Z]ᵀ − [x−μ, Z−μ1ᵀ][·]ᵀ`
/// relative to the largest entry of either side, `m` being the mean of `[x Z]`.
pub fn decomposition_gap(x: &[f64], z: &Matrix<f64>, mu: &[f64]) -> f64 {
    let p = x.len();
    let xz = augmented(x, z);
    let m = xz.ncols() as f64;
    let mean = hsd_core::linalg::column_mean(&xz);
    let shift: Vec<f64> = mu.iter().zip(&mean).map(|(a, b)| a - b).collect();
    let outer = Matrix::from_fn(p, p, |i, j| m * shift[i] * shift[j]);
    let lhs = outer.add(&centred_spread(&xz)).unwrap();
    let rhs = Matrix::from_fn(p, xz.ncols(), |i, j| xz[(i, j)] - mu[i]).gram();
    lhs.sub(&rhs).unwrap().max_abs() / lhs.max_abs().max(rhs.max_abs())
}

/// Relative gap between `det([x Z]P⊥[x Z]ᵀ)` and
/// `det(S)·[1 + n/(n+1) (x−z̄)ᵀS⁻¹(x−z̄)]`.
pub fn partitioned_det_gap(x: &[f64], z: &Matrix<f64>) -> f64 {
    let n = z.ncols();
    let lhs = SymmetricPd::new(centred_spread(&augmented(x, z)).symmetrized()).unwrap();
    let (zbar, s) = hsd_core::linalg::scatter(z).unwrap();
    let d: Vec<f64> = x.iter().zip(&zbar).map(|(a, b)| a - b).collect();
    let factor = 1.0 + n as f64 / (n + 1) as f64 * s.inv_quad_form(&d);
    ((lhs.logdet() - s.logdet() - factor.ln()).exp() - 1.0).abs()
}
