//! GLR detectors for a known target signature in a background of unknown
//! mean and covariance.
//!
//! With `z̄` and `S` the training mean and scatter, `c = n/(n+1)` and
//! `ỹ = (y − αt)/β`, the log GLR is
//!
//! ```text
//! (n+1)/2 · ln[1 + c (y−z̄)ᵀS⁻¹(y−z̄)] − min_{α,β} { p ln β + (n+1)/2 · ln[1 + c (ỹ−z̄)ᵀS⁻¹(ỹ−z̄)] }
//! ```
//!
//! and is the same for Gaussian and matrix-t backgrounds of any `ν`. The
//! three detectors differ in the feasible set of `(α, β)`:
//!
//! * Kelly (additive, `β = 1`): linear least squares in `α`.
//! * ACUTE (replacement, `β = 1 − α`): with `x = 1/β` the stationarity
//!   condition is `cE(n+1−p)x² + cF(n+1−2p)x − p(1+cG) = 0`, where
//!   `E, F, G` are the `S⁻¹` inner products of `y−t` and `t−z̄`.
//! * SPADE (mixed, `β` free): `α` is profiled out by projecting the
//!   whitened data off `S^{-1/2}t`; with `u, v` the projected `y, z̄` the
//!   condition is `c‖u‖²(n+1−p)x² − c(u·v)(n+1−2p)x − p(1+c‖v‖²) = 0`.
//!
//! Both quadratics have a positive leading coefficient and a negative
//! constant term, so exactly one root is positive.

use crate::distributions::{profile_log_likelihood, Family, JointSample, ModelKind};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricPd};
use crate::optimize;
use crate::scalar::Real;

/// Training-set statistics shared by every pixel tested against it.
#[derive(Debug, Clone)]
pub struct TrainingSummary<T> {
    pub zbar: Vec<T>,
    pub scatter: SymmetricPd<T>,
    pub s_inv: Matrix<T>,
    pub s_inv_sqrt: Matrix<T>,
    pub n: usize,
    pub p: usize,
}

impl<T: Real> TrainingSummary<T> {
    /// `n / (n+1)`.
    pub fn shrink(&self) -> T {
        T::of_usize(self.n) / T::of_usize(self.n + 1)
    }

    /// `aᵀ S⁻¹ b`.
    pub fn inner(&self, a: &[T], b: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.p {
            acc = acc + a[i] * linalg::dot(self.s_inv.row(i), b);
        }
        acc
    }

    fn whiten(&self, x: &[T]) -> Vec<T> {
        (0..self.p).map(|i| linalg::dot(self.s_inv_sqrt.row(i), x)).collect()
    }

    fn check_len(&self, v: &[T], what: &str) -> Result<()> {
        if v.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "{what} has length {}, expected {}",
                v.len(),
                self.p
            )));
        }
        Ok(())
    }

    /// `tᵀS⁻¹t`, rejecting signatures with no energy.
    fn target_energy(&self, t: &[T]) -> Result<T> {
        self.check_len(t, "target")?;
        if !(linalg::norm_sq(t).sqrt() >= T::tiny()) {
            return Err(Error::ZeroVector);
        }
        let energy = self.inner(t, t);
        if !(energy >= T::min_positive_value()) || !energy.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(energy)
    }
}

/// Computes `z̄`, `S`, `S⁻¹` and `S^{-1/2}` for a `p × n` training matrix.
pub fn summarize<T: Real>(z: &Matrix<T>) -> Result<TrainingSummary<T>> {
    let (p, n) = (z.nrows(), z.ncols());
    if n <= p {
        return Err(Error::Domain(format!(
            "need more training samples than bands (n = {n}, p = {p})"
        )));
    }
    let (zbar, scatter) = linalg::scatter(z)?;
    let s_inv = scatter.inverse();
    let s_inv_sqrt = scatter.inv_sqrt()?;
    Ok(TrainingSummary {
        zbar,
        scatter,
        s_inv,
        s_inv_sqrt,
        n,
        p,
    })
}

/// Detector identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Kelly,
    Acute,
    Spade,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Kelly, DetectorKind::Acute, DetectorKind::Spade];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Kelly => "kelly",
            DetectorKind::Acute => "acute",
            DetectorKind::Spade => "spade",
        }
    }

    /// Background model the detector is the GLRT for.
    pub fn model(self) -> ModelKind {
        match self {
            DetectorKind::Kelly => ModelKind::Additive,
            DetectorKind::Acute => ModelKind::Replacement,
            DetectorKind::Spade => ModelKind::Mixed,
        }
    }

    pub fn run<T: Real>(self, ts: &TrainingSummary<T>, y: &[T], t: &[T]) -> Result<DetectionOutcome<T>> {
        match self {
            DetectorKind::Kelly => kelly(ts, y, t),
            DetectorKind::Acute => acute(ts, y, t),
            DetectorKind::Spade => spade(ts, y, t),
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "kelly" => Ok(DetectorKind::Kelly),
            "acute" => Ok(DetectorKind::Acute),
            "spade" => Ok(DetectorKind::Spade),
            other => Err(format!("unknown detector '{other}'")),
        }
    }
}

/// Detector output.
///
/// `log_glr` is `(2/(n+1))·ln GLR` for every detector. `statistic` is the
/// value thresholded in practice: equal to `log_glr` for ACUTE and SPADE,
/// and the bounded form `1 − GLR^{-2/(n+1)} ∈ [0, 1)` for Kelly. Both are
/// monotone in the GLR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutcome<T> {
    pub statistic: T,
    pub log_glr: T,
    pub alpha_hat: T,
    pub beta_hat: T,
}

/// `p ln β + (n+1)/2 · ln[1 + c (ỹ−z̄)ᵀS⁻¹(ỹ−z̄)]` with `ỹ = (y − αt)/β`.
/// `+∞` for `β ≤ 0`.
pub fn glr_objective<T: Real>(ts: &TrainingSummary<T>, y: &[T], t: &[T], alpha: T, beta: T) -> T {
    if !(beta > T::zero()) {
        return T::infinity();
    }
    let r: Vec<T> = (0..ts.p)
        .map(|i| (y[i] - alpha * t[i]) / beta - ts.zbar[i])
        .collect();
    let q = ts.inner(&r, &r);
    T::of_usize(ts.p) * beta.ln() + T::of((ts.n + 1) as f64 / 2.0) * (ts.shrink() * q).ln_1p()
}

/// The H0 term of the GLR: [`glr_objective`] at `α = 0, β = 1`.
pub fn glr_numerator<T: Real>(ts: &TrainingSummary<T>, y: &[T]) -> T {
    let d = linalg::sub(y, &ts.zbar);
    T::of((ts.n + 1) as f64 / 2.0) * (ts.shrink() * ts.inner(&d, &d)).ln_1p()
}

/// Converts `numerator − min objective` into `(2/(n+1))·ln GLR`.
fn normalize<T: Real>(ts: &TrainingSummary<T>, log_ratio: T) -> T {
    T::of(2.0 / (ts.n + 1) as f64) * log_ratio
}

/// Generalized Kelly detector (additive model).
pub fn kelly<T: Real>(ts: &TrainingSummary<T>, y: &[T], t: &[T]) -> Result<DetectionOutcome<T>> {
    let energy = ts.target_energy(t)?;
    ts.check_len(y, "pixel")?;
    let c = ts.shrink();
    let d = linalg::sub(y, &ts.zbar);
    let proj = ts.inner(&d, t);
    let q0 = ts.inner(&d, &d);
    let statistic = c * proj * proj / ((T::one() + c * q0) * energy);
    Ok(DetectionOutcome {
        statistic,
        log_glr: -(-statistic).ln_1p(),
        alpha_hat: proj / energy,
        beta_hat: T::one(),
    })
}

/// `−p ln x + (n+1)/2 · ln(1 + c(q2 x² + 2 q1 x + q0))` and the coefficients
/// of its stationarity quadratic `A x² + B x − C = 0`.
struct InverseScaleProblem<T> {
    q2: T,
    q1: T,
    q0: T,
    p: T,
    half_m: T,
    c: T,
}

impl<T: Real> InverseScaleProblem<T> {
    fn new(ts: &TrainingSummary<T>, q2: T, q1: T, q0: T) -> Self {
        Self {
            q2,
            q1,
            q0,
            p: T::of_usize(ts.p),
            half_m: T::of((ts.n + 1) as f64 / 2.0),
            c: ts.shrink(),
        }
    }

    fn objective(&self, x: T) -> T {
        self.objective_with(x, (self.q2 * x + T::of(2.0) * self.q1) * x + self.q0)
    }

    /// Objective with the quadratic supplied by the caller. The expanded
    /// form cancels badly when the optimal residual is small, so the final
    /// value is taken from the residual vector itself.
    fn objective_with(&self, x: T, quad: T) -> T {
        -self.p * x.ln() + self.half_m * (self.c * quad.max(T::zero())).ln_1p()
    }

    fn coefficients(&self) -> (T, T, T) {
        let m = T::of(2.0) * self.half_m;
        (
            self.c * self.q2 * (m - self.p),
            self.c * self.q1 * (m - T::of(2.0) * self.p),
            self.p * (T::one() + self.c * self.q0),
        )
    }

    /// Root of the stationarity quadratic, checked against its residual;
    /// bracketed golden search on `ln x` when the check fails.
    fn solve(&self) -> Result<T> {
        let (a, b, c) = self.coefficients();
        if let Some(x) = optimize::positive_root(a, b, c) {
            let residual = (a * x + b) * x - c;
            let scale = (a * x * x).abs() + (b * x).abs() + c.abs();
            if residual.abs() <= T::of(1e-8).max(T::epsilon() * T::of(64.0)) * scale {
                return Ok(x);
            }
        }
        self.solve_bracketed()
    }

    fn solve_bracketed(&self) -> Result<T> {
        let m = optimize::minimize_unbounded(|s: T| self.objective(s.exp()), T::zero(), T::of(0.5))?;
        Ok(m.x.exp())
    }
}

fn infinite_outcome<T: Real>(alpha_hat: T, beta_hat: T) -> DetectionOutcome<T> {
    DetectionOutcome {
        statistic: T::infinity(),
        log_glr: T::infinity(),
        alpha_hat,
        beta_hat,
    }
}

/// ACUTE: GLRT for the replacement model `β = 1 − α`, `α < 1`.
///
/// A pixel lying exactly on the target (`y = t`) makes the GLR unbounded;
/// the outcome is then `+∞` with `α̂ = 1`, `β̂ = 0`.
pub fn acute<T: Real>(ts: &TrainingSummary<T>, y: &[T], t: &[T]) -> Result<DetectionOutcome<T>> {
    ts.target_energy(t)?;
    ts.check_len(y, "pixel")?;
    let e = linalg::sub(y, t);
    let f = linalg::sub(t, &ts.zbar);
    let e2 = ts.inner(&e, &e);
    if !(e2 > T::min_positive_value()) {
        return Ok(infinite_outcome(T::one(), T::zero()));
    }
    let problem = InverseScaleProblem::new(ts, e2, ts.inner(&e, &f), ts.inner(&f, &f));
    let x = problem.solve()?;
    let r = linalg::add_scaled(&f, x, &e);
    let log_ratio = glr_numerator(ts, y) - problem.objective_with(x, ts.inner(&r, &r));
    let log_glr = normalize(ts, log_ratio);
    Ok(DetectionOutcome {
        statistic: log_glr,
        log_glr,
        alpha_hat: T::one() - x.recip(),
        beta_hat: x.recip(),
    })
}

/// SPADE: GLRT for the mixed model with free `β > 0`.
///
/// If the whitened pixel lies in the span of the whitened target the GLR is
/// unbounded (`β̂ → 0`); the outcome is then `+∞` with `β̂ = 0`.
pub fn spade<T: Real>(ts: &TrainingSummary<T>, y: &[T], t: &[T]) -> Result<DetectionOutcome<T>> {
    let energy = ts.target_energy(t)?;
    ts.check_len(y, "pixel")?;
    let wt = ts.whiten(t);
    let proj = linalg::unit_orth_projector(&wt)?;
    let u = proj.mul_vec(&ts.whiten(y))?;
    let v = proj.mul_vec(&ts.whiten(&ts.zbar))?;
    let a = linalg::norm_sq(&u);
    let alpha_at = |beta: T| ts.inner(t, &linalg::add_scaled(y, -beta, &ts.zbar)) / energy;
    if !(a > T::min_positive_value()) {
        return Ok(infinite_outcome(alpha_at(T::zero()), T::zero()));
    }
    let problem = InverseScaleProblem::new(ts, a, -linalg::dot(&u, &v), linalg::norm_sq(&v));
    let x = problem.solve()?;
    let beta_hat = x.recip();
    let w = linalg::add_scaled(&v, -x, &u);
    let log_glr = normalize(ts, glr_numerator(ts, y) - problem.objective_with(x, linalg::norm_sq(&w)));
    Ok(DetectionOutcome {
        statistic: log_glr,
        log_glr,
        alpha_hat: alpha_at(beta_hat),
        beta_hat,
    })
}

/// Nuisance set over which the profile route maximizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nuisance<T> {
    Model(ModelKind),
    /// A single `(α, β)` point.
    Fixed { alpha: T, beta: T },
}

/// `(2/(n+1))·ln GLR` computed from the concentrated likelihoods
/// themselves: the H1 profile log-likelihood is maximized numerically over
/// the nuisance set and the H0 profile (`α = 0, β = 1`) is subtracted.
///
/// Independent of the closed forms above, and slow; used to cross-check them.
pub fn profile_log_glr<T: Real>(sample: &JointSample<T>, t: &[T], nuisance: Nuisance<T>, family: Family) -> Result<T> {
    let n = sample.n();
    let null = profile_log_likelihood(sample, t, T::zero(), T::one(), family)?;
    let pll = |alpha: T, beta: T| -> T {
        profile_log_likelihood(sample, t, alpha, beta, family).unwrap_or(T::neg_infinity())
    };
    let best = match nuisance {
        Nuisance::Fixed { alpha, beta } => profile_log_likelihood(sample, t, alpha, beta, family)?,
        Nuisance::Model(ModelKind::Additive) => {
            -optimize::minimize_unbounded(|a| -pll(a, T::one()), T::zero(), T::of(0.25))?.value
        }
        Nuisance::Model(ModelKind::Replacement) => {
            // β = e^{-s}, α = 1 − β, s ∈ ℝ.
            -optimize::minimize_unbounded(
                |s: T| {
                    let beta = (-s).exp();
                    -pll(T::one() - beta, beta)
                },
                T::zero(),
                T::of(0.25),
            )?
            .value
        }
        Nuisance::Model(ModelKind::Mixed) => {
            let mut failure = None;
            let mut inner = |s: T| -> T {
                let beta = s.exp();
                match optimize::minimize_unbounded(|a| -pll(a, beta), T::zero(), T::of(0.25)) {
                    Ok(m) => m.value,
                    Err(e) => {
                        failure = Some(e);
                        T::infinity()
                    }
                }
            };
            let outer = optimize::minimize_unbounded(&mut inner, T::zero(), T::of(0.25))?;
            if let Some(e) = failure {
                return Err(e);
            }
            -outer.value
        }
    };
    Ok(T::of(2.0 / (n + 1) as f64) * (best - null))
}

/// GLR under a Gaussian background, from the concentrated Gaussian
/// likelihoods.
pub fn gaussian_glr<T: Real>(sample: &JointSample<T>, t: &[T], nuisance: Nuisance<T>) -> Result<T> {
    let half_m = T::of((sample.n() + 1) as f64 / 2.0);
    Ok((half_m * profile_log_glr(sample, t, nuisance, Family::Gaussian)?).exp())
}
