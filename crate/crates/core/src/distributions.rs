//! Joint background models for a pixel under test and its training set.
//!
//! The pair `[y, Z]` (one test column plus `n` training columns) follows
//! either a matrix-variate Student t law with column scale `(ν−2)Σ` or a
//! matrix normal law. Under the target hypothesis the test column is
//! transformed as `y = αt + βz₀`, which multiplies its column covariance by
//! `β²` and shifts its mean to `αt + βμ`.
//!
//! The Student sampler is the normal/Wishart mixture
//! `X = M + √(ν−2) Σ^{1/2} W^{-1/2} N` with `W ~ Wishart_p(ν+p−1, I)`.
//! Columns share the mixing matrix `W`, so they are uncorrelated but not
//! independent.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricEigen, SymmetricPd};
use crate::scalar::Real;

/// Distribution family of the background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Matrix-variate t with `nu` degrees of freedom, scaled so that `Σ` is
    /// the column covariance. Requires `nu > 2`.
    Student { nu: f64 },
    Gaussian,
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Student { nu } if !(nu > 2.0) || !nu.is_finite() => Err(Error::Domain(format!(
                "student family needs nu > 2, got {nu}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Mean, covariance and family of the background clutter.
#[derive(Debug, Clone)]
pub struct BackgroundModel<T> {
    pub mu: Vec<T>,
    pub sigma: SymmetricPd<T>,
    pub family: Family,
}

impl<T: Real> BackgroundModel<T> {
    pub fn new(mu: Vec<T>, sigma: SymmetricPd<T>, family: Family) -> Result<Self> {
        family.validate()?;
        if mu.len() != sigma.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean of length {} with a {}x{} covariance",
                mu.len(),
                sigma.dim(),
                sigma.dim()
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("mean has non-finite entries".into()));
        }
        Ok(Self { mu, sigma, family })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Relation between the target amplitude and the background scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `β = 1`.
    Additive,
    /// `β = 1 − α`.
    Replacement,
    /// `β` free.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Target signature plus the parameters of `y = αt + βz` under H1.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub t: Vec<T>,
    pub alpha: T,
    pub beta: T,
    pub model: ModelKind,
    pub hypothesis: Hypothesis,
}

impl<T: Real> Scenario<T> {
    /// Background only. The model tag is irrelevant under H0.
    pub fn null(t: Vec<T>) -> Self {
        Self {
            t,
            alpha: T::zero(),
            beta: T::one(),
            model: ModelKind::Additive,
            hypothesis: Hypothesis::H0,
        }
    }

    pub fn additive(t: Vec<T>, alpha: T) -> Self {
        Self {
            t,
            alpha,
            beta: T::one(),
            model: ModelKind::Additive,
            hypothesis: Hypothesis::H1,
        }
    }

    pub fn replacement(t: Vec<T>, alpha: T) -> Self {
        Self {
            t,
            alpha,
            beta: T::one() - alpha,
            model: ModelKind::Replacement,
            hypothesis: Hypothesis::H1,
        }
    }

    pub fn mixed(t: Vec<T>, alpha: T, beta: T) -> Self {
        Self {
            t,
            alpha,
            beta,
            model: ModelKind::Mixed,
            hypothesis: Hypothesis::H1,
        }
    }

    pub fn with_hypothesis(mut self, hypothesis: Hypothesis) -> Self {
        self.hypothesis = hypothesis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.iter().any(|v| !v.is_finite()) || !self.alpha.is_finite() {
            return Err(Error::Domain("non-finite target or amplitude".into()));
        }
        if !(self.beta > T::zero()) {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        match self.model {
            ModelKind::Additive if self.beta != T::one() => {
                Err(Error::Domain("additive model requires beta = 1".into()))
            }
            ModelKind::Replacement if self.beta != T::one() - self.alpha => {
                Err(Error::Domain("replacement model requires beta = 1 - alpha".into()))
            }
            _ => Ok(()),
        }
    }

    /// `(α, β)` actually in force: `(0, 1)` under H0.
    pub fn effective(&self) -> (T, T) {
        match self.hypothesis {
            Hypothesis::H0 => (T::zero(), T::one()),
            Hypothesis::H1 => (self.alpha, self.beta),
        }
    }
}

/// A test pixel and its `p × n` training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample<T> {
    pub y: Vec<T>,
    pub z: Matrix<T>,
}

impl<T: Real> JointSample<T> {
    pub fn new(y: Vec<T>, z: Matrix<T>) -> Result<Self> {
        if y.len() != z.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "pixel of length {} with {} training rows",
                y.len(),
                z.nrows()
            )));
        }
        Ok(Self { y, z })
    }

    pub fn p(&self) -> usize {
        self.y.len()
    }

    pub fn n(&self) -> usize {
        self.z.ncols()
    }

    /// `[x, Z]` as a `p × (n+1)` matrix.
    fn augmented(&self, x: &[T]) -> Matrix<T> {
        let (p, n) = (self.p(), self.n());
        Matrix::from_fn(p, n + 1, |i, j| if j == 0 { x[i] } else { self.z[(i, j - 1)] })
    }
}

/// `ln Γ_p(a) = p(p−1)/4 · ln π + Σ_{i=1..p} ln Γ(a + (1−i)/2)`.
pub fn multivariate_gamma_log(p: usize, a: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let pf = p as f64;
    if !(a > (pf - 1.0) / 2.0) {
        return Err(Error::Domain(format!("ln Γ_{p}({a}) needs a > {}", (pf - 1.0) / 2.0)));
    }
    let head = pf * (pf - 1.0) / 4.0 * std::f64::consts::PI.ln();
    Ok(head + (1..=p).map(|i| ln_gamma(a + (1.0 - i as f64) / 2.0)).sum::<f64>())
}

/// Log normalizer of the matrix-t density with `m = n+1` columns, column
/// scale `(ν−2)Σ` and unit row scale, excluding the `det Σ` factor.
fn student_log_normalizer(p: usize, n: usize, nu: f64) -> Result<f64> {
    let (pf, m) = (p as f64, (n + 1) as f64);
    Ok(multivariate_gamma_log(p, (nu + m + pf - 1.0) / 2.0)?
        - pf * m / 2.0 * std::f64::consts::PI.ln()
        - multivariate_gamma_log(p, (nu + pf - 1.0) / 2.0)?
        - pf * m / 2.0 * (nu - 2.0).ln())
}

/// Draws joint samples for a fixed background model and training size.
/// Holds `Σ^{1/2}` so repeated draws skip the decomposition.
#[derive(Debug, Clone)]
pub struct JointSampler<T> {
    model: BackgroundModel<T>,
    sigma_sqrt: Matrix<T>,
    n: usize,
}

impl<T: Real> JointSampler<T> {
    pub fn new(model: BackgroundModel<T>, n: usize) -> Result<Self> {
        model.family.validate()?;
        if n <= model.dim() {
            return Err(Error::Domain(format!(
                "need more training samples than bands (n = {n}, p = {})",
                model.dim()
            )));
        }
        let sigma_sqrt = model.sigma.sqrt()?;
        Ok(Self {
            model,
            sigma_sqrt,
            n,
        })
    }

    pub fn model(&self) -> &BackgroundModel<T> {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Symmetric inverse root of a `Wishart_p(df, I)` draw, via Bartlett.
    fn wishart_inv_sqrt<R: Rng + ?Sized>(&self, df: f64, rng: &mut R) -> Result<Matrix<T>> {
        let p = self.model.dim();
        let mut a = Matrix::<T>::zeros(p, p);
        for i in 0..p {
            let chi = ChiSquared::new(df - i as f64).map_err(|e| Error::Domain(e.to_string()))?;
            a[(i, i)] = T::of(chi.sample(rng).sqrt());
            for j in 0..i {
                let g: f64 = rng.sample(StandardNormal);
                a[(i, j)] = T::of(g);
            }
        }
        SymmetricEigen::new(&a.gram()).map_spectrum(|l| T::one() / l.sqrt())
    }

    /// Draws `[z₀, Z]` from the background law, then sets `y = z₀` under H0
    /// and `y = αt + βz₀` under H1.
    pub fn draw<R: Rng + ?Sized>(&self, scenario: &Scenario<T>, rng: &mut R) -> Result<JointSample<T>> {
        scenario.validate()?;
        let p = self.model.dim();
        if scenario.t.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "target of length {} for p = {p}",
                scenario.t.len()
            )));
        }
        let mixing = match self.model.family {
            Family::Student { nu } => {
                let w = self.wishart_inv_sqrt(nu + p as f64 - 1.0, rng)?;
                self.sigma_sqrt.matmul(&w)?.scale(T::of((nu - 2.0).sqrt()))
            }
            Family::Gaussian => self.sigma_sqrt.clone(),
        };
        let m = self.n + 1;
        let mut noise = Matrix::<T>::zeros(p, m);
        for j in 0..m {
            for i in 0..p {
                let g: f64 = rng.sample(StandardNormal);
                noise[(i, j)] = T::of(g);
            }
        }
        let mut x = mixing.matmul(&noise)?;
        for i in 0..p {
            for j in 0..m {
                x[(i, j)] = x[(i, j)] + self.model.mu[i];
            }
        }
        let (alpha, beta) = scenario.effective();
        let y = (0..p).map(|i| alpha * scenario.t[i] + beta * x[(i, 0)]).collect();
        let z = Matrix::from_fn(p, self.n, |i, j| x[(i, j + 1)]);
        Ok(JointSample { y, z })
    }
}

/// One joint draw; see [`JointSampler`] for repeated draws.
pub fn sample_joint<T: Real, R: Rng + ?Sized>(
    model: &BackgroundModel<T>,
    scenario: &Scenario<T>,
    n: usize,
    rng: &mut R,
) -> Result<JointSample<T>> {
    JointSampler::new(model.clone(), n)?.draw(scenario, rng)
}

fn check_dims<T: Real>(sample: &JointSample<T>, t: &[T]) -> Result<()> {
    if sample.y.len() != sample.z.nrows() || t.len() != sample.y.len() {
        return Err(Error::DimensionMismatch(format!(
            "pixel {}, target {}, training rows {}",
            sample.y.len(),
            t.len(),
            sample.z.nrows()
        )));
    }
    Ok(())
}

/// `(y − αt)/β`.
fn unmix<T: Real>(y: &[T], t: &[T], alpha: T, beta: T) -> Vec<T> {
    y.iter().zip(t).map(|(&yi, &ti)| (yi - alpha * ti) / beta).collect()
}

/// Joint log-density of `(y, Z)` under the scenario's hypothesis.
///
/// Returns `−∞` when `β = 0` and an error for `β < 0`.
pub fn log_pdf<T: Real>(sample: &JointSample<T>, model: &BackgroundModel<T>, scenario: &Scenario<T>) -> Result<T> {
    check_dims(sample, &scenario.t)?;
    if model.dim() != sample.p() {
        return Err(Error::DimensionMismatch("model and sample dimensions differ".into()));
    }
    model.family.validate()?;
    let (alpha, beta) = scenario.effective();
    if beta == T::zero() {
        return Ok(T::neg_infinity());
    }
    if !(beta > T::zero()) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let (p, n) = (sample.p(), sample.n());
    let ytilde = unmix(&sample.y, &scenario.t, alpha, beta);
    let mut x = sample.augmented(&ytilde);
    for i in 0..p {
        for j in 0..=n {
            x[(i, j)] = x[(i, j)] - model.mu[i];
        }
    }
    let spread = x.gram();
    let m = T::of_usize(n + 1);
    let pf = T::of_usize(p);
    let half = T::of(0.5);
    let logdet_sigma = model.sigma.logdet();
    let jacobian = pf * beta.ln();
    match model.family {
        Family::Student { nu } => {
            let c = T::of(student_log_normalizer(p, n, nu)?);
            let inflated = model.sigma.matrix().add(&spread.scale(T::of(1.0 / (nu - 2.0))))?;
            let ld = SymmetricPd::new(inflated)?.logdet() - logdet_sigma;
            let expo = T::of((nu + (n + 1 + p) as f64 - 1.0) / 2.0);
            Ok(c - half * m * logdet_sigma - jacobian - expo * ld)
        }
        Family::Gaussian => {
            let two_pi = T::of(2.0 * std::f64::consts::PI);
            let inv = model.sigma.inverse();
            let trace = (0..p)
                .map(|i| linalg::dot(inv.row(i), &spread.column(i)))
                .sum::<T>();
            Ok(-half * pf * m * two_pi.ln() - half * m * logdet_sigma - jacobian - half * trace)
        }
    }
}

/// `ln C′` for the Student family: the density maximized over `Σ`, less
/// the `det(·)^{-(n+1)/2}` data term.
pub fn student_profile_log_constant(p: usize, n: usize, nu: f64) -> Result<f64> {
    let (pf, m) = (p as f64, (n + 1) as f64);
    let gamma = (nu + pf - 1.0) / ((nu - 2.0) * m);
    Ok(student_log_normalizer(p, n, nu)?
        - pf * m / 2.0 * gamma.ln()
        - pf * (nu + m + pf - 1.0) / 2.0 * (1.0 / ((nu - 2.0) * gamma)).ln_1p())
}

/// Gaussian counterpart of [`student_profile_log_constant`].
pub fn gaussian_profile_log_constant(p: usize, n: usize) -> f64 {
    let (pf, m) = (p as f64, (n + 1) as f64);
    -pf * m / 2.0 * (2.0 * std::f64::consts::PI).ln() + pf * m / 2.0 * m.ln() - pf * m / 2.0
}

/// Log-density maximized over `μ` and `Σ` at fixed `(α, β)`:
/// `ln C′ − (n+1)/2 · ln det([ỹ Z] P⊥ [ỹ Z]ᵀ) − p ln β`.
pub fn profile_log_likelihood<T: Real>(
    sample: &JointSample<T>,
    t: &[T],
    alpha: T,
    beta: T,
    family: Family,
) -> Result<T> {
    check_dims(sample, t)?;
    family.validate()?;
    if beta == T::zero() {
        return Ok(T::neg_infinity());
    }
    if !(beta > T::zero()) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let (p, n) = (sample.p(), sample.n());
    let constant = match family {
        Family::Student { nu } => student_profile_log_constant(p, n, nu)?,
        Family::Gaussian => gaussian_profile_log_constant(p, n),
    };
    let ytilde = unmix(&sample.y, t, alpha, beta);
    let (_, spread) = linalg::scatter(&sample.augmented(&ytilde))?;
    Ok(T::of(constant) - T::of((n + 1) as f64 / 2.0) * spread.logdet() - T::of_usize(p) * beta.ln())
}
