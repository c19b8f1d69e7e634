//! Monte-Carlo harness: trial engine, empirical threshold calibration, ROC
//! curves and false-alarm-gain sweeps over the background scaling `β`.
//!
//! Every trial draws from its own stream (see [`crate::rng`]) and results
//! are merged by trial index, so output does not depend on the number of
//! worker threads. Confidence intervals are 95% Wilson score intervals.

use rayon::prelude::*;

use crate::detectors::{summarize, DetectorKind};
use crate::distributions::{BackgroundModel, Hypothesis, JointSampler, ModelKind, Scenario};
use crate::error::{Error, Result};
use crate::rng::{tags, trial_rng};
use crate::scalar::Real;

/// Normal quantile used for every interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatingPoint {
    /// Threshold set on H0 samples for this false-alarm probability.
    FixedPfa(f64),
    /// Threshold set on H1 samples for this detection probability.
    FixedPd(f64),
}

impl OperatingPoint {
    pub fn level(self) -> f64 {
        match self {
            OperatingPoint::FixedPfa(v) | OperatingPoint::FixedPd(v) => v,
        }
    }
}

/// Everything a Monte-Carlo run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: BackgroundModel<f64>,
    pub n: usize,
    pub t: Vec<f64>,
    /// Target amplitude under H1.
    pub alpha: f64,
    /// Model generating H1 data for ROC runs.
    pub truth: ModelKind,
    /// `β` under a mixed truth; ignored otherwise.
    pub beta: f64,
    /// `β` values of the false-alarm-gain sweep.
    pub beta_grid: Vec<f64>,
    pub trials_h0: usize,
    pub trials_h1: usize,
    pub seed: u64,
    pub operating_point: OperatingPoint,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn p(&self) -> usize {
        self.model.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.family.validate()?;
        if self.t.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "target of length {} for p = {}",
                self.t.len(),
                self.p()
            )));
        }
        if self.n <= self.p() {
            return Err(Error::Domain(format!("n = {} must exceed p = {}", self.n, self.p())));
        }
        if self.trials_h0 == 0 || self.trials_h1 == 0 {
            return Err(Error::Domain("trial counts must be at least 1".into()));
        }
        if let Some(b) = self.beta_grid.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(Error::Domain(format!("beta_grid entries must be positive, got {b}")));
        }
        let level = self.operating_point.level();
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!("operating point must lie in (0, 1), got {level}")));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("threads must be at least 1".into()));
        }
        self.h1_scenario().validate()
    }

    /// H1 scenario of the ROC experiment.
    pub fn h1_scenario(&self) -> Scenario<f64> {
        self.scenario_with_beta(match self.truth {
            ModelKind::Additive => 1.0,
            ModelKind::Replacement => 1.0 - self.alpha,
            ModelKind::Mixed => self.beta,
        })
    }

    fn scenario_with_beta(&self, beta: f64) -> Scenario<f64> {
        let t = self.t.clone();
        match self.truth {
            ModelKind::Additive => Scenario::additive(t, self.alpha),
            ModelKind::Replacement => Scenario::replacement(t, self.alpha),
            ModelKind::Mixed => Scenario::mixed(t, self.alpha, beta),
        }
    }

    pub fn sampler(&self) -> Result<JointSampler<f64>> {
        JointSampler::new(self.model.clone(), self.n)
    }

    /// Statistics of a single detector under one hypothesis of the ROC
    /// experiment.
    pub fn run_trials(&self, hypothesis: Hypothesis, detector: DetectorKind) -> Result<Vec<f64>> {
        let (scenario, tag, trials) = match hypothesis {
            Hypothesis::H0 => (Scenario::null(self.t.clone()), tags::H0, self.trials_h0),
            Hypothesis::H1 => (self.h1_scenario(), tags::H1, self.trials_h1),
        };
        let stats = run_trials(&self.sampler()?, &scenario, &[detector], trials, self.seed, tag, self.threads)?;
        Ok(stats.into_iter().next().unwrap_or_default())
    }
}

/// Runs `trials` independent draws and evaluates each detector on them.
/// Returns one vector of statistics per detector, ordered by trial index.
pub fn run_trials<T: Real>(
    sampler: &JointSampler<T>,
    scenario: &Scenario<T>,
    detectors: &[DetectorKind],
    trials: usize,
    seed: u64,
    tag: u64,
    threads: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    scenario.validate()?;
    let one = |index: usize| -> Result<Vec<f64>> {
        let mut rng = trial_rng(seed, tag, index as u64);
        let wrap = |e: Error| Error::Trial {
            index,
            source: Box::new(e),
        };
        let sample = sampler.draw(scenario, &mut rng).map_err(wrap)?;
        let ts = summarize(&sample.z).map_err(wrap)?;
        detectors
            .iter()
            .map(|d| d.run(&ts, &sample.y, &scenario.t).map(|o| o.statistic.as_f64()).map_err(wrap))
            .collect()
    };
    let rows: Vec<Vec<f64>> = with_pool(threads, || {
        (0..trials).into_par_iter().map(one).collect::<Result<Vec<_>>>()
    })??;
    let mut out = vec![Vec::with_capacity(trials); detectors.len()];
    for row in rows {
        for (col, v) in out.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Ok(out)
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn sorted(stats: &[f64]) -> Result<Vec<f64>> {
    if stats.is_empty() {
        return Err(Error::EmptyInput);
    }
    if stats.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("statistic sample contains NaN".into()));
    }
    let mut s = stats.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Threshold `τ` whose exceedance fraction `#{s > τ}/N` is `level`.
///
/// With `k = round(level·N)` exceedances wanted, `τ` is the midpoint of the
/// `(N−k)`-th and `(N−k+1)`-th order statistics. For a fixed-P_fa design
/// `level` is the false-alarm probability and `stats` come from H0; for a
/// fixed-P_d design `level` is the detection probability and `stats` come
/// from H1.
pub fn empirical_quantile_threshold(stats: &[f64], level: f64) -> Result<f64> {
    threshold_sorted(&sorted(stats)?, level)
}

fn threshold_sorted(s: &[f64], level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    let n = s.len();
    let k = ((level * n as f64).round() as usize).min(n);
    Ok(match k {
        0 => s[n - 1],
        k if k == n => f64::NEG_INFINITY,
        k => 0.5 * (s[n - k - 1] + s[n - k]),
    })
}

/// `#{s > τ}` on an ascending sample.
fn exceedances(sorted: &[f64], threshold: f64) -> usize {
    sorted.len() - sorted.partition_point(|&v| v <= threshold)
}

/// Wilson score interval for `k` successes in `n` trials: `(centre, half-width)`.
pub fn wilson(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.5, 0.5);
    }
    let (kf, nf) = (k as f64, n as f64);
    let phat = kf / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let centre = (phat + z2 / (2.0 * nf)) / denom;
    let half = Z_95 / denom * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (centre, half)
}

/// Whether two Wilson intervals are disjoint with `hi` above `lo`.
pub fn above_beyond_ci(hi: (usize, usize), lo: (usize, usize)) -> bool {
    let (ch, hh) = wilson(hi.0, hi.1);
    let (cl, hl) = wilson(lo.0, lo.1);
    ch - hh > cl + hl
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Decisions are `statistic ≥ threshold`.
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
    /// Wilson half-width of `pd`.
    pub pd_half_width: f64,
}

#[derive(Debug, Clone)]
pub struct RocCurve {
    pub detector: DetectorKind,
    /// Ordered by increasing `pfa` (decreasing threshold), from `(0, 0)` to `(1, 1)`.
    pub points: Vec<RocPoint>,
    pub trials_h0: usize,
    pub trials_h1: usize,
}

impl RocCurve {
    /// Largest `pd` reached at a false-alarm rate not above `pfa`.
    pub fn pd_at(&self, pfa: f64) -> f64 {
        self.points
            .iter()
            .take_while(|pt| pt.pfa <= pfa)
            .last()
            .map_or(0.0, |pt| pt.pd)
    }
}

/// Empirical ROC over every distinct value of the pooled samples.
pub fn roc_from_samples(detector: DetectorKind, h0: &[f64], h1: &[f64]) -> Result<RocCurve> {
    let mut s0 = sorted(h0)?;
    let mut s1 = sorted(h1)?;
    s0.reverse();
    s1.reverse();
    let (n0, n1) = (s0.len(), s1.len());
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        pfa: 0.0,
        pd: 0.0,
        pd_half_width: wilson(0, n1).1,
    }];
    let (mut i, mut j) = (0, 0);
    while i < n0 || j < n1 {
        let next0 = s0.get(i).copied().unwrap_or(f64::NEG_INFINITY);
        let next1 = s1.get(j).copied().unwrap_or(f64::NEG_INFINITY);
        let tau = next0.max(next1);
        while i < n0 && s0[i] >= tau {
            i += 1;
        }
        while j < n1 && s1[j] >= tau {
            j += 1;
        }
        points.push(RocPoint {
            threshold: tau,
            pfa: i as f64 / n0 as f64,
            pd: j as f64 / n1 as f64,
            pd_half_width: wilson(j, n1).1,
        });
    }
    Ok(RocCurve {
        detector,
        points,
        trials_h0: n0,
        trials_h1: n1,
    })
}

/// ROC curves of all three detectors, evaluated on shared draws.
pub fn roc_all(config: &ExperimentConfig) -> Result<Vec<RocCurve>> {
    config.validate()?;
    let sampler = config.sampler()?;
    let dets = DetectorKind::ALL;
    let h0 = run_trials(
        &sampler,
        &Scenario::null(config.t.clone()),
        &dets,
        config.trials_h0,
        config.seed,
        tags::H0,
        config.threads,
    )?;
    let h1 = run_trials(
        &sampler,
        &config.h1_scenario(),
        &dets,
        config.trials_h1,
        config.seed,
        tags::H1,
        config.threads,
    )?;
    dets.iter()
        .zip(h0.iter().zip(&h1))
        .map(|(&d, (a, b))| roc_from_samples(d, a, b))
        .collect()
}

/// ROC curve of one detector.
pub fn roc(config: &ExperimentConfig, detector: DetectorKind) -> Result<RocCurve> {
    config.validate()?;
    let h0 = config.run_trials(Hypothesis::H0, detector)?;
    let h1 = config.run_trials(Hypothesis::H1, detector)?;
    roc_from_samples(detector, &h0, &h1)
}

/// Detection probability at an H0-calibrated false-alarm level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionAtPfa {
    pub threshold: f64,
    pub pfa: f64,
    pub detections: usize,
    pub trials_h1: usize,
    pub pd: f64,
    pub pd_half_width: f64,
}

pub fn detection_at_pfa(h0: &[f64], h1: &[f64], pfa: f64) -> Result<DetectionAtPfa> {
    let s0 = sorted(h0)?;
    let s1 = sorted(h1)?;
    let threshold = threshold_sorted(&s0, pfa)?;
    let detections = exceedances(&s1, threshold);
    Ok(DetectionAtPfa {
        threshold,
        pfa: exceedances(&s0, threshold) as f64 / s0.len() as f64,
        detections,
        trials_h1: s1.len(),
        pd: detections as f64 / s1.len() as f64,
        pd_half_width: wilson(detections, s1.len()).1,
    })
}

/// False-alarm estimate of one detector at a fixed-P_d threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfaEstimate {
    pub detector: DetectorKind,
    pub threshold: f64,
    pub pfa: f64,
    /// H0 exceedances behind `pfa`.
    pub events: usize,
    pub trials_h0: usize,
    /// Half-width of the interval on `pfa` relative to `pfa`, combining the
    /// binomial error with the error of the H1-calibrated threshold.
    pub rel_half_width: f64,
}

/// Calibrates a threshold on H1 statistics for detection probability `pd`
/// and measures the false-alarm rate on independent H0 statistics.
///
/// The threshold error is propagated by re-calibrating at `pd ± h`, `h`
/// being the Wilson half-width of `pd` at the H1 sample size, and taking
/// half the spread of the resulting false-alarm rates.
pub fn pfa_at_pd(detector: DetectorKind, h0: &[f64], h1: &[f64], pd: f64) -> Result<PfaEstimate> {
    let s0 = sorted(h0)?;
    let s1 = sorted(h1)?;
    let (n0, n1) = (s0.len(), s1.len());
    let threshold = threshold_sorted(&s1, pd)?;
    let events = exceedances(&s0, threshold);
    let pfa = events as f64 / n0 as f64;
    let h = wilson((pd * n1 as f64).round() as usize, n1).1;
    let floor = 0.5 / n1 as f64;
    let loose = threshold_sorted(&s1, (pd + h).min(1.0 - floor))?;
    let tight = threshold_sorted(&s1, (pd - h).max(floor))?;
    let spread = (exceedances(&s0, loose) as f64 - exceedances(&s0, tight) as f64) / n0 as f64 / 2.0;
    let binomial = wilson(events, n0).1;
    let rel_half_width = if events == 0 {
        f64::INFINITY
    } else {
        (binomial * binomial + spread * spread).sqrt() / pfa
    };
    Ok(PfaEstimate {
        detector,
        threshold,
        pfa,
        events,
        trials_h0: n0,
        rel_half_width,
    })
}

/// `10 log10(P_fa(reference) / P_fa(detector))` with its interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub detector: DetectorKind,
    /// `None` when either false-alarm estimate has no events.
    pub gain_db: Option<f64>,
    pub ci_half_width: Option<f64>,
}

const DB_PER_NEPER: f64 = 10.0 / std::f64::consts::LN_10;

/// Interval half-width, in dB, of `10 log10(a/b)` for two estimates.
pub fn ratio_ci_db(a: &PfaEstimate, b: &PfaEstimate) -> Option<f64> {
    (a.events > 0 && b.events > 0).then(|| DB_PER_NEPER * a.rel_half_width.hypot(b.rel_half_width))
}

pub fn gain(reference: &PfaEstimate, other: &PfaEstimate) -> GainEstimate {
    if reference.detector == other.detector {
        return GainEstimate {
            detector: other.detector,
            gain_db: Some(0.0),
            ci_half_width: Some(0.0),
        };
    }
    let ok = reference.events > 0 && other.events > 0;
    GainEstimate {
        detector: other.detector,
        gain_db: ok.then(|| 10.0 * (reference.pfa / other.pfa).log10()),
        ci_half_width: ratio_ci_db(reference, other),
    }
}

/// One `β` of the false-alarm-gain sweep.
#[derive(Debug, Clone)]
pub struct PfaGainPoint {
    pub beta: f64,
    pub pd_target: f64,
    /// Per detector, in [`DetectorKind::ALL`] order.
    pub pfa: Vec<PfaEstimate>,
    /// Gains relative to Kelly, in [`DetectorKind::ALL`] order (Kelly's own is 0).
    pub gains: Vec<GainEstimate>,
}

impl PfaGainPoint {
    /// Set when some detector produced no H0 exceedance at its threshold.
    pub fn flagged(&self) -> bool {
        self.pfa.iter().any(|e| e.events == 0)
    }

    pub fn ensure_events(&self) -> Result<()> {
        match self.pfa.iter().find(|e| e.events == 0) {
            Some(e) => Err(Error::InsufficientTrials(format!(
                "no H0 exceedances for {} at beta = {}",
                e.detector.name(),
                self.beta
            ))),
            None => Ok(()),
        }
    }

    pub fn pfa_of(&self, detector: DetectorKind) -> &PfaEstimate {
        self.pfa
            .iter()
            .find(|e| e.detector == detector)
            .expect("every detector is estimated")
    }

    pub fn gain_of(&self, detector: DetectorKind) -> &GainEstimate {
        self.gains
            .iter()
            .find(|g| g.detector == detector)
            .expect("every detector has a gain")
    }
}

/// False-alarm gain of ACUTE and SPADE over Kelly at fixed detection
/// probability, for each `β` of the grid with H1 data `y = αt + βz`.
///
/// H0 statistics are drawn once and shared by every grid point; each `β`
/// gets its own H1 streams. Zero-event estimates are flagged on the point
/// rather than reported as an error.
pub fn pfa_gain_sweep(config: &ExperimentConfig) -> Result<Vec<PfaGainPoint>> {
    config.validate()?;
    let pd = match config.operating_point {
        OperatingPoint::FixedPd(v) => v,
        OperatingPoint::FixedPfa(_) => {
            return Err(Error::Domain("the gain sweep needs a fixed-P_d operating point".into()))
        }
    };
    if config.beta_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sampler = config.sampler()?;
    let dets = DetectorKind::ALL;
    let h0 = run_trials(
        &sampler,
        &Scenario::null(config.t.clone()),
        &dets,
        config.trials_h0,
        config.seed,
        tags::H0,
        config.threads,
    )?;
    config
        .beta_grid
        .iter()
        .enumerate()
        .map(|(k, &beta)| {
            let scenario = Scenario::mixed(config.t.clone(), config.alpha, beta);
            let h1 = run_trials(
                &sampler,
                &scenario,
                &dets,
                config.trials_h1,
                config.seed,
                tags::h1_sweep(k),
                config.threads,
            )?;
            let pfa = dets
                .iter()
                .zip(h0.iter().zip(&h1))
                .map(|(&d, (a, b))| pfa_at_pd(d, a, b, pd))
                .collect::<Result<Vec<_>>>()?;
            let reference = pfa[0];
            let gains = pfa.iter().map(|e| gain(&reference, e)).collect();
            Ok(PfaGainPoint {
                beta,
                pd_target: pd,
                pfa,
                gains,
            })
        })
        .collect()
}
