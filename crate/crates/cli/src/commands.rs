//! Subcommand implementations. Each returns what it wrote so callers and
//! tests can inspect the result without re-reading files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hsd_core::detectors::{profile_log_glr, summarize, DetectorKind, Nuisance};
use hsd_core::experiments::{pfa_gain_sweep, roc_all, run_trials, PfaGainPoint, RocCurve};
use hsd_core::rng::{tags, trial_rng};
use hsd_core::{Family, Hypothesis, JointSampler, Matrix, Scenario};
use serde_json::json;

use crate::bundle::{read_table, DatasetBundle};
use crate::config::{parse_raw, RawConfig, RunConfig};
use crate::error::{CliError, CliResult, ConfigError};
use crate::output::{
    ensure_dir, fmt_f64, fmt_opt, write_manifest, write_table, OutputRecord, RunManifest, Table, CI_METHOD,
};

/// Stream tag of the synthetic training draw used by `detect`.
pub const DETECT_TAG: u64 = 0x4454;

/// Values substituted by `--paper-operating-point`.
pub const PAPER_P: usize = 32;
pub const PAPER_N: usize = 60;
pub const PAPER_NU: f64 = 5.0;
pub const PAPER_ROC_ALPHA: f64 = 0.05;
pub const PAPER_GAIN_ALPHA: f64 = 0.01;
pub const PAPER_PD: f64 = 0.5;
pub const PAPER_MIN_H0_TRIALS: usize = 1_000_000;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Replace dimensions, `ν`, `α` and the operating point with the
    /// published ones (`α` given here).
    pub paper_alpha: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, raw: &mut RawConfig) {
        if let Some(seed) = self.seed {
            raw.seed = Some(seed);
        }
        if let Some(threads) = self.threads {
            raw.threads = Some(threads);
        }
        if let Some(alpha) = self.paper_alpha {
            if raw.t_source.as_deref().unwrap_or("synthetic") == "synthetic" {
                raw.p = Some(PAPER_P);
            }
            raw.n = Some(PAPER_N);
            raw.family = Some("student".into());
            raw.nu = Some(PAPER_NU);
            raw.alpha = Some(alpha);
            raw.operating_point = Some("fixed_pd".into());
            raw.operating_value = Some(PAPER_PD);
            raw.trials_h0 = Some(raw.trials_h0.unwrap_or(0).max(PAPER_MIN_H0_TRIALS));
        }
    }
}

/// Reads and validates a config file with overrides applied.
pub fn load_config(path: &Path, overrides: &Overrides) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut raw = parse_raw(&text)?;
    overrides.apply(&mut raw);
    Ok(RunConfig::from_raw(raw, path.parent())?)
}

fn manifest(
    command: &str,
    config: &RunConfig,
    bundle: &DatasetBundle,
    started: Instant,
    summaries: serde_json::Value,
    outputs: Vec<OutputRecord>,
) -> RunManifest {
    RunManifest {
        tool: "hsd",
        command: command.to_string(),
        library_version: hsd_core::VERSION,
        master_seed: config.seed,
        threads: config.threads,
        config: serde_json::to_value(&config.raw).unwrap_or_default(),
        bundle: json!({ "p": bundle.p(), "source": serde_json::to_value(&bundle.provenance).unwrap_or_default() }),
        ci_method: CI_METHOD,
        runtime_seconds: started.elapsed().as_secs_f64(),
        summaries,
        outputs,
    }
}

/// Trapezoidal area under a ROC staircase.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].pfa - w[0].pfa) * (w[1].pd + w[0].pd) / 2.0)
        .sum()
}

pub fn roc_table(curve: &RocCurve) -> Table {
    let mut table = Table::new(&["pfa", "pd", "ci_half_width"]);
    for pt in &curve.points {
        table.push(&[fmt_f64(pt.pfa), fmt_f64(pt.pd), fmt_f64(pt.pd_half_width)]);
    }
    table
}

pub fn roc_file_name(detector: DetectorKind) -> String {
    format!("roc_{}.csv", detector.name())
}

pub struct RocRun {
    pub curves: Vec<RocCurve>,
    pub outputs: Vec<OutputRecord>,
    pub manifest: PathBuf,
}

/// ROC curves of the three detectors: `roc_<detector>.csv` plus the manifest.
pub fn cmd_roc(config: &RunConfig, out: &Path) -> CliResult<RocRun> {
    let started = Instant::now();
    let bundle = config.bundle()?;
    let experiment = config.experiment(&bundle)?;
    let curves = roc_all(&experiment)?;
    ensure_dir(out)?;
    let mut outputs = Vec::new();
    let mut summaries = serde_json::Map::new();
    for curve in &curves {
        outputs.push(write_table(out, &roc_file_name(curve.detector), &roc_table(curve))?);
        summaries.insert(
            curve.detector.name().into(),
            json!({
                "trials_h0": curve.trials_h0,
                "trials_h1": curve.trials_h1,
                "points": curve.points.len(),
                "auc": auc(curve),
                "pd_at_pfa_0.01": curve.pd_at(0.01),
                "pd_at_pfa_0.1": curve.pd_at(0.1),
            }),
        );
    }
    let m = manifest("roc", config, &bundle, started, summaries.into(), outputs.clone());
    let manifest = write_manifest(out, &m)?;
    Ok(RocRun {
        curves,
        outputs,
        manifest,
    })
}

pub const PFA_GAIN_FILE: &str = "pfa_gain.csv";

pub fn pfa_gain_table(points: &[PfaGainPoint], self_gain: bool) -> Table {
    let mut header = vec!["beta", "gain_acute_db", "gain_spade_db", "ci_acute", "ci_spade", "flags"];
    if self_gain {
        header.push("gain_kelly_db");
    }
    let mut table = Table::new(&header);
    for point in points {
        let acute = point.gain_of(DetectorKind::Acute);
        let spade = point.gain_of(DetectorKind::Spade);
        let flags: Vec<String> = point
            .pfa
            .iter()
            .filter(|e| e.events == 0)
            .map(|e| format!("zero_events_{}", e.detector.name()))
            .collect();
        let mut row = vec![
            fmt_f64(point.beta),
            fmt_opt(acute.gain_db),
            fmt_opt(spade.gain_db),
            fmt_opt(acute.ci_half_width),
            fmt_opt(spade.ci_half_width),
            flags.join(";"),
        ];
        if self_gain {
            row.push(fmt_opt(point.gain_of(DetectorKind::Kelly).gain_db));
        }
        table.push(&row);
    }
    table
}

pub struct PfaGainRun {
    pub points: Vec<PfaGainPoint>,
    pub outputs: Vec<OutputRecord>,
    pub manifest: PathBuf,
}

/// False-alarm gains over the `β` grid: `pfa_gain.csv` plus the manifest.
/// Points without H0 exceedances are flagged in the table.
pub fn cmd_pfa_gain(config: &RunConfig, out: &Path, self_gain: bool) -> CliResult<PfaGainRun> {
    let started = Instant::now();
    let bundle = config.bundle()?;
    let experiment = config.experiment(&bundle)?;
    let points = pfa_gain_sweep(&experiment)?;
    ensure_dir(out)?;
    let outputs = vec![write_table(out, PFA_GAIN_FILE, &pfa_gain_table(&points, self_gain))?];
    let summaries: Vec<_> = points
        .iter()
        .map(|pt| {
            let per: serde_json::Map<_, _> = pt
                .pfa
                .iter()
                .map(|e| {
                    (
                        e.detector.name().to_string(),
                        json!({
                            "threshold": e.threshold,
                            "pfa": e.pfa,
                            "events": e.events,
                            "trials_h0": e.trials_h0,
                            "rel_half_width": if e.rel_half_width.is_finite() { json!(e.rel_half_width) } else { json!(null) },
                        }),
                    )
                })
                .collect();
            json!({ "beta": pt.beta, "pd_target": pt.pd_target, "flagged": pt.flagged(), "detectors": per })
        })
        .collect();
    let m = manifest("pfa-gain", config, &bundle, started, summaries.into(), outputs.clone());
    let manifest = write_manifest(out, &m)?;
    Ok(PfaGainRun {
        points,
        outputs,
        manifest,
    })
}

/// Training matrix from a file of `n` rows with `p` values each.
pub fn read_training(path: &Path, p: usize) -> CliResult<Matrix<f64>> {
    let rows = read_table(path, Some(p))?;
    let z = Matrix::from_columns(&rows)?;
    Ok(z)
}

/// Training matrix drawn from the bundle's background model.
pub fn synthetic_training(config: &RunConfig, bundle: &DatasetBundle) -> CliResult<Matrix<f64>> {
    let sampler = JointSampler::new(config.background(bundle)?, config.n)?;
    let mut rng = trial_rng(config.seed, DETECT_TAG, 0);
    Ok(sampler.draw(&Scenario::null(bundle.t.clone()), &mut rng)?.z)
}

/// Per-pixel statistics as CSV: one row per spectrum in `y_path`, with
/// `statistic, alpha_hat, beta_hat` columns for each selected detector.
pub fn cmd_detect(
    config: &RunConfig,
    y_path: &Path,
    z_path: Option<&Path>,
    detectors: &[DetectorKind],
    sink: &mut dyn Write,
) -> CliResult<usize> {
    let bundle = config.bundle()?;
    let p = bundle.p();
    let pixels = read_table(y_path, Some(p))?;
    let z = match z_path {
        Some(path) => read_training(path, p)?,
        None => synthetic_training(config, &bundle)?,
    };
    let ts = summarize(&z)?;
    let mut header = vec!["pixel".to_string()];
    for d in detectors {
        for col in ["statistic", "alpha_hat", "beta_hat"] {
            header.push(format!("{}_{col}", d.name()));
        }
    }
    let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, y) in pixels.iter().enumerate() {
        let mut row = vec![i.to_string()];
        for d in detectors {
            let o = d.run(&ts, y, &bundle.t)?;
            row.extend([fmt_f64(o.statistic), fmt_f64(o.alpha_hat), fmt_f64(o.beta_hat)]);
        }
        table.push(&row);
    }
    sink.write_all(table.as_str().as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    Ok(pixels.len())
}

pub struct SampleRun {
    pub outputs: Vec<OutputRecord>,
    pub manifest: PathBuf,
}

/// Dumps `count` joint samples: `samples_y.csv` holds one pixel per row and
/// `samples_z.csv` holds the `n` training spectra of sample `i` in rows
/// `i·n .. (i+1)·n`. Sample `i` is the draw of Monte-Carlo trial `i`.
pub fn cmd_sample(config: &RunConfig, out: &Path, count: usize, hypothesis: Hypothesis) -> CliResult<SampleRun> {
    let started = Instant::now();
    let bundle = config.bundle()?;
    let sampler = JointSampler::new(config.background(&bundle)?, config.n)?;
    let (scenario, tag) = match hypothesis {
        Hypothesis::H0 => (Scenario::null(bundle.t.clone()), tags::H0),
        Hypothesis::H1 => (config.experiment(&bundle)?.h1_scenario(), tags::H1),
    };
    let p = bundle.p();
    let cols: Vec<String> = (0..p).map(|i| format!("b{i}")).collect();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut ys = Table::new(&cols);
    let mut zs = Table::new(&cols);
    for i in 0..count {
        let mut rng = trial_rng(config.seed, tag, i as u64);
        let s = sampler.draw(&scenario, &mut rng)?;
        ys.push(&s.y.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>());
        for j in 0..s.z.ncols() {
            zs.push(&s.z.column(j).iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>());
        }
    }
    ensure_dir(out)?;
    let outputs = vec![
        write_table(out, "samples_y.csv", &ys)?,
        write_table(out, "samples_z.csv", &zs)?,
    ];
    let summaries = json!({ "count": count, "n": config.n, "hypothesis": format!("{hypothesis:?}") });
    let m = manifest("sample", config, &bundle, started, summaries, outputs.clone());
    let manifest = write_manifest(out, &m)?;
    Ok(SampleRun { outputs, manifest })
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:e} (tolerance {tol:e})"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Quick oracle and identity checks on small random instances.
pub fn cmd_selfcheck(seed: u64) -> CliResult<Vec<CheckResult>> {
    let (p, n, instances) = (3, 9, 12);
    let t = vec![1.0, -0.4, 0.7];
    let sigma = crate::bundle::ar1_covariance(p, 0.6, 1.3);
    let model = hsd_core::BackgroundModel::new(
        vec![0.5, 1.0, -0.2],
        hsd_core::SymmetricPd::new(sigma)?,
        Family::Student { nu: 5.0 },
    )?;
    let sampler = JointSampler::new(model, n)?;
    let scenario = Scenario::mixed(t.clone(), 0.8, 0.7);
    let mut route = [0.0f64; 3];
    let mut whitening = 0.0f64;
    let mut nesting = f64::NEG_INFINITY;
    for i in 0..instances {
        let mut rng = trial_rng(seed, 0x5343, i);
        let sample = sampler.draw(&scenario, &mut rng)?;
        let ts = summarize(&sample.z)?;
        let out: Vec<_> = DetectorKind::ALL
            .iter()
            .map(|d| d.run(&ts, &sample.y, &t))
            .collect::<Result<_, _>>()?;
        for (k, d) in DetectorKind::ALL.iter().enumerate() {
            for family in [Family::Student { nu: 5.0 }, Family::Gaussian] {
                let slow = profile_log_glr(&sample, &t, Nuisance::Model(d.model()), family)?;
                route[k] = route[k].max(rel(slow, out[k].log_glr));
            }
        }
        let w = &ts.s_inv_sqrt;
        let wsw = w.matmul(ts.scatter.matrix())?.matmul(w)?;
        whitening = whitening.max(wsw.sub(&Matrix::identity(p))?.max_abs());
        nesting = nesting.max(out[0].log_glr - out[2].log_glr).max(out[1].log_glr - out[2].log_glr);
    }
    let tiny = hsd_core::Scenario::replacement(t.clone(), 0.3);
    let a = run_trials(&sampler, &tiny, &DetectorKind::ALL, 64, seed, tags::H1, Some(1))?;
    let b = run_trials(&sampler, &tiny, &DetectorKind::ALL, 64, seed, tags::H1, Some(3))?;
    let replay_bits = |v: &Vec<Vec<f64>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    Ok(vec![
        check("kelly matches profile-likelihood route", route[0], 1e-8),
        check("acute matches profile-likelihood route", route[1], 1e-8),
        check("spade matches profile-likelihood route", route[2], 1e-8),
        check("inverse square root whitens scatter", whitening, 1e-10),
        check("kelly and acute never exceed spade", nesting.max(0.0), 1e-12),
        CheckResult {
            name: "trial streams independent of thread count",
            passed: replay_bits(&a) == replay_bits(&b),
            detail: "64 trials on 1 and 3 threads".into(),
        },
    ])
}

/// Detector list from command-line names; `all` selects every detector.
pub fn parse_detectors(names: &[String]) -> Result<Vec<DetectorKind>, ConfigError> {
    let mut out = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            out.extend(DetectorKind::ALL);
        } else {
            out.push(name.parse().map_err(|e: String| ConfigError::new("detector", e))?);
        }
    }
    if out.is_empty() {
        out.extend(DetectorKind::ALL);
    }
    out.sort();
    out.dedup();
    Ok(out)
}
