//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines reach the `cargo test`
//! log. The process fails when a criterion fails for a reason not listed
//! in `KNOWN_DEVIATIONS`; known deviations still print FAIL.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use common::{
    acute_oracle, decomposition_gap, implied_min, instance, normal_matrix, normal_vec, orthogonal,
    partitioned_det_gap, rel_diff, rng, spade_oracle, Instance,
};
use hsd_cli::commands::{cmd_roc, load_config, roc_file_name, Overrides};
use hsd_cli::config::RunConfig;
use hsd_core::detectors::{gaussian_glr, profile_log_glr, summarize, DetectorKind, Nuisance};
use hsd_core::experiments::{
    above_beyond_ci, detection_at_pfa, pfa_gain_sweep, run_trials, ExperimentConfig, PfaGainPoint,
};
use hsd_core::rng::tags;
use hsd_core::{BackgroundModel, Family, JointSample, JointSampler, Matrix, Scenario, SymmetricPd};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sub-checks that fail for reasons analysed in the project notes. A
/// criterion whose only failing sub-checks are listed here does not fail
/// the run.
const KNOWN_DEVIATIONS: &[&str] = &["6b-spade", "7-translation-acute", "7-translation-spade"];

/// 95% two-sided normal quantile.
const Z: f64 = 1.959_963_984_540_054;

struct Check {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn check(id: &'static str, passed: bool, detail: String) -> Check {
    Check { id, passed, detail }
}

struct Criterion {
    name: &'static str,
    budget_secs: f64,
    run: fn() -> Vec<Check>,
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn desk_config(name: &str) -> RunConfig {
    let path = repo_root().join("configs").join(name);
    load_config(&path, &Overrides::default()).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn desk_experiment(name: &str) -> ExperimentConfig {
    let cfg = desk_config(name);
    cfg.experiment(&cfg.bundle().unwrap()).unwrap()
}

fn sample_of(inst: &Instance) -> JointSample<f64> {
    JointSample::new(inst.y.clone(), inst.z.clone()).unwrap()
}

fn pure_rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn nu_invariance() -> Vec<Check> {
    let (p, n) = (6, 24);
    let families = [
        Family::Student { nu: 3.0 },
        Family::Student { nu: 5.0 },
        Family::Student { nu: 50.0 },
        Family::Gaussian,
    ];
    let mut worst = [0.0f64; 5];
    let mut r = rng(0xA1);
    for _ in 0..200 {
        let inst = instance(&mut r, p, n);
        let sample = sample_of(&inst);
        for det in DetectorKind::ALL {
            let closed = det.run(&inst.ts, &inst.y, &inst.t).unwrap().log_glr;
            for (k, family) in families.iter().enumerate() {
                let profiled = profile_log_glr(&sample, &inst.t, Nuisance::Model(det.model()), *family).unwrap();
                worst[k] = worst[k].max(pure_rel(profiled, closed));
            }
            let g = gaussian_glr(&sample, &inst.t, Nuisance::Model(det.model())).unwrap();
            worst[4] = worst[4].max(pure_rel(2.0 / (n + 1) as f64 * g.ln(), closed));
        }
    }
    let labels = ["nu=3", "nu=5", "nu=50", "gaussian profile", "gaussian glr"];
    labels
        .iter()
        .zip(worst)
        .map(|(l, w)| check("1", w <= 1e-8, format!("{l} max rel err {w:.2e}")))
        .collect()
}

fn oracle_equivalence() -> Vec<Check> {
    let (mut acute_worst, mut spade_worst) = (0.0f64, 0.0f64);
    let mut r = rng(0xA2);
    for _ in 0..1000 {
        let p = r.random_range(2..=8);
        let n = r.random_range(p + 2..=32);
        let inst = instance(&mut r, p, n);
        let a = DetectorKind::Acute.run(&inst.ts, &inst.y, &inst.t).unwrap();
        let (_, oracle) = acute_oracle(&inst.ts, &inst.y, &inst.t);
        acute_worst = acute_worst.max(rel_diff(implied_min(&inst.ts, &inst.y, a.log_glr), oracle));
        let s = DetectorKind::Spade.run(&inst.ts, &inst.y, &inst.t).unwrap();
        let (_, oracle) = spade_oracle(&inst.ts, &inst.y, &inst.t);
        spade_worst = spade_worst.max(rel_diff(implied_min(&inst.ts, &inst.y, s.log_glr), oracle));
    }
    vec![
        check("2", acute_worst <= 1e-8, format!("acute max objective gap {acute_worst:.2e}")),
        check("2", spade_worst <= 1e-8, format!("spade max objective gap {spade_worst:.2e}")),
    ]
}

fn derivation_identities() -> Vec<Check> {
    let (mut dec, mut det) = (0.0f64, 0.0f64);
    let mut r = rng(0xA3);
    for _ in 0..500 {
        let p = r.random_range(1..=8);
        let n = r.random_range(p + 1..=24);
        let z = normal_matrix(&mut r, p, n);
        let x = normal_vec(&mut r, p);
        let mu: Vec<f64> = normal_vec(&mut r, p).iter().map(|v| 3.0 * v).collect();
        dec = dec.max(decomposition_gap(&x, &z, &mu));
        det = det.max(partitioned_det_gap(&x, &z));
    }
    vec![
        check("3", dec <= 1e-8, format!("mean decomposition max rel gap {dec:.2e}")),
        check("3", det <= 1e-8, format!("partitioned determinant max rel gap {det:.2e}")),
    ]
}

/// First pixel of `draws` independent H0 samples.
fn null_pixels(model: BackgroundModel<f64>, draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let p = model.dim();
    let sampler = JointSampler::new(model, p + 1).unwrap();
    let sc = Scenario::null(vec![0.0; p]);
    let mut r = rng(seed);
    (0..draws).map(|_| sampler.draw(&sc, &mut r).unwrap().y).collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

fn sampler_validity() -> Vec<Check> {
    let nu = 5.0;
    let draws = 100_000;
    let nf = draws as f64;
    let mut out = Vec::new();

    let model = BackgroundModel::new(vec![0.0], SymmetricPd::identity(1), Family::Student { nu }).unwrap();
    let mut xs: Vec<f64> = null_pixels(model, draws, 0xA41).into_iter().map(|y| y[0]).collect();
    xs.sort_by(f64::total_cmp);
    let law = StudentsT::new(0.0, ((nu - 2.0) / nu).sqrt(), nu).unwrap();
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = law.cdf(x);
            (c - i as f64 / nf).abs().max((c - (i + 1) as f64 / nf).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.628 / nf.sqrt();
    out.push(check("4", d < critical, format!("KS D = {d:.5} vs 1% critical {critical:.5}")));

    let p = 4;
    let sigma = common::random_spd(&mut rng(0xA42), p);
    let mu = vec![0.5, -1.0, 0.0, 2.0];
    let model = BackgroundModel::new(mu.clone(), sigma.clone(), Family::Student { nu }).unwrap();
    let cols = null_pixels(model, draws, 0xA43);
    let mut worst_se = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            let prods: Vec<f64> = cols.iter().map(|c| (c[i] - mu[i]) * (c[j] - mu[j])).collect();
            let mean = prods.iter().sum::<f64>() / nf;
            let var = prods.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            worst_se = worst_se.max((mean - sigma.matrix()[(i, j)]).abs() / (var / nf).sqrt());
        }
    }
    out.push(check("4", worst_se <= 3.0, format!("covariance worst entry {worst_se:.2} SE (p=4, nu=5)")));

    let squared_corr = |family: Family, seed: u64| {
        let sampler =
            JointSampler::<f64>::new(BackgroundModel::new(vec![0.0], SymmetricPd::identity(1), family).unwrap(), 2).unwrap();
        let sc = Scenario::null(vec![0.0]);
        let mut r = rng(seed);
        let (mut a, mut b): (Vec<f64>, Vec<f64>) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
        for _ in 0..draws {
            let s = sampler.draw(&sc, &mut r).unwrap();
            a.push(s.z[(0, 0)].powi(2));
            b.push(s.z[(0, 1)].powi(2));
        }
        correlation(&a, &b)
    };
    let half = Z / (nf - 3.0).sqrt();
    let student = squared_corr(Family::Student { nu }, 0xA44);
    let gaussian = squared_corr(Family::Gaussian, 0xA45);
    out.push(check(
        "4",
        student - half > 0.0,
        format!("student squared-entry corr {student:.4} (ci ±{half:.4})"),
    ));
    out.push(check(
        "4",
        gaussian.abs() <= half,
        format!("gaussian squared-entry corr {gaussian:.4} (ci ±{half:.4})"),
    ));
    out
}

fn roc_ordering() -> Vec<Check> {
    let exp = desk_experiment("fig1.toml");
    let sampler = exp.sampler().unwrap();
    let h0 = run_trials(
        &sampler,
        &Scenario::null(exp.t.clone()),
        &DetectorKind::ALL,
        exp.trials_h0,
        exp.seed,
        tags::H0,
        exp.threads,
    )
    .unwrap();
    let h1 = run_trials(&sampler, &exp.h1_scenario(), &DetectorKind::ALL, exp.trials_h1, exp.seed, tags::H1, exp.threads)
        .unwrap();
    let idx = |d: DetectorKind| DetectorKind::ALL.iter().position(|&k| k == d).unwrap();
    let mut out = Vec::new();
    for pfa in [1e-2, 3e-2] {
        let at = |d: DetectorKind| detection_at_pfa(&h0[idx(d)], &h1[idx(d)], pfa).unwrap();
        let (k, a, s) = (at(DetectorKind::Kelly), at(DetectorKind::Acute), at(DetectorKind::Spade));
        let ok = above_beyond_ci((a.detections, a.trials_h1), (s.detections, s.trials_h1))
            && above_beyond_ci((s.detections, s.trials_h1), (k.detections, k.trials_h1));
        out.push(check(
            "5",
            ok,
            format!(
                "pfa {pfa}: pd acute {:.4}±{:.4} spade {:.4}±{:.4} kelly {:.4}±{:.4}",
                a.pd, a.pd_half_width, s.pd, s.pd_half_width, k.pd, k.pd_half_width
            ),
        ));
    }
    out
}

fn gain_with_ci(pt: &PfaGainPoint, d: DetectorKind) -> (f64, f64) {
    let g = pt.gain_of(d);
    (g.gain_db.unwrap_or(f64::NAN), g.ci_half_width.unwrap_or(f64::NAN))
}

fn pfa_gain_ordering() -> Vec<Check> {
    let exp = desk_experiment("fig2.toml");
    let matched = 1.0 - exp.alpha;
    let points = pfa_gain_sweep(&exp).unwrap();
    let at = |beta: f64| points.iter().find(|pt| (pt.beta - beta).abs() < 1e-12).unwrap();
    let fmt = |(g, h): (f64, f64)| format!("{g:.2}±{h:.2} dB");
    let mut out = Vec::new();

    let pt = at(matched);
    let (a, s) = (gain_with_ci(pt, DetectorKind::Acute), gain_with_ci(pt, DetectorKind::Spade));
    out.push(check(
        "6a",
        a.0 + a.1.hypot(s.1) >= s.0,
        format!("beta {matched}: acute {} spade {}", fmt(a), fmt(s)),
    ));

    let pt = at(1.0);
    let (a, s) = (gain_with_ci(pt, DetectorKind::Acute), gain_with_ci(pt, DetectorKind::Spade));
    out.push(check("6b-acute", a.0 + a.1 < 0.0, format!("beta 1: acute {}", fmt(a))));
    out.push(check("6b-spade", s.0.abs() <= s.1, format!("beta 1: spade {}", fmt(s))));

    let lo = exp.beta_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = exp.beta_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for beta in [lo, hi] {
        let pt = at(beta);
        let (a, s) = (gain_with_ci(pt, DetectorKind::Acute), gain_with_ci(pt, DetectorKind::Spade));
        out.push(check(
            "6c",
            s.0 + a.1.hypot(s.1) >= a.0,
            format!("beta {beta}: acute {} spade {}", fmt(a), fmt(s)),
        ));
    }
    out
}

/// Worst relative change of each statistic under `x → Ax + b` applied to
/// the pixel and training columns, with the target mapped by `target`.
fn affine_gaps(b_scale: f64, target: impl Fn(&Matrix<f64>, &[f64], &[f64]) -> Vec<f64>) -> [f64; 3] {
    let (p, n) = (6, 24);
    let mut worst = [0.0f64; 3];
    let mut r = rng(0xA7);
    for _ in 0..200 {
        let inst = instance(&mut r, p, n);
        let scale: Vec<f64> = (0..p).map(|_| r.random_range(0.3..3.0)).collect();
        let a = orthogonal(&mut r, p).matmul(&Matrix::from_diagonal(&scale)).unwrap();
        let b: Vec<f64> = normal_vec(&mut r, p).iter().map(|v| b_scale * v).collect();
        let map = |x: &[f64]| -> Vec<f64> { a.mul_vec(x).unwrap().iter().zip(&b).map(|(u, v)| u + v).collect() };
        let cols: Vec<Vec<f64>> = (0..n).map(|j| map(&inst.z.column(j))).collect();
        let ts = summarize(&Matrix::from_columns(&cols).unwrap()).unwrap();
        let y = map(&inst.y);
        let t = target(&a, &b, &inst.t);
        for (k, det) in DetectorKind::ALL.iter().enumerate() {
            let before = det.run(&inst.ts, &inst.y, &inst.t).unwrap().statistic;
            let after = det.run(&ts, &y, &t).unwrap().statistic;
            worst[k] = worst[k].max(pure_rel(before, after));
        }
    }
    worst
}

fn invariance_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let names = DetectorKind::ALL.map(|d| d.name());

    let linear = affine_gaps(0.0, |a, _, t| a.mul_vec(t).unwrap());
    for (name, w) in names.iter().zip(linear) {
        out.push(check("7-linear", w <= 1e-8, format!("{name} under x → Ax: max rel change {w:.2e}")));
    }
    let affine = affine_gaps(4.0, |a, _, t| a.mul_vec(t).unwrap());
    let ids = ["7-translation-kelly", "7-translation-acute", "7-translation-spade"];
    for ((id, name), w) in ids.into_iter().zip(names).zip(affine) {
        out.push(check(id, w <= 1e-8, format!("{name} under x → Ax + b, t → At: max rel change {w:.2e}")));
    }
    let moved = affine_gaps(4.0, |a, b, t| a.mul_vec(t).unwrap().iter().zip(b).map(|(u, v)| u + v).collect());
    out.push(check(
        "7-moved-target",
        moved[1] <= 1e-8,
        format!("acute under x → Ax + b, t → At + b: max rel change {:.2e}", moved[1]),
    ));

    let exp = desk_experiment("fig1.toml");
    let h0 = run_trials(
        &exp.sampler().unwrap(),
        &Scenario::null(exp.t.clone()),
        &DetectorKind::ALL,
        100_000,
        0xA70,
        tags::H0,
        None,
    )
    .unwrap();
    for (name, stats) in names.iter().zip(&h0) {
        let min = stats.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(check("7-nonneg", min >= 0.0, format!("{name} min over 1e5 H0 draws {min:.3e}")));
    }

    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip([1, 2, 4]) {
        let mut cfg = desk_config("smoke.toml");
        cfg.threads = Some(threads);
        cfg.trials_h0 = 5000;
        cfg.trials_h1 = 5000;
        cmd_roc(&cfg, dir.path()).unwrap();
    }
    let identical = DetectorKind::ALL.iter().all(|&d| {
        let read = |dir: &tempfile::TempDir| std::fs::read(dir.path().join(roc_file_name(d))).unwrap();
        let first = read(&dirs[0]);
        dirs[1..].iter().all(|dir| read(dir) == first)
    });
    out.push(check("7-replay", identical, "roc csv bytes under threads 1, 2, 4".into()));
    out
}

const CRITERIA: [Criterion; 7] = [
    Criterion {
        name: "nu-invariance of the profile route",
        budget_secs: 60.0,
        run: nu_invariance,
    },
    Criterion {
        name: "inner minimizers vs grid oracles",
        budget_secs: 300.0,
        run: oracle_equivalence,
    },
    Criterion {
        name: "derivation identities",
        budget_secs: f64::INFINITY,
        run: derivation_identities,
    },
    Criterion {
        name: "sampler validity",
        budget_secs: 120.0,
        run: sampler_validity,
    },
    Criterion {
        name: "ROC ordering at desk scale",
        budget_secs: 900.0,
        run: roc_ordering,
    },
    Criterion {
        name: "false-alarm gain ordering over beta",
        budget_secs: 1800.0,
        run: pfa_gain_ordering,
    },
    Criterion {
        name: "invariance, non-negativity and replay",
        budget_secs: f64::INFINITY,
        run: invariance_suite,
    },
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    // A name filter meant for other targets skips this one.
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return ExitCode::SUCCESS;
        }
    }

    let mut unexpected = 0;
    for (k, c) in CRITERIA.iter().enumerate() {
        let started = Instant::now();
        let mut checks = (c.run)();
        let secs = started.elapsed().as_secs_f64();
        checks.push(check("runtime", secs <= c.budget_secs, format!("{secs:.1} s")));
        let failed: Vec<&Check> = checks.iter().filter(|ch| !ch.passed).collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {}: {} ({secs:.1} s)", k + 1, c.name);
        for ch in &checks {
            println!("    [{}] {}: {}", if ch.passed { "ok" } else { "fail" }, ch.id, ch.detail);
        }
        let unknown = failed.iter().filter(|ch| !KNOWN_DEVIATIONS.contains(&ch.id)).count();
        if !failed.is_empty() && unknown == 0 {
            println!("    failing sub-checks are known deviations");
        }
        unexpected += unknown;
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failing sub-check(s)");
        ExitCode::FAILURE
    }
}
