//! Batch driver: every scan and check is a subcommand taking a sectioned
//! key-value config file and writing a JSON result plus CSV series.
//!
//! Exit codes: 0 completed, 2 assertion/verdict failure, 3 precondition
//! error, 64 unknown subcommand or invalid config.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use fmlab_core::constructions::{
    bump_eta, inv_power_integral_scan, tensor_f_beta, w_beta_field, BetaParams, HBeta,
};
use fmlab_core::fit::{classify, classify_partial_sums, loglog_fit, ScanSeries, Verdict};
use fmlab_core::grid::{
    analyze, lp_norm, lq_norm, random_real_band_limited, synthesize, FreqBox, SampleField,
    TorusGrid,
};
use fmlab_core::multiplier::{tau_scan, ConvOperator};
use fmlab_core::norms::NormOptions;
use fmlab_core::shift_invariant::{
    decomposition_residual, ev_domination_check, gramian, minimal_generator_count,
    rank_formula_check, real_generator, sis_cq_diagnostic, GeneratorFn, GeneratorSet, LatticeSpec,
};
use fmlab_core::sobolev::{
    aniso_seminorm, hs_seminorm, line_restriction_seminorm, slobodeckij_seminorm, AnisoParams,
};
use fmlab_core::zak::{
    blt_scan, gabor_cq_scan, localization_series, zak_transform, GaborWindow, Side,
};
use fmlab_core::zeroset::{
    generalized_zero_set, hausdorff_obstruction_scan, poincare_check, Ball, EpsSchedule,
};

use config::{
    get_f64_list, get_f64_or, get_range, get_str, get_str_or, get_usize_list, get_usize_or, Config,
    ConfigError, Section,
};
use output::{write_artifacts, CsvFile, RunOutput};

#[derive(Parser)]
#[command(name = "fmlab", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the sectioned key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for result.json and CSV series.
    #[arg(long, global = true, default_value = "fmlab-out")]
    out: PathBuf,
    /// Seed for every randomized kernel.
    #[arg(long, global = true, default_value_t = fmlab_core::DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true, default_value_t = false)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectral round-trip and Parseval checks on random band-limited fields.
    Transform,
    /// Seminorms of a named construction.
    Sobolev,
    /// Scalar multiplier norm estimates.
    Multnorm,
    /// Local-mass scan at a symbol zero, or the integrability refinement scan.
    TauScan,
    /// Emit samples of the window constructions.
    Construct,
    /// Zak transform invariants and zero diagnostics.
    Zak,
    /// Gabor completeness constants and localization scans.
    GaborBlt,
    /// Gramian periodization, rank formula and eigenvalue domination.
    Gramian,
    /// Translate-system completeness diagnostic.
    SisDiagnostic,
    /// Generalized zero set, box-counting dimension and obstruction scan.
    Zeroset,
    /// Re-fit a stored CSV series.
    Fit,
}

impl Command {
    fn section_name(&self) -> &'static str {
        match self {
            Command::Transform => "transform",
            Command::Sobolev => "sobolev",
            Command::Multnorm => "multnorm",
            Command::TauScan => "tau-scan",
            Command::Construct => "construct",
            Command::Zak => "zak",
            Command::GaborBlt => "gabor-blt",
            Command::Gramian => "gramian",
            Command::SisDiagnostic => "sis-diagnostic",
            Command::Zeroset => "zeroset",
            Command::Fit => "fit",
        }
    }
}

enum Fail {
    Usage(String),
    Core(fmlab_core::Error),
    Io(std::io::Error),
}

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        Fail::Usage(e.to_string())
    }
}

impl From<fmlab_core::Error> for Fail {
    fn from(e: fmlab_core::Error) -> Self {
        Fail::Core(e)
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not failures
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(64);
        }
    };
    if cli.workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    let config_text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read config {}: {e}", path.display());
                return ExitCode::from(64);
            }
        },
        None => {
            eprintln!("--config <path> is required");
            return ExitCode::from(64);
        }
    };
    let config = match Config::parse(&config_text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(64);
        }
    };
    let section_name = cli.command.section_name();
    let section = match config.section(section_name) {
        Ok(s) => s.clone(),
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(64);
        }
    };
    let opts = NormOptions {
        seed: cli.seed,
        ..NormOptions::default()
    };
    let run = match dispatch(cli.command, &section, &opts, cli.seed) {
        Ok(run) => run,
        Err(Fail::Usage(msg)) => {
            eprintln!("{msg}");
            return ExitCode::from(64);
        }
        Err(Fail::Core(e)) => {
            eprintln!("{e}");
            return match e {
                fmlab_core::Error::Numerical(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            };
        }
        Err(Fail::Io(e)) => {
            eprintln!("io error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.verbose {
        eprintln!(
            "{}: verdict_ok = {}, {} series",
            run.subcommand,
            run.verdict_ok,
            run.csv.len()
        );
    }
    if let Err(e) = write_artifacts(&cli.out, &run, &section, cli.seed, cli.workers) {
        eprintln!("cannot write artifacts: {e}");
        return ExitCode::from(2);
    }
    if run.verdict_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn dispatch(cmd: Command, s: &Section, opts: &NormOptions, seed: u64) -> Result<RunOutput, Fail> {
    match cmd {
        Command::Transform => cmd_transform(s, seed),
        Command::Sobolev => cmd_sobolev(s),
        Command::Multnorm => cmd_multnorm(s, opts),
        Command::TauScan => cmd_tau_scan(s),
        Command::Construct => cmd_construct(s),
        Command::Zak => cmd_zak(s),
        Command::GaborBlt => cmd_gabor_blt(s, opts),
        Command::Gramian => cmd_gramian(s),
        Command::SisDiagnostic => cmd_sis(s, opts),
        Command::Zeroset => cmd_zeroset(s),
        Command::Fit => cmd_fit(s),
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Convergent => "convergent",
        Verdict::Divergent => "divergent",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn fit_json(f: &fmlab_core::fit::ExponentFit) -> Value {
    json!({ "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared, "n_points": f.n_points })
}

fn expect_check(s: &Section, key: &str, actual: bool, ok: &mut bool) -> Value {
    match s.get(key).map(|v| v == "true") {
        Some(expected) => {
            if expected != actual {
                *ok = false;
            }
            json!({ "expected": expected, "actual": actual })
        }
        None => json!({ "actual": actual }),
    }
}

// ---------------------------------------------------------------------------
// transform

fn cmd_transform(s: &Section, seed: u64) -> Result<RunOutput, Fail> {
    let d = get_usize_or(s, "d", 1)?;
    let n = get_usize_or(s, "n", 256)?;
    let half = get_usize_or(s, "half_width", 16)?;
    let trials = get_usize_or(s, "trials", 20)?;
    let tol = get_f64_or(s, "tol", 1e-10)?;
    let grid = TorusGrid::new(d, n)?;
    let fb = FreqBox::new(d, half)?;
    let mut rows = Vec::new();
    let mut worst_rt = 0.0f64;
    let mut worst_pv = 0.0f64;
    for t in 0..trials {
        let f = random_real_band_limited(grid, half, seed.wrapping_add(t as u64))?;
        let co = analyze(&f, &fb)?;
        let back = synthesize(&co, &grid)?;
        let rt = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        let pv = (lp_norm(&f, 2.0)? - lq_norm(&co, 2.0)?).abs();
        worst_rt = worst_rt.max(rt);
        worst_pv = worst_pv.max(pv);
        rows.push(vec![t as f64, rt, pv]);
    }
    let ok = worst_rt < tol && worst_pv < tol;
    Ok(RunOutput {
        subcommand: "transform".into(),
        results: json!({
            "trials": trials,
            "max_roundtrip_error": worst_rt,
            "max_parseval_error": worst_pv,
            "tolerance": tol,
            "pass": ok,
        }),
        csv: vec![CsvFile {
            name: "transform_errors".into(),
            header: vec!["trial".into(), "roundtrip".into(), "parseval".into()],
            rows,
        }],
        verdict_ok: ok,
    })
}

// ---------------------------------------------------------------------------
// sobolev

fn sampled_construction(s: &Section) -> Result<SampleField, Fail> {
    let d = get_usize_or(s, "d", 1)?;
    let n = get_usize_or(s, "n", 1024)?;
    let grid = TorusGrid::new(d, n)?;
    match get_str_or(s, "field", "wbeta") {
        "wbeta" => {
            let beta = get_f64_or(s, "beta", 0.3)?;
            Ok(w_beta_field(&BetaParams::new(beta, d)?, &grid)?)
        }
        "wbeta-line" => {
            let beta = get_f64_or(s, "beta", 0.3)?;
            if d != 2 {
                return Err(Fail::Usage("wbeta-line needs d = 2".into()));
            }
            Ok(SampleField::from_real_fn(grid, move |x| {
                fmlab_core::constructions::w_beta_at(beta, &[x[0]])
            })?)
        }
        "sine" => Ok(SampleField::from_real_fn(grid, |x| {
            (2.0 * std::f64::consts::PI * x[0]).sin()
        })?),
        "constant" => Ok(SampleField::constant(grid, Complex64::new(1.0, 0.0))),
        other => {
            if let Some(path) = other.strip_prefix("csv:") {
                let text = std::fs::read_to_string(path)?;
                let values: Vec<Complex64> = text
                    .lines()
                    .skip(1)
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| {
                        l.split(',')
                            .last()
                            .unwrap_or("")
                            .trim()
                            .parse::<f64>()
                            .map(|v| Complex64::new(v, 0.0))
                            .map_err(|_| Fail::Usage(format!("bad sample line: {l}")))
                    })
                    .collect::<Result<_, _>>()?;
                let n = values.len();
                let grid = TorusGrid::new(1, n)?;
                Ok(SampleField::new(grid, values)?)
            } else {
                Err(Fail::Usage(format!("unknown field '{other}'")))
            }
        }
    }
}

fn cmd_sobolev(s: &Section) -> Result<RunOutput, Fail> {
    let f = sampled_construction(s)?;
    let grid = *f.grid();
    let r = get_f64_or(s, "r", 2.0)?;
    let ss = get_f64_list(s, "s")?;
    let half = get_usize_or(s, "half_width", grid.n() / 2 - 1)?;
    let fb = FreqBox::new(grid.dim(), half)?;
    let co = analyze(&f, &fb)?;
    let mut rows = Vec::new();
    let mut per_s = Vec::new();
    for &sv in &ss {
        let hs = hs_seminorm(&co, sv)?;
        let slob = if sv < 1.0 {
            Some(slobodeckij_seminorm(&f, sv, r)?)
        } else {
            None
        };
        let line = if grid.dim() == 2 && sv < 1.0 {
            Some(line_restriction_seminorm(&f, sv, r)?)
        } else {
            None
        };
        let aniso = if grid.dim() == 2 {
            Some(aniso_seminorm(&co, &AnisoParams::new(vec![sv; 2])?)?)
        } else {
            None
        };
        rows.push(vec![sv, hs, slob.unwrap_or(f64::NAN)]);
        per_s.push(json!({
            "s": sv,
            "hs": hs,
            "slobodeckij": slob,
            "line_restriction": line,
            "aniso_equal_orders": aniso,
        }));
    }
    Ok(RunOutput {
        subcommand: "sobolev".into(),
        results: json!({ "r": r, "seminorms": per_s }),
        csv: vec![CsvFile {
            name: "sobolev_seminorms".into(),
            header: vec!["s".into(), "hs".into(), "slobodeckij".into()],
            rows,
        }],
        verdict_ok: true,
    })
}

// ---------------------------------------------------------------------------
// multnorm

fn symbol_field(s: &Section, seed: u64) -> Result<SampleField, Fail> {
    let n = get_usize_or(s, "n", 1024)?;
    let grid = TorusGrid::new(1, n)?;
    match get_str_or(s, "symbol", "cosine") {
        "one" => Ok(SampleField::constant(grid, Complex64::new(1.0, 0.0))),
        "cosine" => Ok(SampleField::from_real_fn(grid, |x| {
            2.0 + (2.0 * std::f64::consts::PI * x[0]).cos()
        })?),
        "wbeta" => {
            let beta = get_f64_or(s, "beta", 0.3)?;
            Ok(w_beta_field(&BetaParams::new(beta, 1)?, &grid)?)
        }
        "random" => Ok(random_real_band_limited(
            grid,
            get_usize_or(s, "half_width", 16)?,
            seed,
        )?),
        other => Err(Fail::Usage(format!("unknown symbol '{other}'"))),
    }
}

fn cmd_multnorm(s: &Section, opts: &NormOptions) -> Result<RunOutput, Fail> {
    let u = symbol_field(s, opts.seed)?;
    let in_half = get_usize_or(s, "in_half", 16)?;
    let out_half = get_usize_or(s, "out_half", in_half)?;
    let in_box = FreqBox::new(1, in_half)?;
    let out_box = FreqBox::new(1, out_half)?;
    let op = ConvOperator::from_symbol_field(&u, in_box, out_box)?;
    let qs = get_f64_list(s, "q")?;
    let mut rows = Vec::new();
    let mut per_q = Vec::new();
    let mut ok = true;
    for &q in &qs {
        if (q - 2.0).abs() < 1e-12 {
            let sv = op.norm_2_2();
            if let Some(expect) = s.get("expect_norm_2_2") {
                let expect: f64 = expect
                    .parse()
                    .map_err(|_| Fail::Usage("expect_norm_2_2 is not a number".into()))?;
                let tol = get_f64_or(s, "expect_rel_tol", 0.02)?;
                if (sv.value - expect).abs() > tol * expect.abs() {
                    ok = false;
                }
            }
            rows.push(vec![q, sv.value, sv.value]);
            per_q.push(json!({ "q": q, "norm": sv.value, "converged": sv.converged, "dense_svd": sv.dense }));
        } else if q.is_infinite() {
            let v = op.norm_2_inf();
            rows.push(vec![q, v, v]);
            per_q.push(json!({ "q": "inf", "norm": v, "exact": true }));
        } else {
            let est = op.norm_2_q(q, opts)?;
            rows.push(vec![q, est.lower, est.upper]);
            let witness: Vec<[f64; 2]> = est.witness.iter().map(|z| [z.re, z.im]).collect();
            per_q.push(json!({
                "q": q,
                "lower": est.lower,
                "upper": est.upper,
                "iterations": est.iterations,
                "converged": est.converged,
                "witness": witness,
            }));
        }
    }
    Ok(RunOutput {
        subcommand: "multnorm".into(),
        results: json!({ "estimates": per_q }),
        csv: vec![CsvFile {
            name: "multnorm".into(),
            header: vec!["q".into(), "lower".into(), "upper".into()],
            rows,
        }],
        verdict_ok: ok,
    })
}

// ---------------------------------------------------------------------------
// tau-scan

fn cmd_tau_scan(s: &Section) -> Result<RunOutput, Fail> {
    let beta = get_f64_or(s, "beta", 0.3)?;
    let qs = get_f64_list(s, "q")?;
    let mode = get_str_or(s, "mode", "mass");
    let mut ok = true;
    match mode {
        "mass" => {
            let n = get_usize_or(s, "n", 8192)?;
            let grid = TorusGrid::new(1, n)?;
            let w = w_beta_field(&BetaParams::new(beta, 1)?, &grid)?;
            let levels = get_range(s, "tau_levels").unwrap_or((4..=10).collect());
            let taus: Vec<f64> = levels.iter().map(|&j| 2f64.powi(-(j as i32))).collect();
            let mut per_q = Vec::new();
            let mut csv = Vec::new();
            let mut flip: Option<f64> = None;
            let mut last_obstructed = None;
            for &q in &qs {
                let rep = tau_scan(&w, q, &taus)?;
                if let (Some(true), false) = (last_obstructed, rep.obstruction) {
                    flip = Some(q);
                }
                last_obstructed = Some(rep.obstruction);
                per_q.push(json!({
                    "q": q,
                    "obstruction": rep.obstruction,
                    "mass_slope": rep.mass_fit.slope,
                    "ratio_slope": rep.ratio_fit.slope,
                    "witness_exponent": rep.witness_exponent,
                }));
                csv.push(CsvFile::from_series(
                    &format!("tau_scan_mass_q{q}"),
                    &rep.series_mass,
                    "tau",
                    "l2_mass",
                ));
            }
            if let Some(expect) = s.get("expect_flip_q") {
                let expect: f64 = expect
                    .parse()
                    .map_err(|_| Fail::Usage("expect_flip_q is not a number".into()))?;
                let step = get_f64_or(s, "grid_step", 0.5)?;
                match flip {
                    Some(f) if (f - expect).abs() <= step + 1e-12 => {}
                    _ => ok = false,
                }
            }
            Ok(RunOutput {
                subcommand: "tau-scan".into(),
                results: json!({ "mode": "mass", "beta": beta, "per_q": per_q, "flip_q": flip }),
                csv,
                verdict_ok: ok,
            })
        }
        "integrability" => {
            let ns = get_usize_list(s, "ns").unwrap_or_else(|_| (8..=12).map(|j| 1 << j).collect());
            let mut per_q = Vec::new();
            let mut csv = Vec::new();
            let mut flip: Option<f64> = None;
            let mut last_divergent = None;
            for &q in &qs {
                let series = inv_power_integral_scan(beta, q, &ns)?;
                let verdict = classify_partial_sums(&series)?;
                let divergent = verdict == Verdict::Divergent;
                if let (Some(true), false) = (last_divergent, divergent) {
                    flip = Some(q);
                }
                last_divergent = Some(divergent);
                per_q.push(json!({ "q": q, "verdict": verdict_str(verdict) }));
                csv.push(CsvFile::from_series(
                    &format!("integrability_q{q}"),
                    &series,
                    "n",
                    "riemann_sum",
                ));
            }
            if let Some(expect) = s.get("expect_flip_q") {
                let expect: f64 = expect
                    .parse()
                    .map_err(|_| Fail::Usage("expect_flip_q is not a number".into()))?;
                let step = get_f64_or(s, "grid_step", 0.5)?;
                match flip {
                    Some(f) if (f - expect).abs() <= step + 1e-12 => {}
                    _ => ok = false,
                }
            }
            Ok(RunOutput {
                subcommand: "tau-scan".into(),
                results: json!({ "mode": "integrability", "beta": beta, "per_q": per_q, "flip_q": flip }),
                csv,
                verdict_ok: ok,
            })
        }
        other => Err(Fail::Usage(format!("unknown mode '{other}'"))),
    }
}

// ---------------------------------------------------------------------------
// construct

fn cmd_construct(s: &Section) -> Result<RunOutput, Fail> {
    let family = get_str_or(s, "family", "wbeta");
    let beta = get_f64_or(s, "beta", 0.3)?;
    let n = get_usize_or(s, "n", 1024)?;
    match family {
        "wbeta" => {
            let d = get_usize_or(s, "d", 1)?;
            let grid = TorusGrid::new(d, n)?;
            let w = w_beta_field(&BetaParams::new(beta, d)?, &grid)?;
            let rows: Vec<Vec<f64>> = (0..grid.len())
                .map(|i| {
                    let p = grid.point(i);
                    let mut row = p[..d].to_vec();
                    row.push(w.value(i).re);
                    row
                })
                .collect();
            let mut header: Vec<String> = (0..d).map(|a| format!("x{a}")).collect();
            header.push("w".into());
            Ok(RunOutput {
                subcommand: "construct".into(),
                results: json!({ "family": "wbeta", "beta": beta, "zero_value": w.value(grid.nearest_index(&vec![0.0; d])).re }),
                csv: vec![CsvFile {
                    name: "wbeta_samples".into(),
                    header,
                    rows,
                }],
                verdict_ok: true,
            })
        }
        "hbeta" => {
            let h = HBeta::new(beta)?;
            let rows: Vec<Vec<f64>> = (0..=n)
                .map(|i| {
                    let x = -0.6 + 1.2 * i as f64 / n as f64;
                    vec![x, h.eval(x)]
                })
                .collect();
            let xi_max = get_f64_or(s, "xi_max", 64.0)?;
            let hat_rows: Vec<Vec<f64>> = (0..=256)
                .map(|i| {
                    let xi = xi_max * i as f64 / 256.0;
                    vec![xi, h.hat(xi)]
                })
                .collect();
            Ok(RunOutput {
                subcommand: "construct".into(),
                results: json!({ "family": "hbeta", "beta": beta, "value_at_zero": h.eval(0.0) }),
                csv: vec![
                    CsvFile {
                        name: "hbeta_samples".into(),
                        header: vec!["x".into(), "h".into()],
                        rows,
                    },
                    CsvFile {
                        name: "hbeta_hat".into(),
                        header: vec!["xi".into(), "hat".into()],
                        rows: hat_rows,
                    },
                ],
                verdict_ok: true,
            })
        }
        "eta" => {
            let rows: Vec<Vec<f64>> = (0..=n)
                .map(|i| {
                    let r = 0.3 * i as f64 / n as f64;
                    vec![r, bump_eta(&[r])]
                })
                .collect();
            Ok(RunOutput {
                subcommand: "construct".into(),
                results: json!({ "family": "eta", "plateau": 0.125, "support": 0.25 }),
                csv: vec![CsvFile {
                    name: "eta_samples".into(),
                    header: vec!["r".into(), "eta".into()],
                    rows,
                }],
                verdict_ok: true,
            })
        }
        "tensor" => {
            let d = get_usize_or(s, "d", 2)?;
            let t = tensor_f_beta(beta, d)?;
            let rows: Vec<Vec<f64>> = (0..=n)
                .map(|i| {
                    let x = -0.6 + 1.2 * i as f64 / n as f64;
                    vec![x, t.eval(&vec![x; d])]
                })
                .collect();
            Ok(RunOutput {
                subcommand: "construct".into(),
                results: json!({ "family": "tensor", "beta": beta, "d": d, "value_at_zero": t.eval(&vec![0.0; d]) }),
                csv: vec![CsvFile {
                    name: "tensor_diagonal".into(),
                    header: vec!["x".into(), "f".into()],
                    rows,
                }],
                verdict_ok: true,
            })
        }
        other => Err(Fail::Usage(format!("unknown family '{other}'"))),
    }
}

// ---------------------------------------------------------------------------
// zak

fn window_from(s: &Section) -> Result<GaborWindow, Fail> {
    match get_str_or(s, "window", "gaussian") {
        "gaussian" => Ok(GaborWindow::gaussian()),
        "indicator" => Ok(GaborWindow::unit_indicator()),
        "hbeta" => Ok(GaborWindow::from_hbeta(get_f64_or(s, "beta", 0.3)?)?),
        other => Err(Fail::Usage(format!("unknown window '{other}'"))),
    }
}

fn cmd_zak(s: &Section) -> Result<RunOutput, Fail> {
    let g = window_from(s)?;
    let m = get_usize_or(s, "m", 256)?;
    let qp_tol = get_f64_or(s, "qp_tol", 1e-8)?;
    let unit_tol = get_f64_or(s, "unit_tol", 1e-6)?;
    let z = zak_transform(&g, m)?;
    let qp = z.quasi_periodicity_residual();
    let unit = z.unitarity_defect();
    let modp = z.modulus_periodicity_residual();
    let (min_val, cell) = z.min_modulus();
    let ms = get_usize_list(s, "refinement").unwrap_or_else(|_| vec![64, 128, 256]);
    let mut min_rows = Vec::new();
    for &mm in &ms {
        let zz = zak_transform(&g, mm)?;
        min_rows.push((mm as f64, zz.min_modulus().0));
    }
    let min_series = ScanSeries::new("zak_min_modulus", min_rows.clone())?;
    let min_fit = loglog_fit(&min_series).ok();
    let ok = qp < qp_tol && unit < unit_tol;
    Ok(RunOutput {
        subcommand: "zak".into(),
        results: json!({
            "m": m,
            "quasi_periodicity_residual": qp,
            "unitarity_defect": unit,
            "modulus_periodicity_residual": modp,
            "min_modulus": { "value": min_val, "cell": [cell.0, cell.1],
                             "x": (cell.0 as f64 + 0.5) / m as f64,
                             "y": (cell.1 as f64 + 0.5) / m as f64 },
            "min_modulus_fit": min_fit.map(|f| fit_json(&f)),
            "zero_candidates": z.zero_candidates().len(),
            "pass": ok,
        }),
        csv: vec![CsvFile {
            name: "zak_min_modulus".into(),
            header: vec!["m".into(), "min_modulus".into()],
            rows: min_rows.iter().map(|&(a, b)| vec![a, b]).collect(),
        }],
        verdict_ok: ok,
    })
}

// ---------------------------------------------------------------------------
// gabor-blt

fn cmd_gabor_blt(s: &Section, opts: &NormOptions) -> Result<RunOutput, Fail> {
    let g = window_from(s)?;
    let m = get_usize_or(s, "m", 128)?;
    let qs = get_f64_list(s, "q")?;
    let boxes = get_usize_list(s, "boxes").unwrap_or_else(|_| vec![4, 8, 16]);
    let mut per_q = Vec::new();
    let mut csv = Vec::new();
    let mut ok = true;
    for &q in &qs {
        let scan = gabor_cq_scan(&g, q, &boxes, m, opts)?;
        let key = format!("expect_degenerates_q{q}");
        let _ = expect_check(s, &key, scan.degenerates, &mut ok);
        per_q.push(json!({
            "q": q,
            "degenerates": scan.degenerates,
            "fit": fit_json(&scan.fit),
            "constants": scan.series.points(),
        }));
        csv.push(CsvFile::from_series(
            &format!("gabor_cq_q{q}"),
            &scan.series,
            "box_half_width",
            "d_constant",
        ));
    }
    // optional localization rows
    let blt = if let (Ok(pairs_raw), Ok(q_blt)) = (get_str(s, "pairs"), get_f64_or(s, "blt_q", 4.0))
    {
        let mut pairs = Vec::new();
        for p in pairs_raw.split(',') {
            let Some((a, b)) = p.trim().split_once(':') else {
                return Err(Fail::Usage(format!("bad pair '{p}', expected r:t")));
            };
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Fail::Usage("bad pair".into()))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| Fail::Usage("bad pair".into()))?;
            pairs.push((a, b));
        }
        let levels = get_range(s, "radius_levels").unwrap_or((3..=9).collect());
        let radii: Vec<f64> = levels.iter().map(|&j| 2f64.powi(j as i32)).collect();
        let rep = blt_scan(&g, q_blt, &pairs, &radii)?;
        Some(json!({
            "q": rep.q,
            "consistent": rep.consistent,
            "rows": rep.rows.iter().map(|r| json!({
                "r": r.r_exp, "t": r.t_exp,
                "time": verdict_str(r.time_verdict),
                "freq": verdict_str(r.freq_verdict),
                "both_finite": r.both_finite,
                "admissible": r.admissible_for_q,
            })).collect::<Vec<_>>(),
        }))
    } else {
        None
    };
    Ok(RunOutput {
        subcommand: "gabor-blt".into(),
        results: json!({ "cq_scans": per_q, "blt": blt }),
        csv,
        verdict_ok: ok,
    })
}

// ---------------------------------------------------------------------------
// gramian / sis-diagnostic

fn generators_from(s: &Section) -> Result<GeneratorSet, Fail> {
    let n = get_usize_or(s, "n", 256)?;
    let grid = TorusGrid::new(1, n)?;
    let kmax = get_usize_or(s, "kmax", 4)? as i64;
    let fns: Vec<GeneratorFn> = match get_str_or(s, "generators", "gaussian") {
        "halfcell" => vec![real_generator(|x| {
            if (0.0..0.5).contains(&x) {
                1.0
            } else {
                0.0
            }
        })],
        "sinc" => vec![real_generator(|x| {
            if (-0.5..0.5).contains(&x) {
                1.0
            } else {
                0.0
            }
        })],
        "gaussian" => vec![real_generator(|x| (-std::f64::consts::PI * x * x).exp())],
        "gaussians" => vec![
            real_generator(|x| (-std::f64::consts::PI * x * x).exp()),
            real_generator(|x| (-3.0 * std::f64::consts::PI * x * x).exp()),
        ],
        "hbeta" => {
            let h = HBeta::new(get_f64_or(s, "beta", 0.45)?)?;
            vec![Arc::new(move |x: &[f64]| Complex64::new(h.eval(x[0]), 0.0)) as GeneratorFn]
        }
        other => return Err(Fail::Usage(format!("unknown generators '{other}'"))),
    };
    Ok(GeneratorSet::from_fns(fns, kmax, grid)?)
}

fn lattice_from(s: &Section) -> Result<LatticeSpec, Fail> {
    let v = get_str_or(s, "lattice", "refine:2");
    if let Some(m) = v.strip_prefix("refine:") {
        let m: u32 = m.parse().map_err(|_| Fail::Usage("bad lattice".into()))?;
        return Ok(LatticeSpec::Refine1D { m });
    }
    if let Some(mm) = v.strip_prefix("diagonal:") {
        let Some((a, b)) = mm.split_once('x') else {
            return Err(Fail::Usage("diagonal lattice needs m1xm2".into()));
        };
        return Ok(LatticeSpec::Diagonal2D {
            m1: a.parse().map_err(|_| Fail::Usage("bad lattice".into()))?,
            m2: b.parse().map_err(|_| Fail::Usage("bad lattice".into()))?,
        });
    }
    if v == "quincunx" {
        return Ok(LatticeSpec::Quincunx);
    }
    Err(Fail::Usage(format!("unknown lattice '{v}'")))
}

fn cmd_gramian(s: &Section) -> Result<RunOutput, Fail> {
    let h = generators_from(s)?;
    let lat = lattice_from(s)?;
    let residual = decomposition_residual(&h, &lat)?;
    let rank = rank_formula_check(&h, &lat)?;
    let ev = ev_domination_check(&h, &lat, 1e-8)?;
    let p = gramian(&h)?;
    let j = minimal_generator_count(&p, 1e-8);
    let mut ok = residual < 1e-9 && ev.violations == 0;
    let invariant_now = rank.agreed == Some(true);
    let _ = expect_check(s, "expect_invariant", invariant_now, &mut ok);
    if let Some(expect_j) = s.get("expect_j") {
        let expect_j: usize = expect_j
            .parse()
            .map_err(|_| Fail::Usage("expect_j is not an integer".into()))?;
        if expect_j != j {
            ok = false;
        }
    }
    let rows: Vec<Vec<f64>> = rank
        .per_rho
        .iter()
        .map(|v| {
            vec![
                v.rho,
                v.fraction_holding,
                if v.invariant { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    Ok(RunOutput {
        subcommand: "gramian".into(),
        results: json!({
            "lattice_index": lat.index(),
            "decomposition_residual": residual,
            "rank_formula": {
                "agreed": rank.agreed,
                "per_rho": rank.per_rho.iter().map(|v| json!({
                    "rho": v.rho, "fraction": v.fraction_holding, "invariant": v.invariant
                })).collect::<Vec<_>>(),
                "degenerate": rank.degenerate,
            },
            "j": j,
            "nontrivial": rank.nontrivial,
            "ev_domination": { "checked": ev.checked, "skipped": ev.skipped, "violations": ev.violations },
        }),
        csv: vec![CsvFile {
            name: "rank_formula".into(),
            header: vec!["rho".into(), "fraction".into(), "invariant".into()],
            rows,
        }],
        verdict_ok: ok,
    })
}

fn cmd_sis(s: &Section, opts: &NormOptions) -> Result<RunOutput, Fail> {
    let h = generators_from(s)?;
    let q = get_f64_or(s, "q", 4.0)?;
    let boxes = get_usize_list(s, "boxes").unwrap_or_else(|_| vec![4, 8, 16, 32]);
    let rep = sis_cq_diagnostic(&h, q, &boxes, opts)?;
    let mut ok = true;
    let _ = expect_check(s, "expect_holds", rep.holds, &mut ok);
    // optional frequency-localization verdicts for the generator window
    let loc = if let Ok(ts) = get_f64_list(s, "localization_t") {
        let g = window_from(s)?;
        let levels = get_range(s, "radius_levels").unwrap_or((3..=9).collect());
        let radii: Vec<f64> = levels.iter().map(|&j| 2f64.powi(j as i32)).collect();
        let mut rows = Vec::new();
        for &t in &ts {
            let series = localization_series(&g, Side::Frequency, t, &radii)?;
            let verdict = classify_partial_sums(&series)?;
            let key = format!("expect_finite_t{t}");
            let _ = expect_check(s, &key, verdict == Verdict::Convergent, &mut ok);
            rows.push(json!({ "t": t, "verdict": verdict_str(verdict) }));
        }
        Some(rows)
    } else {
        None
    };
    Ok(RunOutput {
        subcommand: "sis-diagnostic".into(),
        results: json!({
            "q": q,
            "holds": rep.holds,
            "fit": fit_json(&rep.fit),
            "constants": rep.series.points(),
            "min_gram_eigenvalue": rep.min_gram_eigenvalue,
            "localization": loc,
        }),
        csv: vec![CsvFile::from_series(
            "sis_cq",
            &rep.series,
            "box_half_width",
            "d_constant",
        )],
        verdict_ok: ok,
    })
}

// ---------------------------------------------------------------------------
// zeroset

fn cmd_zeroset(s: &Section) -> Result<RunOutput, Fail> {
    let w = sampled_construction(s)?;
    let theta = get_f64_or(s, "theta", get_f64_or(s, "beta", 0.3)?)?;
    let levels = get_range(s, "levels").unwrap_or((4..=8).collect());
    let eps = EpsSchedule::default_for(&w, theta);
    let est = generalized_zero_set(&w, &levels, &eps)?;
    let mut ok = true;
    if let Some(expect_dim) = s.get("expect_dimension") {
        let expect: f64 = expect_dim
            .parse()
            .map_err(|_| Fail::Usage("expect_dimension is not a number".into()))?;
        match est.dimension() {
            Some(d) if (d - expect).abs() <= 0.15 => {}
            _ => ok = false,
        }
    }
    let scan = if let Ok(qs) = get_f64_list(s, "q") {
        let sigma = get_f64_or(s, "sigma", 0.0)?;
        let sv = get_f64_or(s, "s", 0.7)?;
        let r = get_f64_or(s, "r", 2.0)?;
        let rep = hausdorff_obstruction_scan(&w, &est, sigma, sv, r, &qs)?;
        Some(json!({
            "sigma": sigma,
            "vacuous": rep.vacuous,
            "q_threshold_thm": rep.q_threshold_thm,
            "q_threshold_jls": rep.q_threshold_jls,
            "verdicts": rep.verdicts.iter().map(|v| json!({
                "q": v.q, "obstruction": v.obstruction,
                "mass_slope": v.mass_slope, "witness_slope": v.witness_slope,
            })).collect::<Vec<_>>(),
        }))
    } else {
        None
    };
    let poincare = if get_str_or(s, "poincare", "off") == "on" {
        let sv = get_f64_or(s, "s", 0.7)?;
        let r = get_f64_or(s, "r", 2.0)?;
        let balls: Vec<Ball> = (3..=6)
            .map(|j| Ball {
                center: vec![0.0; w.grid().dim()],
                radius: 2f64.powi(-j),
            })
            .collect();
        let rep = poincare_check(&w, &balls, sv, r)?;
        if !rep.bounded {
            ok = false;
        }
        Some(json!({
            "bounded": rep.bounded,
            "empirical_constant": rep.empirical_constant,
            "ratios": rep.ratios,
        }))
    } else {
        None
    };
    let rows: Vec<Vec<f64>> = est
        .levels
        .iter()
        .zip(&est.counts)
        .map(|(&l, &c)| vec![l as f64, c as f64])
        .collect();
    Ok(RunOutput {
        subcommand: "zeroset".into(),
        results: json!({
            "counts": est.counts,
            "dimension": est.dimension(),
            "dimension_fit": est.dimension_fit.map(|f| fit_json(&f)),
            "empty_at_finest": est.empty_at_finest,
            "obstruction_scan": scan,
            "poincare": poincare,
        }),
        csv: vec![CsvFile {
            name: "box_counts".into(),
            header: vec!["level".into(), "count".into()],
            rows,
        }],
        verdict_ok: ok,
    })
}

// ---------------------------------------------------------------------------
// fit

fn cmd_fit(s: &Section) -> Result<RunOutput, Fail> {
    let path = get_str(s, "input")?;
    let text = std::fs::read_to_string(path)?;
    let mut pts = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let p: f64 = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Fail::Usage(format!("bad csv line: {line}")))?;
        let v: f64 = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Fail::Usage(format!("bad csv line: {line}")))?;
        pts.push((p, v));
    }
    let series = ScanSeries::new("stored", pts)?;
    let mode = get_str_or(s, "mode", "loglog");
    let results = match mode {
        "loglog" => {
            let fit = loglog_fit(&series)?;
            json!({ "fit": fit_json(&fit) })
        }
        "classify" => {
            let v = classify(&series)?;
            json!({ "verdict": verdict_str(v) })
        }
        "partial-sums" => {
            let v = classify_partial_sums(&series)?;
            json!({ "verdict": verdict_str(v) })
        }
        other => return Err(Fail::Usage(format!("unknown mode '{other}'"))),
    };
    Ok(RunOutput {
        subcommand: "fit".into(),
        results,
        csv: Vec::new(),
        verdict_ok: true,
    })
}
