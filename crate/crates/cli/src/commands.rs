//! Subcommand argument types and their drivers.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use jmgt_core::decay::{linear_decay_experiment, w_decay_experiment, DataFamily, DecayConfig, DecayExperiment, Verdict};
use jmgt_core::lp::{BesovEvaluator, SpectralSamples};
use jmgt_core::modal::{mode_spectrum, symbol_matrix, ModeSpectrum};
use jmgt_core::model::{read_snapshot, write_snapshot};
use jmgt_core::sim::{make_initial, run_observed, Simulator, TORUS_CAVEAT};
use jmgt_core::util::log_space;
use jmgt_core::{DyadicPartition, Grid, ModelParams, SpectralGrid, SpectralState, SumExponent};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_config, ModalConfig, SimulateConfig};
use crate::error::{CliError, CliResult, EXIT_FAILED, EXIT_OK};
use crate::output::{file_hash, fmt_f64, fmt_opt, gnuplot_script, RunDir, RunManifest, VerdictEntry};
use crate::suites::{param_axis, run_suite, Suite, SuiteOptions};

#[derive(Debug, Parser)]
#[command(name = "jmgt", version, about = "Spectral lab for the Jordan-Moore-Gibson-Thompson equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the mode symbol over |ξ|, or a (τ, β) stability sweep.
    Modal(ModalArgs),
    /// Pseudo-spectral run on a periodic box.
    Simulate(SimulateArgs),
    /// Besov norm of a field snapshot.
    Besov(BesovArgs),
    /// Whole-space decay of Λ^ℓ V and V in Ḃ^σ.
    LinearDecay(DecayArgs),
    /// Whole-space decay of w in Ḃ^σ.
    WDecay(DecayArgs),
    /// Run an acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub xi_min: Option<f64>,
    #[arg(long)]
    pub xi_max: Option<f64>,
    #[arg(long)]
    pub xi_count: Option<usize>,
    /// Sweep (τ, β) over (0, 2]² and report the least stable |ξ| per cell.
    #[arg(long)]
    pub sweep: bool,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BesovArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
    /// 1, 2 or inf.
    #[arg(long, default_value = "1")]
    pub r: String,
    #[arg(long)]
    pub homogeneous: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecayArgs {
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// gaussian, power-gaussian:<a> or w-only.
    #[arg(long)]
    pub data: Option<String>,
    /// Comma-separated ℓ values (linear-decay only).
    #[arg(long, default_value = "0,1,1.5", allow_hyphen_values = true)]
    pub ell_list: String,
    /// Comma-separated σ values.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_list: Option<String>,
    /// Data index: selects the family whose data lie in Ḃ^{-s}_{2,∞}.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub t_decades: f64,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// stability, decay, lp, solver, boundedness or all.
    #[arg(default_value = "all")]
    pub suite: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Force τ > β in every check; the suite must then fail.
    #[arg(long, hide = true)]
    pub negative_control: bool,
}

/// Dispatch a parsed command; the result is the process exit code.
pub fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Modal(a) => modal(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Besov(a) => besov(&a),
        Command::LinearDecay(a) => decay(&a, DecayKind::Linear),
        Command::WDecay(a) => decay(&a, DecayKind::W),
        Command::Verify(a) => verify(&a),
    }
}

pub fn modal_config(a: &ModalArgs) -> CliResult<ModalConfig> {
    let mut cfg = match &a.config {
        Some(p) => load_config::<ModalConfig>(p)?,
        None => ModalConfig {
            tau: 0.5,
            beta: 1.0,
            xi_min: jmgt_core::modal::DEFAULT_XI_MIN,
            xi_max: jmgt_core::modal::DEFAULT_XI_MAX,
            xi_count: None,
            sweep: false,
            grid_count: 100,
            param_max: 2.0,
        },
    };
    if let Some(v) = a.tau {
        cfg.tau = v;
    }
    if let Some(v) = a.beta {
        cfg.beta = v;
    }
    if let Some(v) = a.xi_min {
        cfg.xi_min = v;
    }
    if let Some(v) = a.xi_max {
        cfg.xi_max = v;
    }
    if a.xi_count.is_some() {
        cfg.xi_count = a.xi_count;
    }
    cfg.sweep |= a.sweep;
    cfg.validate()?;
    Ok(cfg)
}

pub const MODAL_HEADER: [&str; 8] = ["tau", "beta", "xi", "re_l1", "re_l2", "re_l3", "abscissa", "stable"];

fn modal_row(tau: f64, beta: f64, xi: f64, s: &ModeSpectrum) -> Vec<String> {
    vec![
        fmt_f64(tau),
        fmt_f64(beta),
        fmt_f64(xi),
        fmt_f64(s.roots[0].re),
        fmt_f64(s.roots[1].re),
        fmt_f64(s.roots[2].re),
        fmt_f64(s.abscissa),
        (s.abscissa < 0.0).to_string(),
    ]
}

/// CSV rows of the `modal` subcommand.
pub fn modal_rows(cfg: &ModalConfig) -> CliResult<Vec<Vec<String>>> {
    let xi = log_space(cfg.xi_min, cfg.xi_max, cfg.xi_count());
    if !cfg.sweep {
        let p = ModelParams::new(cfg.tau, cfg.beta)?;
        return xi
            .iter()
            .map(|&x| Ok(modal_row(p.tau, p.beta, x, &mode_spectrum(&symbol_matrix(x * x, &p)?))))
            .collect();
    }
    // one row per cell, at the |ξ| with the largest abscissa
    let axis = param_axis(cfg.param_max, cfg.grid_count);
    let rows: Vec<Vec<Vec<String>>> = axis
        .par_iter()
        .map(|&tau| {
            axis.iter()
                .map(|&beta| {
                    let p = ModelParams::new(tau, beta)?;
                    let mut best: Option<(f64, ModeSpectrum)> = None;
                    for &x in &xi {
                        let s = mode_spectrum(&symbol_matrix(x * x, &p)?);
                        if best.as_ref().is_none_or(|(_, b)| s.abscissa > b.abscissa) {
                            best = Some((x, s));
                        }
                    }
                    let (x, s) = best.expect("non-empty |ξ| grid");
                    Ok(modal_row(tau, beta, x, &s))
                })
                .collect::<CliResult<Vec<_>>>()
        })
        .collect::<CliResult<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn modal(a: &ModalArgs) -> CliResult<i32> {
    let start = Instant::now();
    let cfg = modal_config(a)?;
    let rows = modal_rows(&cfg)?;
    match &a.out {
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.write_record(MODAL_HEADER)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Some(dir) => {
            let mut rd = RunDir::create(dir)?;
            let unstable = rows.iter().filter(|r| r[7] == "false").count();
            rd.write_csv("modal.csv", &MODAL_HEADER, rows)?;
            let mut m = RunManifest::new("modal", &cfg)?;
            if let Some(p) = &a.config {
                m.input_hashes.insert(p.display().to_string(), file_hash(p)?);
            }
            m.notes.push(format!("{unstable} rows with a non-negative abscissa"));
            m.wall_clock_seconds = start.elapsed().as_secs_f64();
            rd.finish(m)?;
        }
    }
    Ok(EXIT_OK)
}

pub const NORMS_HEADER: [&str; 20] = [
    "t",
    "energy2",
    "e_v_plus_tau_w",
    "e_grad_v_plus_tau_w",
    "e_lap_v",
    "e_grad_v",
    "e_lap_u_plus_tau_v",
    "e_grad_u_plus_tau_v",
    "e_w",
    "cal_e2",
    "d2_integrand",
    "d_grad_v",
    "d_lap_v",
    "d_w",
    "d_lap_u_plus_tau_v",
    "d_grad_v_plus_tau_w",
    "cal_d2",
    "m0",
    "besov_m",
    "fitted_c",
];

fn write_fields(rd: &mut RunDir, tag: &str, t: f64, grid: &Grid, s: &SpectralState, sg: &SpectralGrid) -> CliResult<()> {
    let phys = s.to_physical(sg);
    for (name, data) in [("u", &phys.u), ("v", &phys.v), ("w", &phys.w)] {
        rd.write_with(&format!("{tag}_{name}.bin"), |out| Ok(write_snapshot(out, grid, t, name, data)?))?;
    }
    Ok(())
}

fn simulate(a: &SimulateArgs) -> CliResult<i32> {
    let start = Instant::now();
    let user: SimulateConfig = load_config(&a.config)?;
    let cfg = user.to_sim_config()?;
    let mut rd = RunDir::create(&a.out)?;
    let sim = Simulator::new(cfg.grid, cfg.params, cfg.dt)?;
    let s0 = make_initial(&cfg.initial, &sim.sg)?.to_spectral(&sim.sg);
    let grid = cfg.grid;
    log::info!("simulate: {} steps of dt = {} on {}^{}", cfg.steps(), cfg.dt, grid.n, grid.dim);
    let mut norms = rd.csv_writer("norms.csv")?;
    norms.write_record(NORMS_HEADER)?;
    let mut report_index = 0usize;
    let mut snapshot_err: Option<CliError> = None;
    let mut snapshots = Vec::new();
    let outcome = {
        let mut observer = |s: &SpectralState, r: &jmgt_core::EnergyReport| -> jmgt_core::Result<()> {
            let besov = r.besov_terms.last().map_or(f64::NAN, |(_, v)| *v);
            let mut row = vec![fmt_f64(r.t), fmt_f64(r.energy2)];
            row.extend(r.energy_terms.iter().map(|&x| fmt_f64(x)));
            row.push(fmt_f64(r.cal_e2));
            row.push(fmt_f64(r.cal_d2_integrand));
            row.extend(r.dissipation_terms.iter().map(|&x| fmt_f64(x)));
            row.extend([fmt_f64(r.cal_d2_cum), fmt_f64(r.m0), fmt_f64(besov), fmt_f64(r.fitted_c)]);
            norms
                .write_record(&row)
                .and_then(|_| norms.flush().map_err(csv::Error::from))
                .map_err(|e| jmgt_core::Error::Io(std::io::Error::other(e.to_string())))?;
            let stride = user.snapshot_stride;
            if report_index == 0 || (stride > 0 && report_index.is_multiple_of(stride)) {
                snapshots.push((format!("snap_{report_index:06}"), r.t, s.clone()));
            }
            report_index += 1;
            Ok(())
        };
        run_observed(&sim, s0, cfg.steps(), cfg.report_stride, cfg.track_besov, false, &mut observer)
    };
    drop(norms);
    for (tag, t, s) in &snapshots {
        if let Err(e) = write_fields(&mut rd, tag, *t, &grid, s, &sim.sg) {
            snapshot_err.get_or_insert(e);
        }
    }
    let mut m = RunManifest::new("simulate", &user)?;
    m.seed = Some(user.seed);
    m.input_hashes
        .insert(a.config.display().to_string(), file_hash(&a.config)?);
    m.notes.push(TORUS_CAVEAT.to_string());
    m.notes.push(format!("dt = {}, steps = {}", cfg.dt, cfg.steps()));
    let code = match outcome {
        Ok(rec) => {
            write_fields(&mut rd, "final", rec.reports.last().map_or(0.0, |r| r.t), &grid, &rec.final_state, &sim.sg)?;
            m.verdicts.push(VerdictEntry {
                name: "sup energy ratio".into(),
                verdict: "observed".into(),
                measured: fmt_f64(rec.sup_energy_ratio),
                target: "-".into(),
            });
            m.verdicts.push(VerdictEntry {
                name: "fitted C variation over last half".into(),
                verdict: "observed".into(),
                measured: fmt_f64(rec.c_variation_last_half()),
                target: "-".into(),
            });
            eprintln!(
                "completed {} steps; sup ℰ/ℰ(0) = {:.6}; fitted C = {}",
                rec.steps,
                rec.sup_energy_ratio,
                rec.reports.last().map_or(f64::NAN, |r| r.fitted_c)
            );
            Ok(EXIT_OK)
        }
        Err(e) => {
            let e = CliError::from(e);
            m.verdicts.push(VerdictEntry {
                name: "run".into(),
                verdict: "divergence".into(),
                measured: e.to_string(),
                target: "completion".into(),
            });
            Err(e)
        }
    };
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    rd.finish(m)?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    code
}

pub struct BesovOutput {
    pub norm: f64,
    pub blocks: Vec<(i32, f64)>,
    pub truncation_budget: f64,
    pub warning: Option<String>,
}

pub fn besov_of_snapshot(path: &Path, s: f64, r: SumExponent, homogeneous: bool) -> CliResult<BesovOutput> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let (h, data) = read_snapshot(BufReader::new(file))?;
    let sg = SpectralGrid::new(Grid::new(h.dim, h.n, h.box_len)?)?;
    let samples = SpectralSamples::from_grid(&sg, &sg.forward(&data));
    let ev = if homogeneous {
        BesovEvaluator::covering(&samples.k, true)?
    } else {
        let k_hi = samples.k.iter().copied().fold(0.0, f64::max).max(1.0);
        let q_max = k_hi.log2().ceil() as i32 + 1;
        BesovEvaluator::new(DyadicPartition { q_min: -1, q_max }, false, &samples.k)
    };
    let n = ev.norm(&samples.mass, s, r);
    Ok(BesovOutput {
        norm: n.value,
        blocks: n.blocks,
        truncation_budget: n.truncation_budget,
        warning: n.warning,
    })
}

fn besov(a: &BesovArgs) -> CliResult<i32> {
    let r = SumExponent::parse(&a.r)?;
    let out = besov_of_snapshot(&a.input, a.s, r, a.homogeneous)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "norm,{}", fmt_f64(out.norm))?;
    writeln!(stdout, "truncation_budget,{}", fmt_f64(out.truncation_budget))?;
    if let Some(w) = &out.warning {
        eprintln!("warning: {w}");
    }
    writeln!(stdout, "q,weighted_block_norm")?;
    for (q, v) in &out.blocks {
        writeln!(stdout, "{q},{}", fmt_f64(*v))?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Linear,
    W,
}

fn parse_list(name: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("--{name}: {t:?}: {e}")))
        })
        .collect()
}

/// Family named by `--data`, or the one whose data index is `--s`; both
/// must agree when given.
pub fn decay_family(data: Option<&str>, s: Option<f64>) -> CliResult<DataFamily> {
    let from_s = |s: f64| -> CliResult<DataFamily> {
        if (s - 1.5).abs() < 1e-12 {
            Ok(DataFamily::Gaussian)
        } else if s > 1.5 {
            Ok(DataFamily::PowerGaussian { a: s - 1.5 })
        } else {
            Err(CliError::Config(format!("no built-in data family has index s = {s} (need s ≥ 3/2)")))
        }
    };
    match (data, s) {
        (None, None) => Ok(DataFamily::Gaussian),
        (None, Some(s)) => from_s(s),
        (Some(d), None) => Ok(DataFamily::parse(d)?),
        (Some(d), Some(s)) => {
            let f = DataFamily::parse(d)?;
            match f.besov_index() {
                Some(idx) if (idx - s).abs() < 1e-12 => Ok(f),
                other => Err(CliError::Config(format!(
                    "--s {s} disagrees with --data {d} (index {other:?})"
                ))),
            }
        }
    }
}

pub fn decay_experiment(a: &DecayArgs, kind: DecayKind) -> CliResult<DecayExperiment> {
    let tau = a.tau.unwrap_or(match kind {
        DecayKind::Linear => 0.5,
        DecayKind::W => 0.1,
    });
    let params = ModelParams::new(tau, a.beta)?;
    let family = decay_family(a.data.as_deref(), a.s)?;
    let mut cfg = DecayConfig::new(params, family).with_decades(a.t_decades)?;
    cfg.tolerance = a.tolerance.unwrap_or(match kind {
        DecayKind::Linear => 0.05,
        DecayKind::W => 0.1,
    });
    match kind {
        DecayKind::Linear => {
            let ells = parse_list("ell-list", &a.ell_list)?;
            let sigmas = parse_list("sigma-list", a.sigma_list.as_deref().unwrap_or("0,1,1.5,2.5"))?;
            Ok(linear_decay_experiment(&cfg, &ells, &sigmas)?)
        }
        DecayKind::W => {
            let sigmas = parse_list("sigma-list", a.sigma_list.as_deref().unwrap_or("1.5"))?;
            Ok(w_decay_experiment(&cfg, &sigmas)?)
        }
    }
}

pub const VERDICT_HEADER: [&str; 8] = ["quantity", "slope", "ci95", "theory", "tolerance", "curvature", "verdict", "note"];

pub fn verdict_rows(exp: &DecayExperiment) -> Vec<Vec<String>> {
    exp.rows
        .iter()
        .map(|r| match &r.fit {
            Some(f) => vec![
                r.label.clone(),
                fmt_f64(f.slope),
                fmt_f64(f.ci),
                fmt_opt(f.theory),
                fmt_f64(f.tolerance),
                fmt_f64(f.curvature),
                f.verdict.to_string(),
                String::new(),
            ],
            None => vec![
                r.label.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                Verdict::Fail.to_string(),
                r.error.clone().unwrap_or_default(),
            ],
        })
        .collect()
}

fn decay(a: &DecayArgs, kind: DecayKind) -> CliResult<i32> {
    let start = Instant::now();
    let exp = decay_experiment(a, kind)?;
    log::info!("{:?} decay: {} quantities for {}", kind, exp.rows.len(), exp.family);
    let verdicts = verdict_rows(&exp);
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{:<28} {:>10} {:>10} {:>10}  verdict", "quantity", "slope", "theory", "curvature")?;
    for v in &verdicts {
        writeln!(stdout, "{:<28} {:>10} {:>10} {:>10}  {}", v[0], short(&v[1]), short(&v[3]), short(&v[5]), v[6])?;
    }
    if let Some(ok) = exp.tau_small_enough {
        writeln!(stdout, "tau*lambda < 1: {ok} (lambda = {})", fmt_opt(exp.lambda))?;
    }
    let failed = exp.rows.iter().filter(|r| r.verdict() == Verdict::Fail).count();
    if let Some(dir) = &a.out {
        let name = match kind {
            DecayKind::Linear => "linear-decay",
            DecayKind::W => "w-decay",
        };
        let mut rd = RunDir::create(dir)?;
        let mut header = vec!["t".to_string()];
        header.extend(exp.series.iter().map(|s| s.label.clone()));
        let times = exp.series.first().map(|s| s.times.clone()).unwrap_or_default();
        let rows = times.iter().enumerate().map(|(i, &t)| {
            let mut row = vec![fmt_f64(t)];
            row.extend(exp.series.iter().map(|s| fmt_f64(s.values[i])));
            row
        });
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        rd.write_csv("decay.csv", &header_refs, rows)?;
        rd.write_csv("verdicts.csv", &VERDICT_HEADER, verdicts.clone())?;
        rd.write_text("decay.gp", &gnuplot_script("decay.csv", name, header.len(), true))?;
        let mut m = RunManifest::new(name, a)?;
        m.verdicts = verdicts
            .iter()
            .map(|v| VerdictEntry {
                name: v[0].clone(),
                verdict: v[6].clone(),
                measured: v[1].clone(),
                target: v[3].clone(),
            })
            .collect();
        m.wall_clock_seconds = start.elapsed().as_secs_f64();
        rd.finish(m)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILED })
}

fn short(s: &str) -> String {
    s.parse::<f64>().map_or_else(|_| s.to_string(), |x| format!("{x:.4}"))
}

fn verify(a: &VerifyArgs) -> CliResult<i32> {
    let start = Instant::now();
    let suite = Suite::parse(&a.suite)?;
    let opts = SuiteOptions {
        broken: a.negative_control,
    };
    log::info!("verify {:?}: criteria {:?}", suite, suite.criteria());
    let results = run_suite(suite, &opts, |r| println!("{}", r.line()));
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if let Some(dir) = &a.out {
        let mut rd = RunDir::create(dir)?;
        rd.write_csv(
            "verdicts.csv",
            &["id", "name", "passed", "measured", "target", "tolerance", "seconds"],
            results.iter().map(|r| {
                vec![
                    r.id.to_string(),
                    r.name.to_string(),
                    r.passed.to_string(),
                    r.measured.clone(),
                    r.target.clone(),
                    r.tolerance.clone(),
                    format!("{:.3}", r.seconds),
                ]
            }),
        )?;
        let mut m = RunManifest::new("verify", a)?;
        m.verdicts = results
            .iter()
            .map(|r| VerdictEntry {
                name: format!("{}. {}", r.id, r.name),
                verdict: if r.passed { "pass" } else { "fail" }.into(),
                measured: r.measured.clone(),
                target: r.target.clone(),
            })
            .collect();
        m.wall_clock_seconds = start.elapsed().as_secs_f64();
        rd.finish(m)?;
    }
    Ok(if passed == results.len() { EXIT_OK } else { EXIT_FAILED })
}
