//! `iscc`: scenario generation, optimization, sweeps, validation, detection and fitting.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use iscc_core::admm::{AdmmConfig, Message};
use iscc_core::experiment::{run_scheme, run_sweep, write_residual_csv, write_sweep_csv, Scheme, SweepAxis, SweepSpec};
use iscc_core::scenario::{generate_scenario, Scenario, ScenarioParams};
use iscc_core::signal::io::{load_trace, write_detections, write_labels, write_trace};
use iscc_core::signal::{detect_onsets, generate_csi_trace, WindowSpec};
use iscc_core::stats::fit::onset_schedule;
use iscc_core::stats::{crossing_point, default_model, fit_model_params, FitConfig};
use iscc_core::SensingModelParams;
use iscc_core::units::parse_frequency;
use iscc_core::validate::{validate, Budget, Target};
use iscc_core::Solution;

#[derive(Parser)]
#[command(name = "iscc", version, about = "Multi-device sensing and edge allocation toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a scenario file.
    Gen(GenArgs),
    /// Optimize one scheme on a scenario.
    Optimize(OptimizeArgs),
    /// Sweep one parameter for several schemes.
    Sweep(SweepArgs),
    /// Run a validation suite; exits nonzero on failure.
    Validate(ValidateArgs),
    /// Synthesize a labeled CSI trace.
    Synth(SynthArgs),
    /// Run the onset detector over a trace file.
    Detect(DetectArgs),
    /// Fit the sensing model to labeled traces.
    Fit(FitArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// ADMM penalty in normalized units.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Primal tolerance relative to the total edge compute.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 200)]
    imax: usize,
}

impl SolverArgs {
    fn config(&self) -> AdmmConfig<f64> {
        AdmmConfig {
            rho: self.rho,
            eps_rel: self.eps,
            i_max: self.imax,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator parameters (JSON); defaults when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override the device count.
    #[arg(long)]
    devices: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// proposed | conventional | fixed-tau=<s>
    #[arg(long, default_value = "proposed")]
    scheme: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Include the per-round message transcript in the run artifact.
    #[arg(long)]
    transcript: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// edge_compute | static_prob | permitted_delay | device_count
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values; edge compute accepts units such as 20GHz.
    #[arg(long)]
    values: String,
    /// Comma-separated schemes.
    #[arg(long, default_value = "proposed,conventional,fixed-tau=0.3,fixed-tau=0.5")]
    scheme: String,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// prop1 | thm1 | thm2 | fit | parseval | all
    #[arg(long, default_value = "all")]
    target: String,
    /// Draws per Monte-Carlo point.
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario whose sensing model is used; the default model when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Sampling rate, Hz.
    #[arg(long, default_value_t = 200.0)]
    rate: f64,
    /// Onsets per action class.
    #[arg(long, default_value_t = 5)]
    onsets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Sampling rate of the trace, Hz.
    #[arg(long)]
    sample_rate: f64,
    /// Detector time step, s.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Threshold; the model's crossing point when omitted.
    #[arg(long)]
    eta: Option<f64>,
    /// Scenario supplying the sensing model; the default model when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Trace files; repeat once per trace.
    #[arg(long, required = true)]
    trace: Vec<PathBuf>,
    /// Label files, one per trace.
    #[arg(long, required = true)]
    labels: Vec<PathBuf>,
    /// Sampling rates, one per trace, Hz.
    #[arg(long, required = true)]
    sample_rate: Vec<f64>,
    /// Comma-separated time steps of the fitting grid, s.
    #[arg(long, default_value = "0.2,0.3,0.4,0.5,0.6")]
    taus: String,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Optimize(a) => optimize(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Validate(a) => validate_cmd(a),
        Cmd::Synth(a) => synth(a),
        Cmd::Detect(a) => detect(a),
        Cmd::Fit(a) => fit(a),
    }
}

fn out_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn load_scenario(p: &Path) -> Result<Scenario> {
    Scenario::load(p).with_context(|| format!("loading scenario {}", p.display()))
}

fn model_of(p: &Option<PathBuf>) -> Result<SensingModelParams> {
    Ok(match p {
        Some(p) => load_scenario(p)?.model,
        None => default_model(),
    })
}

fn list<T>(s: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(|x| parse(x.trim())).collect()
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let mut params = match &a.params {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => ScenarioParams::default(),
    };
    if let Some(k) = a.devices {
        params.devices = k;
    }
    let s = generate_scenario(&params, a.seed)?;
    out_dir(&a.out)?;
    let path = a.out.join("scenario.json");
    s.save(&path)?;
    println!("wrote {} ({} devices, seed {})", path.display(), s.devices.len(), a.seed);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RunArtifact<'a> {
    scheme: String,
    solution: &'a Solution,
    /// Primal residual per round, cycles/s.
    residuals: Vec<f64>,
    /// Dual residual per round, cycles/s.
    dual_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<Vec<Message<f64>>>,
}

fn optimize(a: OptimizeArgs) -> Result<ExitCode> {
    let s = load_scenario(&a.scenario)?;
    let scheme: Scheme = a.scheme.parse()?;
    let run = run_scheme(&s, scheme, &a.solver.config(), None)?;
    out_dir(&a.out)?;
    let si = |v: &[f64]| v.iter().map(|x| x * run.unit).collect();
    let art = RunArtifact {
        scheme: scheme.to_string(),
        solution: &run.solution,
        residuals: si(&run.state.residual_history),
        dual_residuals: si(&run.state.dual_history),
        transcript: a.transcript.then(|| {
            run.transcript()
                .into_iter()
                .map(|m| Message { value: m.value * run.unit, ..m })
                .collect()
        }),
    };
    fs::write(a.out.join("run.json"), serde_json::to_string_pretty(&art)?)?;
    write_residual_csv(&run, File::create(a.out.join("residuals.csv"))?)?;
    let sol = &run.solution;
    println!(
        "{scheme}: accuracy {:.6}, {} iterations, converged {}",
        sol.accuracy, sol.iterations, sol.converged
    );
    for (d, f) in sol.decisions.iter().zip(&sol.allocations) {
        println!("  F {:>4} Hz  tau {:.4} s  edge {:.4e} cycles/s  accuracy {:.4}", d.f, d.tau, f, d.accuracy);
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let s = load_scenario(&a.scenario)?;
    let axis: SweepAxis = a.axis.parse()?;
    let values = list(&a.values, |x| {
        Ok(match axis {
            SweepAxis::EdgeCompute => parse_frequency(x)?,
            _ => x.parse().with_context(|| format!("bad axis value {x:?}"))?,
        })
    })?;
    let schemes = list(&a.scheme, |x| Ok(x.parse::<Scheme>()?))?;
    let spec = SweepSpec { axis, values, schemes };
    let rows = run_sweep(&s, &spec, &a.solver.config())?;
    out_dir(&a.out)?;
    let path = a.out.join(format!("sweep_{axis}.csv"));
    write_sweep_csv(&rows, File::create(&path)?)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn validate_cmd(a: ValidateArgs) -> Result<ExitCode> {
    let targets = if a.target == "all" {
        Target::ALL.to_vec()
    } else {
        vec![a.target.parse()?]
    };
    let budget = Budget {
        mc_samples: a.mc_samples,
        seed: a.seed,
        ..Budget::default()
    };
    out_dir(&a.out)?;
    let mut ok = true;
    for t in targets {
        let rep = validate(t, &budget)?;
        let text = rep.to_text();
        print!("{text}");
        fs::write(a.out.join(format!("validate_{t}.txt")), &text)?;
        fs::write(a.out.join(format!("validate_{t}.json")), serde_json::to_string_pretty(&rep)?)?;
        ok &= rep.passed;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn synth(a: SynthArgs) -> Result<ExitCode> {
    let m = model_of(&a.scenario)?;
    let sched = onset_schedule(&m, a.onsets, 2.5, 2.0);
    let trace = generate_csi_trace(&m, &sched, a.rate, a.seed)?;
    out_dir(&a.out)?;
    write_trace(&trace, File::create(a.out.join("trace.csv"))?)?;
    write_labels(&trace.labels, File::create(a.out.join("labels.csv"))?)?;
    println!("wrote trace.csv and labels.csv ({} samples at {} Hz)", trace.len(), a.rate);
    Ok(ExitCode::SUCCESS)
}

fn detect(a: DetectArgs) -> Result<ExitCode> {
    let m = model_of(&a.scenario)?;
    let trace = load_trace(&a.trace, None, a.sample_rate)?;
    let eta = match a.eta {
        Some(e) => e,
        None => crossing_point(&m, a.sample_rate, a.tau)?.eta,
    };
    let spec = WindowSpec::new(m.window_len_s, a.tau, m.band_lo_hz, m.band_hi_hz)?;
    let events = detect_onsets(&trace, &spec, eta)?;
    out_dir(&a.out)?;
    write_detections(&events, File::create(a.out.join("detections.csv"))?)?;
    println!("{} onsets detected with threshold {eta:.6}", events.len());
    Ok(ExitCode::SUCCESS)
}

fn fit(a: FitArgs) -> Result<ExitCode> {
    if a.trace.len() != a.labels.len() || a.trace.len() != a.sample_rate.len() {
        bail!("--trace, --labels and --sample-rate must be given the same number of times");
    }
    let m = model_of(&a.scenario)?;
    let taus = list(&a.taus, |x| x.parse::<f64>().with_context(|| format!("bad time step {x:?}")))?;
    let traces = a
        .trace
        .iter()
        .zip(&a.labels)
        .zip(&a.sample_rate)
        .map(|((t, l), &f)| load_trace(t, Some(l), f).with_context(|| format!("loading {}", t.display())))
        .collect::<Result<Vec<_>>>()?;
    let mut rates = a.sample_rate.clone();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let grid: Vec<(f64, f64)> = rates.iter().flat_map(|&f| taus.iter().map(move |&t| (f, t))).collect();
    let rep = fit_model_params(&traces, &grid, &FitConfig::for_model(&m))?;
    out_dir(&a.out)?;
    fs::write(a.out.join("fit.json"), serde_json::to_string_pretty(&rep)?)?;
    for c in &rep.params.classes {
        println!("class {}: lambda {:.4}, r {:.3}, sigma_d_sq {:.3e}", c.class_id, c.lambda, c.r, c.sigma_d_sq);
    }
    println!("sigma_c_sq {:.4}, worst NMSE {:.4}", rep.params.sigma_c_sq, rep.worst_nmse());
    Ok(ExitCode::SUCCESS)
}
