//! Command implementations behind the `headpos` binary.
//!
//! Every command writes its outputs plus a `manifest.txt` into one directory and is
//! deterministic for a fixed seed.

use std::fmt::Write as _;
use std::fs;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use headpos::control::{build_cascade, pi_tf, ControllerConfig, DelayMode, LoopTopology};
use headpos::kv::KvDoc;
use headpos::link::{memory_channel, LossyTx, UdpRx, UdpTx, DEFAULT_PORT};
use headpos::lti::{
    feedback_unity, freq_response, log_grid, series, step_metrics, step_response, TimeSeries,
};
use headpos::signal::{acf, ar_fit, ccf, prewhiten};
use headpos::sim::{
    open_loop_excite, simulate_closed_loop_with, SawtoothSpec, SensorPath, SimConfig, SimError,
    SimRun, TrackingMetrics, Trajectory, SAWTOOTH_KEYS, SIM_CONFIG_KEYS,
};
use headpos::sysid::{
    compute_metrics, default_delay_candidates, fit_noise_model, fit_process_model,
    residual_analysis, DatasetZN, NoiseModel, ProcessModel, Role,
};
use headpos::{Error as CoreError, ErrorKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INSTABILITY: i32 = 4;

/// AR order of the prewhitening filter.
const PREWHITEN_ORDER: usize = 20;
/// Lags reported by the correlation diagnostics.
const MAX_LAG: usize = 100;
/// Lags of the residual tests.
const RESIDUAL_LAGS: usize = 50;
/// Longest wait for one UDP sensor frame before the receiver repeats the last value.
const UDP_WAIT: Duration = Duration::from_millis(5);
/// Reference height for the default constant-setpoint experiment, cm.
const DEFAULT_SETPOINT_CM: f64 = 25.32;

#[derive(Debug, Parser)]
#[command(
    name = "headpos",
    version,
    about = "Identification, control design and simulation for a pneumatic head-positioning robot"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate estimation and validation datasets from a sawtooth excitation.
    Generate(GenerateArgs),
    /// Fit a process and noise model to a `t,u,y` dataset.
    Identify(IdentifyArgs),
    /// Analyse the PI and PID-PI cascade around a model.
    Design(DesignArgs),
    /// Run the closed-loop tracking simulation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// key=value settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Random seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Plant model file; defaults to the reference plant.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Estimation dataset (`t,u,y`).
    pub dataset: PathBuf,
    /// Separate validation dataset; the estimation data is reused when absent.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Model file.
    pub model: PathBuf,
    /// Controller gains file; defaults to the reference tuning.
    #[arg(long)]
    pub controller: Option<PathBuf>,
    /// Step-response horizon, s.
    #[arg(long, default_value_t = 600.0)]
    pub horizon: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Net {
    /// Sensor frames go straight to the filter.
    Off,
    /// Frames are encoded and passed through an in-process channel.
    Loopback,
    /// Frames travel over UDP on 127.0.0.1.
    Udp,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model file.
    pub model: PathBuf,
    /// Controller gains file; defaults to the reference tuning.
    #[arg(long)]
    pub controller: Option<PathBuf>,
    /// Setpoint CSV with header `t,setpoint`; defaults to a constant 25.32 cm.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Net::Off)]
    pub net: Net,
    /// Injected packet-loss probability.
    #[arg(long, default_value_t = 0.0)]
    pub loss: f64,
    /// UDP port; run `k` of `--seeds` uses `port + k`.
    #[arg(long, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    /// Number of independent runs with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub seeds: u32,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Numerical => EXIT_NUMERICAL,
                ErrorKind::Io => EXIT_OTHER,
            },
            CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                EXIT_VALIDATION
            }
            CliError::Io { .. } => EXIT_OTHER,
            CliError::Usage(_) => EXIT_VALIDATION,
        }
    }
}

fn core<E: Into<CoreError>>(e: E) -> CliError {
    CliError::Core(e.into())
}

/// Result of a successful command.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    /// Non-fatal findings; a command with warnings exits with [`EXIT_INSTABILITY`].
    pub warnings: Vec<String>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() {
            EXIT_OK
        } else {
            EXIT_INSTABILITY
        }
    }
}

/// Output directory with a record of what was written.
struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Inputs and settings recorded in `manifest.txt`.
struct Manifest<'a> {
    command: &'a str,
    config: Option<&'a Path>,
    inputs: Vec<&'a Path>,
    seed: Option<u64>,
    extra: Vec<(String, String)>,
}

impl Manifest<'_> {
    fn render(&self, outputs: &[String], wall: Duration) -> String {
        let mut s = String::new();
        let path =
            |p: Option<&Path>| p.map_or_else(|| "-".to_string(), |p| p.display().to_string());
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "config={}", path(self.config));
        let inputs: Vec<String> = self
            .inputs
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        let _ = writeln!(
            s,
            "inputs={}",
            if inputs.is_empty() {
                "-".into()
            } else {
                inputs.join(",")
            }
        );
        let _ = writeln!(s, "outputs={}", outputs.join(","));
        let _ = writeln!(
            s,
            "seed={}",
            self.seed.map_or_else(|| "-".to_string(), |v| v.to_string())
        );
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "wall_time_s={:.3}", wall.as_secs_f64());
        s
    }
}

fn finish(
    mut out: OutDir,
    manifest: Manifest<'_>,
    started: Instant,
    warnings: Vec<String>,
    summary: String,
) -> Result<Outcome, CliError> {
    let text = manifest.render(&out.files, started.elapsed());
    out.write("manifest.txt", &text)?;
    Ok(Outcome {
        files: out.files,
        warnings,
        summary,
    })
}

/// Shared settings file: simulation keys plus excitation keys.
fn load_settings(path: Option<&Path>) -> Result<(SimConfig<f64>, SawtoothSpec<f64>), CliError> {
    let Some(path) = path else {
        return Ok((SimConfig::default(), SawtoothSpec::default()));
    };
    let text = read(path)?;
    let doc = KvDoc::parse(&text).map_err(core)?;
    let keys: Vec<&str> = SIM_CONFIG_KEYS
        .iter()
        .chain(SAWTOOTH_KEYS.iter())
        .copied()
        .collect();
    doc.reject_unknown(&keys).map_err(core)?;
    Ok((
        SimConfig::from_kv(&doc).map_err(core)?,
        SawtoothSpec::from_kv(&doc).map_err(core)?,
    ))
}

fn load_model(path: &Path) -> Result<(ProcessModel<f64>, Option<NoiseModel<f64>>), CliError> {
    ProcessModel::from_file_str(&read(path)?).map_err(core)
}

fn load_controller(path: Option<&Path>) -> Result<ControllerConfig<f64>, CliError> {
    match path {
        None => Ok(ControllerConfig::reference()),
        Some(p) => ControllerConfig::from_file_str(&read(p)?).map_err(core),
    }
}

fn load_dataset(path: &Path, role: Role) -> Result<DatasetZN<f64>, CliError> {
    let text = read(path)?;
    DatasetZN::read_csv(text.as_bytes(), role).map_err(core)
}

fn dataset_csv(z: &DatasetZN<f64>) -> Result<String, CliError> {
    let mut v = Vec::new();
    z.write_csv(&mut v).map_err(core)?;
    Ok(String::from_utf8(v).expect("csv output is ascii"))
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Identify(a) => cmd_identify(&a),
        Command::Design(a) => cmd_design(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

/// Writes `estimation.csv` (seed `s`) and `validation.csv` (seed `s + 1`).
pub fn cmd_generate(a: &GenerateArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let (mut cfg, saw) = load_settings(a.common.config.as_deref())?;
    if let Some(s) = a.common.seed {
        cfg.seed = s;
    }
    let plant = match &a.model {
        Some(p) => load_model(p)?.0,
        None => ProcessModel::reference(),
    };
    let tf = plant.to_tf().map_err(core)?;
    let est = open_loop_excite(&tf, &saw, &cfg).map_err(core)?;
    let val_cfg = SimConfig {
        seed: cfg.seed.wrapping_add(1),
        ..cfg.clone()
    };
    let mut val = open_loop_excite(&tf, &saw, &val_cfg).map_err(core)?;
    val.role = Role::Validation;

    let mut out = OutDir::create(&a.common.out)?;
    out.write("estimation.csv", &dataset_csv(&est)?)?;
    out.write("validation.csv", &dataset_csv(&val)?)?;
    let summary = format!(
        "generated 2 datasets of {} samples (dt = {} s, seed {})",
        est.len(),
        cfg.dt,
        cfg.seed
    );
    let manifest = Manifest {
        command: "generate",
        config: a.common.config.as_deref(),
        inputs: a.model.iter().map(|p| p.as_path()).collect(),
        seed: Some(cfg.seed),
        extra: vec![("validation_seed".into(), val_cfg.seed.to_string())],
    };
    finish(out, manifest, started, Vec::new(), summary)
}

/// Detrend, prewhitening diagnostics, process-model fit, noise model and residual analysis.
pub fn cmd_identify(a: &IdentifyArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    if a.common.config.is_some() {
        load_settings(a.common.config.as_deref())?;
    }
    let z = load_dataset(&a.dataset, Role::Estimation)?;
    let zd = z.detrended().map_err(core)?;
    let mut out = OutDir::create(&a.common.out)?;
    let mut warnings = Vec::new();

    let max_lag = MAX_LAG.min(zd.len().saturating_sub(1));
    out.write(
        "ccf_raw.csv",
        &ccf(&zd.u, &zd.y, max_lag).map_err(core)?.to_csv(),
    )?;
    match ar_fit(&zd.u, PREWHITEN_ORDER) {
        Ok(w) => {
            let (uw, yw) = prewhiten(&zd.u, &zd.y, &w).map_err(core)?;
            let lag = max_lag.min(uw.len().saturating_sub(1));
            out.write(
                "prewhitened_input_acf.csv",
                &acf(&uw, lag).map_err(core)?.to_csv(),
            )?;
            out.write(
                "prewhitened_ccf.csv",
                &ccf(&uw, &yw, lag).map_err(core)?.to_csv(),
            )?;
        }
        Err(e) => warnings.push(format!("prewhitening skipped: {e}")),
    }

    let (model, fit) = fit_process_model(&zd, &default_delay_candidates(zd.dt())).map_err(core)?;
    let est_res = residual_analysis(&zd, &model, RESIDUAL_LAGS).map_err(core)?;
    let noise = match fit_noise_model(&est_res.alpha) {
        Ok(n) => Some(n),
        Err(e) => {
            warnings.push(format!("noise model not fitted: {e}"));
            None
        }
    };
    let zv = match &a.validation {
        Some(p) => load_dataset(p, Role::Validation)?
            .detrended()
            .map_err(core)?,
        None => zd.clone(),
    };
    let val_fit = compute_metrics(&zv, &model).map_err(core)?;
    let res = residual_analysis(&zv, &model, RESIDUAL_LAGS).map_err(core)?;
    out.write("residual_input_cov.csv", &res.r_alpha_u.to_csv())?;
    out.write("residual_acf.csv", &res.alpha_acf.to_csv())?;
    out.write("model.txt", &model.to_file_string(noise.as_ref()))?;

    let mut report = String::new();
    let _ = writeln!(report, "fit_percent={}", fit.fit_percent);
    let _ = writeln!(report, "mse={}", fit.mse);
    let _ = writeln!(report, "fpe={}", fit.fpe);
    let _ = writeln!(report, "validation_fit_percent={}", val_fit.fit_percent);
    let _ = writeln!(report, "validation_mse={}", val_fit.mse);
    let _ = writeln!(report, "residual_max={}", res.s1);
    let _ = writeln!(report, "residual_rms={}", res.s2);
    let _ = writeln!(report, "covariance_band={}", res.band);
    let _ = writeln!(report, "covariance_band_pass={}", res.band_pass);
    out.write("report.txt", &report)?;
    if !res.band_pass {
        warnings.push("residual/input covariance leaves the 99% band".into());
    }

    let summary = format!(
        "Kp={:.5} Tz={:.5} Tp1={:.4} Tp2={:.4} Td={} fit={:.2}% FPE={:.5}",
        model.kp, model.tz, model.tp1, model.tp2, model.td, fit.fit_percent, fit.fpe
    );
    let mut inputs = vec![a.dataset.as_path()];
    inputs.extend(a.validation.as_deref());
    let manifest = Manifest {
        command: "identify",
        config: a.common.config.as_deref(),
        inputs,
        seed: a.common.seed,
        extra: Vec::new(),
    };
    finish(out, manifest, started, warnings, summary)
}

fn metrics_line(name: &str, s: &TimeSeries<f64>) -> String {
    match step_metrics(s) {
        Ok(m) => format!(
            "{name}_rise_time={}\n{name}_settling_time={}\n{name}_overshoot={}\n{name}_steady_state={}\n",
            m.rise_time, m.settling_time, m.overshoot, m.steady_state
        ),
        Err(e) => format!("{name}_metrics=unavailable ({e})\n"),
    }
}

/// Step responses, Bode data, step metrics and stability verdicts for the designed loops.
pub fn cmd_design(a: &DesignArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    if !(a.horizon > 0.0 && a.horizon.is_finite()) {
        return Err(CliError::Usage(format!(
            "--horizon must be > 0, got {}",
            a.horizon
        )));
    }
    let (model, _) = load_model(&a.model)?;
    let c = load_controller(a.controller.as_deref())?;
    let plant = model.to_tf().map_err(core)?;
    let dt = 0.05;
    let mut out = OutDir::create(&a.common.out)?;

    let open = step_response(&plant, a.horizon, dt).map_err(core)?;
    out.write("open_loop_step.csv", &open.to_csv())?;
    let plant_pade = plant.with_pade(2).map_err(core)?;
    let pi_loop = feedback_unity(&series(&pi_tf(&c.pi), &plant_pade)).map_err(core)?;
    let pi_step = step_response(&pi_loop, a.horizon, dt).map_err(core)?;
    out.write("pi_closed_loop_step.csv", &pi_step.to_csv())?;
    let topo = LoopTopology::new(c.pid, c.pi, plant.clone(), DelayMode::Pade2).map_err(core)?;
    let design = build_cascade(&topo).map_err(core)?;
    let cascade_step = step_response(&design.closed_loop, a.horizon, dt).map_err(core)?;
    out.write("cascade_step.csv", &cascade_step.to_csv())?;
    let grid = log_grid(1e-4, 1e2, 400);
    out.write(
        "bode_open_loop.csv",
        &freq_response(&series(&pi_tf(&c.pi), &plant), &grid)
            .map_err(core)?
            .to_csv(),
    )?;
    out.write(
        "bode_cascade.csv",
        &freq_response(&design.closed_loop, &grid)
            .map_err(core)?
            .to_csv(),
    )?;

    let mut m = String::new();
    m.push_str(&metrics_line("open_loop", &open));
    m.push_str(&metrics_line("pi_closed_loop", &pi_step));
    m.push_str(&metrics_line("cascade", &cascade_step));
    let _ = writeln!(m, "inner_loop_stable={}", design.inner_stability.stable);
    let _ = writeln!(m, "cascade_stable={}", design.stability.stable);
    let poles: Vec<String> = design
        .stability
        .poles
        .iter()
        .map(|p| format!("{}{:+}j", p.re, p.im))
        .collect();
    let _ = writeln!(m, "cascade_poles={}", poles.join(" "));
    out.write("metrics.txt", &m)?;

    let warnings: Vec<String> = design.warnings.iter().map(|w| w.to_string()).collect();
    let summary = match step_metrics(&cascade_step) {
        Ok(sm) => format!(
            "cascade rise {:.2} s, settling {:.1} s, stable {}",
            sm.rise_time, sm.settling_time, design.stability.stable
        ),
        Err(_) => format!("cascade stable {}", design.stability.stable),
    };
    let mut inputs = vec![a.model.as_path()];
    inputs.extend(a.controller.as_deref());
    let manifest = Manifest {
        command: "design",
        config: a.common.config.as_deref(),
        inputs,
        seed: a.common.seed,
        extra: Vec::new(),
    };
    finish(out, manifest, started, warnings, summary)
}

/// One closed-loop run over the selected sensor path.
pub fn simulate_one(
    topo: &LoopTopology<f64>,
    traj: &Trajectory<f64>,
    cfg: &SimConfig<f64>,
    net: Net,
    loss: f64,
    port: u16,
) -> Result<SimRun<f64>, SimError> {
    match net {
        Net::Off => simulate_closed_loop_with(topo, traj, cfg, SensorPath::Direct),
        Net::Loopback => {
            let (tx, mut rx) = memory_channel();
            let mut tx = LossyTx::new(tx, loss, 0, cfg.seed ^ 0x5eed)?;
            simulate_closed_loop_with(
                topo,
                traj,
                cfg,
                SensorPath::Link {
                    tx: &mut tx,
                    rx: &mut rx,
                    wait: Duration::ZERO,
                },
            )
        }
        Net::Udp => {
            let mut rx = UdpRx::bind(SocketAddr::V4(SocketAddrV4::new(Ipv4Addr::LOCALHOST, port)))?;
            let addr = rx.local_addr()?;
            let mut tx = LossyTx::new(UdpTx::connect(addr)?, loss, 0, cfg.seed ^ 0x5eed)?;
            simulate_closed_loop_with(
                topo,
                traj,
                cfg,
                SensorPath::Link {
                    tx: &mut tx,
                    rx: &mut rx,
                    wait: UDP_WAIT,
                },
            )
        }
    }
}

/// Closed-loop simulation, optionally over the sensor link, for one or more seeds.
pub fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&a.loss) {
        return Err(CliError::Usage(format!(
            "--loss must lie in [0, 1), got {}",
            a.loss
        )));
    }
    if a.net == Net::Off && a.loss > 0.0 {
        return Err(CliError::Usage(
            "--loss needs --net loopback or --net udp".into(),
        ));
    }
    let (mut cfg, _) = load_settings(a.common.config.as_deref())?;
    if let Some(s) = a.common.seed {
        cfg.seed = s;
    }
    let (model, _) = load_model(&a.model)?;
    let c = load_controller(a.controller.as_deref())?;
    let traj = match &a.trajectory {
        Some(p) => Trajectory::read_csv(read(p)?.as_bytes()).map_err(core)?,
        None => Trajectory::constant(DEFAULT_SETPOINT_CM),
    };
    let topo = LoopTopology::new(c.pid, c.pi, model.to_tf().map_err(core)?, DelayMode::Pade2)
        .map_err(core)?;

    let runs: Vec<(u64, Result<SimRun<f64>, SimError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..a.seeds)
            .map(|k| {
                let run_cfg = SimConfig {
                    seed: cfg.seed.wrapping_add(u64::from(k)),
                    ..cfg.clone()
                };
                let port = a.port.wrapping_add(k as u16);
                let (topo, traj) = (&topo, &traj);
                s.spawn(move || {
                    let seed = run_cfg.seed;
                    (
                        seed,
                        simulate_one(topo, traj, &run_cfg, a.net, a.loss, port),
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });

    let mut out = OutDir::create(&a.common.out)?;
    let mut summary = String::new();
    let mut first_err = None;
    for (seed, r) in runs {
        let name = if a.seeds == 1 {
            "trace.csv".to_string()
        } else {
            format!("trace_seed{seed}.csv")
        };
        match r {
            Ok(run) => {
                out.write(&name, &run.trace.to_csv())?;
                summary.push_str(&run_summary(seed, &run, &traj));
            }
            Err(SimError::Diverged { t, trace }) => {
                out.write(&name, &trace.to_csv())?;
                let _ = writeln!(summary, "seed={seed} diverged_at={t}");
                first_err.get_or_insert(SimError::Diverged { t, trace });
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    out.write("summary.txt", &summary)?;
    let mut inputs = vec![a.model.as_path()];
    inputs.extend(a.controller.as_deref());
    inputs.extend(a.trajectory.as_deref());
    let manifest = Manifest {
        command: "simulate",
        config: a.common.config.as_deref(),
        inputs,
        seed: Some(cfg.seed),
        extra: vec![
            ("net".into(), format!("{:?}", a.net).to_lowercase()),
            ("loss".into(), a.loss.to_string()),
            ("seeds".into(), a.seeds.to_string()),
        ],
    };
    let outcome = finish(out, manifest, started, Vec::new(), summary)?;
    match first_err {
        Some(e) => Err(core(e)),
        None => Ok(outcome),
    }
}

fn run_summary(seed: u64, run: &SimRun<f64>, traj: &Trajectory<f64>) -> String {
    let m = TrackingMetrics::compute(&run.trace, traj, 0.02, 0.2);
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.4}"));
    let mut s = String::new();
    let _ = writeln!(s, "seed={seed}");
    let _ = writeln!(s, "  band_entry_time_s={}", opt(m.band_entry_time));
    let _ = writeln!(
        s,
        "  post_settling_deviation_cm={}",
        opt(m.post_settling_deviation)
    );
    let segs: Vec<String> = m
        .segment_deviation
        .iter()
        .map(|d| format!("{:.2}", d * 10.0))
        .collect();
    let _ = writeln!(s, "  segment_steady_deviation_mm={}", segs.join(","));
    let _ = writeln!(s, "  saturated_steps={}", run.saturated_steps);
    let _ = writeln!(
        s,
        "  frames={} out_of_range={}",
        run.frames, run.out_of_range_frames
    );
    if let Some(l) = &run.link {
        let _ = writeln!(
            s,
            "  link sent={} received={} emitted={} dropped={} repeated={} late={} max_gap={} accounting={}",
            l.sent,
            l.received,
            l.emitted,
            l.dropped,
            l.repeated,
            l.late,
            l.max_gap,
            l.accounting_holds()
        );
    }
    s
}
