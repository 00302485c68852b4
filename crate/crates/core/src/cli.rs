//! Command-line front end.
//!
//! Every run is described by a [`RunConfig`]. Flags override values from an
//! optional `--config` file of `key = value` lines, whose keys are the long
//! flag names. Manifests written next to sweep and figure outputs use the same
//! keys, so they can be fed back to reproduce a run.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::amplitude::sample_trajectory;
use crate::error::Error;
use crate::metrics::evaluate;
use crate::oracle::default_battery;
use crate::spectral::{SpectralModel, SystemParams, DEFAULT_LORENTZIAN_OMEGA0};
use crate::sweep::{
    figure_dataset_with, find_critical, format_number, run_sweep, write_atomic, write_csv,
    write_jsonl, FigureId, Manifest, SweepRow, SweepSpec, SweepTarget, DEFAULT_STEPS,
    DEFAULT_THRESHOLD,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default trajectory sample count.
pub const DEFAULT_TRAJECTORY_POINTS: usize = 201;

#[derive(Debug, Parser)]
#[command(name = "cavity-qsl", version, about = "Quantum speed limit and non-Markovianity of an atom in a leaky cavity")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Sample A(t), |A|², d|A|²/dt, Γ(t) and S(t) on [0, tau].
    Trajectory(Flags),
    /// Non-Markovianity and speed-limit ratio at one parameter point.
    Metrics(Flags),
    /// Sweep coupling or detuning.
    Sweep(Flags),
    /// Locate the onset of N > threshold along a sweep.
    Critical(Flags),
    /// Compare the closed forms with the brute-force oracles.
    OracleCheck(Flags),
    /// Datasets for the published figures.
    Figure {
        /// fig1, fig2 or fig3.
        figure: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Debug, Default, Clone, Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long = "omega-c")]
    omega_c: Option<f64>,
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "sweep-param")]
    sweep_param: Option<String>,
    /// `lo:hi`
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trajectory,
    Metrics,
    Sweep,
    Critical,
    OracleCheck,
    Figure,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Metrics => "metrics",
            Command::Sweep => "sweep",
            Command::Critical => "critical",
            Command::OracleCheck => "oracle-check",
            Command::Figure => "figure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Present for every command except `figure` and `oracle-check`.
    pub system: Option<SystemParams>,
    pub figure: Option<FigureId>,
    pub tau: f64,
    pub sweep: Option<(SweepTarget, f64, f64)>,
    pub steps: usize,
    pub threshold: f64,
    /// Whether `--threshold` was given on the command line.
    pub threshold_requested: bool,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: usize,
}

/// Outcome of argument parsing that does not yield a config.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    /// `--help` or `--version`; print and exit 0.
    Info(String),
    Usage(String),
}

fn usage(msg: impl Into<String>) -> ParseOutcome {
    ParseOutcome::Usage(msg.into())
}

/// Values gathered from the config file and the flags, flags taking
/// precedence.
struct Merged {
    file: Manifest,
    flags: Flags,
}

impl Merged {
    fn text(&self, key: &str, flag: &Option<String>) -> Option<String> {
        flag.clone().or_else(|| self.file.get(key).map(str::to_string))
    }

    fn number<T: std::str::FromStr + Copy>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, ParseOutcome> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => match self.file.get(key) {
                Some(s) => s
                    .parse()
                    .map(Some)
                    .map_err(|_| usage(format!("config key `{key}`: cannot parse `{s}`"))),
                None => Ok(None),
            },
        }
    }
}

const CONFIG_KEYS: [&str; 17] = [
    "command",
    "figure",
    "family",
    "gamma0",
    "lambda",
    "delta",
    "omega-c",
    "omega0",
    "coupling",
    "tau",
    "sweep-param",
    "range",
    "steps",
    "threshold",
    "out",
    "format",
    "workers",
];

fn read_config(path: &Path, command: Command) -> Result<Manifest, ParseOutcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let m = Manifest::parse(&text).map_err(|e| usage(e.to_string()))?;
    for (k, v) in &m.entries {
        // per-curve entries of figure manifests are informational
        if k.starts_with("curve.") {
            continue;
        }
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(usage(format!("unknown config key `{k}`")));
        }
        if k == "command" && v != command.name() {
            return Err(usage(format!(
                "config is for `{v}`, not `{}`",
                command.name()
            )));
        }
    }
    Ok(m)
}

fn parse_range(s: &str) -> Result<(f64, f64), ParseOutcome> {
    let bad = || usage(format!("malformed range `{s}`, expected lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn build_system(m: &Merged, needs_coupling: bool) -> Result<SystemParams, ParseOutcome> {
    let f = &m.flags;
    let family = m
        .text("family", &f.family)
        .ok_or_else(|| usage("missing required parameter `--family`"))?;
    let lambda = m.number("lambda", f.lambda)?;
    let delta = m.number("delta", f.delta)?;
    let omega_c = m.number("omega-c", f.omega_c)?;
    let omega0 = m.number("omega0", f.omega0)?;
    let gamma0 = m.number("gamma0", f.gamma0)?;
    let coupling = m.number("coupling", f.coupling)?;
    let coupling = match coupling {
        Some(c) => c,
        None if needs_coupling => return Err(usage("missing required parameter `--coupling`")),
        None => 0.0,
    };

    let invalid = |e: Error| usage(e.to_string());
    match family.as_str() {
        "lorentzian" => {
            if omega_c.is_some() {
                return Err(usage("`--omega-c` belongs to the ohmic family"));
            }
            if let Some(g) = gamma0 {
                if g != 1.0 {
                    return Err(usage(format!(
                        "lorentzian runs are in units of gamma0; expected --gamma0 1, got {g}"
                    )));
                }
            }
            let lambda = lambda.ok_or_else(|| usage("missing required parameter `--lambda`"))?;
            let model = SpectralModel::lorentzian(1.0, lambda, delta.unwrap_or(0.0)).map_err(invalid)?;
            SystemParams::new(omega0.unwrap_or(DEFAULT_LORENTZIAN_OMEGA0), coupling, model).map_err(invalid)
        }
        "ohmic" => {
            if lambda.is_some() || delta.is_some() || gamma0.is_some() {
                return Err(usage("`--lambda`, `--delta` and `--gamma0` belong to the lorentzian family"));
            }
            if let Some(w) = omega0 {
                if w != 1.0 {
                    return Err(usage(format!(
                        "ohmic runs are in units of omega0; expected --omega0 1, got {w}"
                    )));
                }
            }
            let omega_c = omega_c.ok_or_else(|| usage("missing required parameter `--omega-c`"))?;
            SystemParams::ohmic(omega_c, coupling).map_err(invalid)
        }
        other => Err(usage(format!("unknown family `{other}`, expected lorentzian or ohmic"))),
    }
}

/// Parses a full argument list, program name included.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return Err(match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ParseOutcome::Info(e.to_string()),
                _ => usage(e.to_string().lines().next().unwrap_or("usage error").trim_start_matches("error: ").to_string()),
            });
        }
    };
    let (command, positional, flags) = match cli.command {
        CommandArgs::Trajectory(f) => (Command::Trajectory, None, f),
        CommandArgs::Metrics(f) => (Command::Metrics, None, f),
        CommandArgs::Sweep(f) => (Command::Sweep, None, f),
        CommandArgs::Critical(f) => (Command::Critical, None, f),
        CommandArgs::OracleCheck(f) => (Command::OracleCheck, None, f),
        CommandArgs::Figure { figure, flags } => (Command::Figure, figure, flags),
    };
    let file = match &flags.config {
        Some(p) => read_config(p, command)?,
        None => Manifest::default(),
    };
    let m = Merged { file, flags };
    let f = &m.flags;

    let format = match m.text("format", &f.format).as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("jsonl") | Some("json-lines") => OutputFormat::JsonLines,
        Some(other) => return Err(usage(format!("unknown format `{other}`, expected csv or jsonl"))),
    };
    let workers = match m.number("workers", f.workers)? {
        Some(0) => return Err(usage("`--workers` must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let threshold_flag = m.number("threshold", f.threshold)?;
    let threshold = threshold_flag.unwrap_or(DEFAULT_THRESHOLD);
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(usage(format!("`--threshold` must be finite and >= 0, got {threshold}")));
    }
    let out = f.out.clone().or_else(|| m.file.get("out").map(PathBuf::from));
    let steps_flag = m.number("steps", f.steps)?;

    let figure = match command {
        Command::Figure => {
            let id = positional
                .or_else(|| m.file.get("figure").map(str::to_string))
                .ok_or_else(|| usage("missing figure id (fig1, fig2 or fig3)"))?;
            Some(id.parse::<FigureId>().map_err(|e| usage(e.to_string()))?)
        }
        _ => None,
    };

    let sweep = match command {
        Command::Sweep | Command::Critical => {
            let target = m
                .text("sweep-param", &f.sweep_param)
                .ok_or_else(|| usage("missing required parameter `--sweep-param`"))?
                .parse::<SweepTarget>()
                .map_err(|e| usage(e.to_string()))?;
            let range = m
                .text("range", &f.range)
                .ok_or_else(|| usage("missing required parameter `--range`"))?;
            let (lo, hi) = parse_range(&range)?;
            Some((target, lo, hi))
        }
        _ => None,
    };

    let system = match command {
        Command::Trajectory | Command::Metrics => Some(build_system(&m, true)?),
        Command::Sweep | Command::Critical => {
            let needs = matches!(sweep, Some((SweepTarget::Delta, _, _)));
            Some(build_system(&m, needs)?)
        }
        Command::Figure | Command::OracleCheck => None,
    };

    let tau = match m.number("tau", f.tau)? {
        Some(t) => t,
        None => match (figure, &system) {
            (Some(fig), _) => fig.default_tau(),
            (None, Some(sys)) => match sys.model {
                SpectralModel::Lorentzian { .. } => 1.0,
                SpectralModel::Ohmic { .. } => FigureId::Fig3.default_tau(),
            },
            (None, None) => 1.0,
        },
    };
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(usage(format!("`--tau` must be finite and > 0, got {tau}")));
    }

    let steps = steps_flag.unwrap_or(match command {
        Command::Trajectory => DEFAULT_TRAJECTORY_POINTS,
        _ => DEFAULT_STEPS,
    });
    if steps < 2 {
        return Err(usage(format!("`--steps` must be at least 2, got {steps}")));
    }

    if let (Some(sys), Some((target, lo, hi))) = (system, sweep) {
        SweepSpec::new(target, (lo, hi), steps, tau, sys).map_err(|e| usage(e.to_string()))?;
    }

    Ok(RunConfig {
        command,
        system,
        figure,
        tau,
        sweep,
        steps,
        threshold,
        threshold_requested: f.threshold.is_some(),
        out,
        format,
        workers,
    })
}

/// Failure of a run, carrying its exit code and a one-line reason.
#[derive(Debug)]
struct RunError {
    code: i32,
    reason: String,
    detail: String,
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            reason: e.reason().to_string(),
            detail: e.to_string(),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            reason: "io".into(),
            detail: e.to_string(),
        }
    }
}

fn diagnostic(reason: &str, detail: &str) -> String {
    format!("error: reason={reason} detail={}", detail.replace('\n', " "))
}

/// Executes `config` and returns the process exit code. Diagnostics go to
/// stderr as `error: reason=<tag> detail=<text>`.
pub fn run(config: &RunConfig) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}", diagnostic("worker-pool", &e.to_string()));
            return EXIT_NUMERICAL;
        }
    };
    match pool.install(|| dispatch(config)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", diagnostic(&e.reason, &e.detail));
            e.code
        }
    }
}

/// Parses `argv` and runs it.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(cfg) => run(&cfg),
        Err(ParseOutcome::Info(text)) => {
            print!("{text}");
            EXIT_OK
        }
        Err(ParseOutcome::Usage(msg)) => {
            eprintln!("{}", diagnostic("usage", &msg));
            EXIT_USAGE
        }
    }
}

fn emit(out: &Option<PathBuf>, contents: &str) -> Result<(), RunError> {
    match out {
        Some(path) => write_atomic(path, contents.as_bytes())?,
        None => print!("{contents}"),
    }
    Ok(())
}

fn render_rows(rows: &[SweepRow], format: OutputFormat) -> Result<String, RunError> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(rows, &mut buf)?,
        OutputFormat::JsonLines => write_jsonl(rows, &mut buf)?,
    }
    Ok(String::from_utf8(buf).expect("ascii output"))
}

fn sweep_spec(config: &RunConfig) -> Result<SweepSpec, RunError> {
    let sys = config.system.expect("validated at parse time");
    let (target, lo, hi) = config.sweep.expect("validated at parse time");
    Ok(SweepSpec::new(target, (lo, hi), config.steps, config.tau, sys)?)
}

fn sweep_manifest(config: &RunConfig, spec: &SweepSpec) -> Manifest {
    let mut m = Manifest::default();
    m.push("command", config.command.name());
    m.push_system(&spec.base);
    m.push("tau", spec.tau);
    m.push("sweep-param", spec.target);
    m.push("range", format!("{}:{}", spec.lo, spec.hi));
    m.push("steps", spec.steps);
    m.push("threshold", config.threshold);
    m.push(
        "format",
        match config.format {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        },
    );
    if let Some(out) = &config.out {
        m.push("out", out.display());
    }
    m
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn dispatch(config: &RunConfig) -> Result<(), RunError> {
    match config.command {
        Command::Trajectory => {
            let sys = config.system.expect("validated at parse time");
            let tr = sample_trajectory(&sys, config.tau, config.steps)?;
            let opt = |x: Option<f64>| x.unwrap_or(f64::NAN);
            let mut s = String::new();
            match config.format {
                OutputFormat::Csv => {
                    s.push_str("t,re_a,im_a,pop,pop_rate,gamma_t,shift_t\n");
                    for i in 0..tr.len() {
                        let cols = [
                            tr.times[i],
                            tr.amp[i].re,
                            tr.amp[i].im,
                            tr.pop[i],
                            tr.pop_rate[i],
                            opt(tr.gamma_t[i]),
                            opt(tr.shift_t[i]),
                        ];
                        let line: Vec<String> = cols.iter().map(|&x| format_number(x)).collect();
                        writeln!(s, "{}", line.join(",")).expect("string write");
                    }
                }
                OutputFormat::JsonLines => {
                    for i in 0..tr.len() {
                        let v = json!({
                            "t": tr.times[i],
                            "re_a": tr.amp[i].re,
                            "im_a": tr.amp[i].im,
                            "pop": tr.pop[i],
                            "pop_rate": tr.pop_rate[i],
                            "gamma_t": tr.gamma_t[i],
                            "shift_t": tr.shift_t[i],
                        });
                        writeln!(s, "{v}").expect("string write");
                    }
                }
            }
            emit(&config.out, &s)
        }
        Command::Metrics => {
            let sys = config.system.expect("validated at parse time");
            let m = evaluate(&sys, config.tau)?;
            let v = json!({
                "n_blp": m.n_blp,
                "qslt_ratio": m.qslt_ratio,
                "final_pop": m.final_pop,
                "relation_residual": m.relation_residual(),
            });
            emit(&config.out, &format!("{v}\n"))
        }
        Command::Sweep => {
            let spec = sweep_spec(config)?;
            let rows = run_sweep(&spec)?;
            let text = render_rows(&rows, config.format)?;
            emit(&config.out, &text)?;
            let mut manifest = sweep_manifest(config, &spec);
            let critical = (config.threshold_requested || config.out.is_some())
                .then(|| find_critical(&spec, config.threshold));
            if let Some(out) = &config.out {
                match &critical {
                    Some(Ok(c)) => manifest.push("curve.sweep.critical", format_number(c.value)),
                    Some(Err(e)) => manifest.push("curve.sweep.critical", e.reason()),
                    None => {}
                }
                write_atomic(&manifest_path(out), manifest.render().as_bytes())?;
            }
            match critical {
                Some(Err(e)) if config.threshold_requested => Err(e.into()),
                _ => Ok(()),
            }
        }
        Command::Critical => {
            let spec = sweep_spec(config)?;
            let c = find_critical(&spec, config.threshold)?;
            let v = json!({
                "value": c.value,
                "bracket": [c.bracket.0, c.bracket.1],
                "threshold": c.threshold,
                "tau": c.tau,
            });
            emit(&config.out, &format!("{v}\n"))
        }
        Command::OracleCheck => {
            let checks = default_battery();
            let mut s = format!(
                "{:<22} {:>6} {:>12} {:>10}  {}\n",
                "check", "cases", "max_error", "threshold", "result"
            );
            let mut failed = Vec::new();
            for c in &checks {
                let result = match (&c.failure, c.passed()) {
                    (Some(r), _) => format!("FAIL ({r})"),
                    (None, true) => "pass".to_string(),
                    (None, false) => "FAIL".to_string(),
                };
                if !c.passed() {
                    failed.push(c.name.clone());
                }
                writeln!(
                    s,
                    "{:<22} {:>6} {:>12.3e} {:>10.0e}  {}",
                    c.name, c.cases, c.max_error, c.threshold, result
                )
                .expect("string write");
            }
            emit(&config.out, &s)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(RunError {
                    code: EXIT_NUMERICAL,
                    reason: "oracle-mismatch".into(),
                    detail: failed.join(","),
                })
            }
        }
        Command::Figure => {
            let figure = config.figure.expect("validated at parse time");
            let data = figure_dataset_with(figure, config.tau, config.steps, config.threshold)?;
            let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;

            let mut manifest = Manifest::default();
            manifest.push("command", "figure");
            manifest.push("figure", figure);
            manifest.push("tau", data.tau);
            manifest.push("steps", data.steps);
            manifest.push("threshold", data.threshold);
            manifest.push(
                "format",
                match config.format {
                    OutputFormat::Csv => "csv",
                    OutputFormat::JsonLines => "jsonl",
                },
            );
            manifest.push("out", dir.display());
            manifest.push("sweep-param", figure.target());
            let (lo, hi) = figure.range();
            manifest.push("range", format!("{lo}:{hi}"));

            let mut summary = String::new();
            for curve in &data.curves {
                let file = format!("{figure}_{}.{}", curve.label, config.format.extension());
                write_atomic(&dir.join(&file), render_rows(&curve.rows, config.format)?.as_bytes())?;
                let key = |k: &str| format!("curve.{}.{k}", curve.label);
                manifest.push(key("file"), &file);
                let mut fixed = Manifest::default();
                fixed.push_system(&curve.spec.base);
                for (k, v) in fixed.entries {
                    manifest.push(key(&k), v);
                }
                let critical = match &curve.critical {
                    Ok(c) => format_number(c.value),
                    Err(reason) => reason.clone(),
                };
                manifest.push(key("critical"), &critical);
                writeln!(summary, "{figure} {} critical={critical} file={file}", curve.label)
                    .expect("string write");
            }
            write_atomic(&dir.join(format!("{figure}_manifest.txt")), manifest.render().as_bytes())?;
            print!("{summary}");
            Ok(())
        }
    }
}
