use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use spinheat::bath::{incomplete_spectral, markov_spectral, spectral_density};
use spinheat::config::{fmt_float, ConfigBuilder, RunConfig, SchemeChoice, COMMAND_LINE, ECHO_BEGIN, ECHO_END, BASELINE};
use spinheat::dynamics::{integrate, Failure, Trajectory};
use spinheat::liouvillian::{KernelTable, LambSign, Liouvillian, Memory, WindowMode};
use spinheat::secular::{flux_bounds, SecularSolution};
use spinheat::spinflip::{Regime, ResponseQuery};
use spinheat::validate;
use spinheat::{DensityMatrix, Error, Matrix, OccupationConfig};

#[derive(Debug, Parser)]
#[command(name = "spinheat", version, about = "Heat flow out of a boundary-cooled XY spin chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-particle energies ω_a.
    Spectrum(Common),
    /// Bath spectrum and the finite-time spectral function on a frequency grid.
    BathSpectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        omega_min: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        omega_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Time of Γ_t (default: t_switch).
        #[arg(long)]
        time: Option<f64>,
    },
    /// Heat flux trajectory.
    Flux {
        #[command(flatten)]
        common: Common,
        /// Also write G[ρ0] and the Lamb-shift matrices at t_max.
        #[arg(long)]
        dump_operators: bool,
    },
    /// Local magnetization trajectory.
    Magnetization(Common),
    /// Response of the local magnetization to a spin flip at site 1.
    Spinflip {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Thermal)]
        mode: Mode,
        /// Site range `first:last` or list `1,3,5`.
        #[arg(long, default_value = "1:10")]
        sites: String,
        /// Time grid `start:stop:step` or list `0.5,1,2`.
        #[arg(long, default_value = "0:10:0.25")]
        times: String,
        /// Occupation index of the eigenstate (bit a-1 is mode a).
        #[arg(long, default_value_t = 0)]
        state: u64,
        /// Divide by βh.
        #[arg(long)]
        normalized: bool,
    },
    /// Oracle suites; exit 0 when all pass.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Eigen,
    Thermal,
    Thermo,
    HighTemp,
    LowTemp,
}

/// Config file plus per-key overrides.
#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` file; baseline parameters when omitted.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    j: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long = "beta_bath", alias = "beta-bath", allow_hyphen_values = true)]
    beta_bath: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long = "n_trunc", alias = "n-trunc")]
    n_trunc: Option<String>,
    #[arg(long = "beta_sys0", alias = "beta-sys0", allow_hyphen_values = true)]
    beta_sys0: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long = "t_max", alias = "t-max")]
    t_max: Option<String>,
    #[arg(long = "t_switch", alias = "t-switch")]
    t_switch: Option<String>,
    #[arg(long = "rel_tol", alias = "rel-tol")]
    rel_tol: Option<String>,
    #[arg(long = "abs_tol", alias = "abs-tol")]
    abs_tol: Option<String>,
    #[arg(long = "sample_dt", alias = "sample-dt")]
    sample_dt: Option<String>,
    #[arg(long = "max_step", alias = "max-step")]
    max_step: Option<String>,
    #[arg(long, short = 'o')]
    output: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut b = ConfigBuilder::new();
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
                b.apply_text(&text)?;
            }
            None => b.apply_text(BASELINE)?,
        }
        let overrides = [
            ("N", &self.n),
            ("j", &self.j),
            ("h", &self.h),
            ("lambda", &self.lambda),
            ("beta_bath", &self.beta_bath),
            ("sigma", &self.sigma),
            ("n_trunc", &self.n_trunc),
            ("beta_sys0", &self.beta_sys0),
            ("scheme", &self.scheme),
            ("t_max", &self.t_max),
            ("t_switch", &self.t_switch),
            ("rel_tol", &self.rel_tol),
            ("abs_tol", &self.abs_tol),
            ("sample_dt", &self.sample_dt),
            ("max_step", &self.max_step),
            ("output", &self.output),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                b.set(key, v, COMMAND_LINE)?;
            }
        }
        Ok(b.build()?)
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("integration stopped: {}", .0.error)]
    Integration(Box<Failure>),
    #[error("validation failed")]
    Validation,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                Error::Config { .. } | Error::Argument(_) | Error::Domain(_) => 3,
                Error::Capability(_) => 4,
                Error::Integration { .. } | Error::Integrity { .. } | Error::Numerical { .. } => 2,
            },
            CliError::Integration(f) => match f.error {
                Error::Capability(_) => 4,
                Error::Argument(_) => 3,
                _ => 2,
            },
            CliError::Io(..) | CliError::Validation => 1,
        }
    }
}

fn header(command: &str, cfg: &RunConfig, extra: &[(String, String)]) -> String {
    let mut out = format!("# spinheat {command}\n# {ECHO_BEGIN}\n");
    for line in cfg.echo().lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# {ECHO_END}");
    for (k, v) in extra {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}

/// Writes through a temporary file in the target directory, then renames.
fn write_output(path: &str, contents: &str) -> Result<(), CliError> {
    if path == "-" {
        let mut out = std::io::stdout().lock();
        return out.write_all(contents.as_bytes()).map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e));
    }
    let target = PathBuf::from(path);
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Io(target.clone(), e);
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(())
}

/// `out.csv` + `secular` → `out_secular.csv`.
fn suffixed(path: &str, suffix: &str) -> String {
    let p = Path::new(path);
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match p.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    p.with_file_name(name).to_string_lossy().into_owned()
}

fn row(values: impl IntoIterator<Item = f64>) -> String {
    let cells: Vec<String> = values.into_iter().map(fmt_float).collect();
    cells.join(",") + "\n"
}

fn run_spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = header("spectrum", cfg, &[]);
    out.push_str("a,omega\n");
    for (i, w) in cfg.chain.omegas().into_iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, fmt_float(w));
    }
    write_output(&cfg.output_path, &out)
}

fn run_bath_spectrum(cfg: &RunConfig, lo: f64, hi: f64, points: usize, time: Option<f64>) -> Result<(), CliError> {
    if points < 2 || !(hi > lo) {
        return Err(Error::Argument("frequency grid needs points >= 2 and omega_max > omega_min".into()).into());
    }
    let t = time.unwrap_or(cfg.integrator.t_switch);
    let extra = [
        ("omega_min".to_string(), fmt_float(lo)),
        ("omega_max".to_string(), fmt_float(hi)),
        ("points".to_string(), points.to_string()),
        ("time".to_string(), fmt_float(t)),
    ];
    let mut out = header("bath-spectrum", cfg, &extra);
    out.push_str("omega,gamma,re_Gamma_inf,im_Gamma_inf,re_Gamma_t,im_Gamma_t\n");
    let b = &cfg.bath;
    for i in 0..points {
        let w = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let inf = markov_spectral(b, w);
        let fin = incomplete_spectral(b, w, t);
        out.push_str(&row([w, spectral_density(b, w), inf.re, inf.im, fin.re, fin.im]));
    }
    write_output(&cfg.output_path, &out)
}

fn trajectory_csv(command: &str, cfg: &RunConfig, traj: &Trajectory, note: Option<&str>) -> String {
    let extra: Vec<(String, String)> = note.map(|n| vec![("status".to_string(), n.to_string())]).unwrap_or_default();
    let mut out = header(command, cfg, &extra);
    let mags: Vec<String> = (1..=cfg.chain.n).map(|n| format!("m_{n}")).collect();
    let _ = writeln!(out, "t,J,{},energy,trace_error,min_eig", mags.join(","));
    for s in &traj.samples {
        let values = [s.t, s.flux]
            .into_iter()
            .chain(s.magnetization.iter().copied())
            .chain([s.energy, s.trace_error, s.min_eigenvalue]);
        out.push_str(&row(values));
    }
    out
}

fn sample_grid(cfg: &RunConfig) -> Vec<f64> {
    let i = &cfg.integrator;
    let mut grid: Vec<f64> = (0..)
        .map(|k| k as f64 * i.sample_dt)
        .take_while(|&t| t < i.t_max - 1e-9 * i.sample_dt)
        .collect();
    grid.push(i.t_max);
    grid
}

fn secular_csv(command: &str, cfg: &RunConfig) -> Result<String, CliError> {
    let sol = SecularSolution::thermal_start(&cfg.chain, &cfg.bath, cfg.beta_sys0)?;
    let mut out = header(command, cfg, &[]);
    let j0 = sol.flux(0.0);
    if command == "flux" {
        out.push_str("t,J,J_lower_bound,J_upper_bound,energy\n");
        for t in sample_grid(cfg) {
            let (lo, up) = flux_bounds(t, &cfg.chain, &cfg.bath);
            out.push_str(&row([t, sol.flux(t), j0 * lo, j0 * up, sol.energy(t)]));
        }
    } else {
        let mags: Vec<String> = (1..=cfg.chain.n).map(|n| format!("m_{n}")).collect();
        let _ = writeln!(out, "t,J,{},energy", mags.join(","));
        for t in sample_grid(cfg) {
            let values = [t, sol.flux(t)]
                .into_iter()
                .chain((1..=cfg.chain.n).map(|n| sol.magnetization(t, n)))
                .chain([sol.energy(t)]);
            out.push_str(&row(values));
        }
    }
    Ok(out)
}

fn matrix_csv(cfg: &RunConfig, name: &str, m: &Matrix) -> String {
    let mut out = header("flux", cfg, &[("operator".to_string(), name.to_string())]);
    out.push_str("row,col,re,im\n");
    for ((r, c), v) in m.indexed_iter() {
        let _ = writeln!(out, "{r},{c},{},{}", fmt_float(v.re), fmt_float(v.im));
    }
    out
}

fn dump_operators(cfg: &RunConfig, rho0: &DensityMatrix) -> Result<(), CliError> {
    let t = cfg.integrator.t_max;
    let memory = if t < cfg.integrator.t_switch { Memory::NonMarkovian } else { Memory::Markovian };
    let (kernel, window) = match cfg.scheme {
        SchemeChoice::Secular | SchemeChoice::SecularDelta => {
            (KernelTable::secular(&cfg.chain, &cfg.bath), WindowMode::kronecker())
        }
        _ => (KernelTable::for_memory(&cfg.chain, &cfg.bath, t, memory), WindowMode::None),
    };
    let l = Liouvillian::new(&cfg.chain)?;
    let base = if cfg.output_path == "-" { "operators.csv".to_string() } else { cfg.output_path.clone() };
    let parts = [
        ("G", l.generator(&kernel, rho0, window)?),
        ("H_LS_plus", l.lamb_shift(&kernel, LambSign::Plus, window)?),
        ("H_LS_minus", l.lamb_shift(&kernel, LambSign::Minus, window)?),
    ];
    for (name, m) in parts {
        write_output(&suffixed(&base, name), &matrix_csv(cfg, name, &m))?;
    }
    Ok(())
}

fn run_dynamics(command: &str, cfg: &RunConfig, dump: bool) -> Result<(), CliError> {
    if cfg.scheme == SchemeChoice::SecularDelta && cfg.chain.h == 0.0 {
        eprintln!("warning: h = 0 makes mirror-symmetric Bohr frequencies coincide inside the coarse-graining window");
    }
    let rho0 = DensityMatrix::thermal(&cfg.chain, cfg.beta_sys0);
    if dump {
        dump_operators(cfg, &rho0)?;
    }
    let both = cfg.scheme == SchemeChoice::Both;
    if both && cfg.output_path == "-" {
        return Err(Error::Config {
            key: "output".into(),
            line: COMMAND_LINE,
            reason: "scheme = both writes two files and needs an output path".into(),
        }
        .into());
    }
    if matches!(cfg.scheme, SchemeChoice::Secular | SchemeChoice::Both) {
        let path = if both { suffixed(&cfg.output_path, "secular") } else { cfg.output_path.clone() };
        write_output(&path, &secular_csv(command, cfg)?)?;
    }
    let Some(scheme) = cfg.scheme.integrated() else { return Ok(()) };
    let path = if both { suffixed(&cfg.output_path, "concatenation") } else { cfg.output_path.clone() };
    match integrate(&cfg.chain, &cfg.bath, &rho0, &cfg.integrator, scheme) {
        Ok(traj) => write_output(&path, &trajectory_csv(command, cfg, &traj, None)),
        Err(failure) => {
            if !failure.partial.samples.is_empty() {
                let note = format!("partial; {}", failure.error);
                write_output(&path, &trajectory_csv(command, cfg, &failure.partial, Some(&note)))?;
            }
            Err(CliError::Integration(Box::new(failure)))
        }
    }
}

fn parse_sites(spec: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::Argument(format!("cannot parse site list `{spec}`"));
    if let Some((a, b)) = spec.split_once(':') {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a == 0 || b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn parse_times(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Argument(format!("cannot parse time grid `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| start + i as f64 * step).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn run_spinflip(
    cfg: &RunConfig,
    mode: Mode,
    sites: &str,
    times: &str,
    state: u64,
    normalized: bool,
) -> Result<(), CliError> {
    let sites = parse_sites(sites)?;
    let mut times = parse_times(times)?;
    let regime = match mode {
        Mode::Eigen => Regime::Eigenstate(OccupationConfig::from_index(state, cfg.chain.n)?),
        Mode::Thermal => Regime::Thermal,
        Mode::Thermo => Regime::ThermoIntegral,
        Mode::HighTemp => Regime::HighTemp,
        Mode::LowTemp => Regime::LowTemp,
    };
    if matches!(mode, Mode::HighTemp | Mode::LowTemp) && times.iter().any(|&t| t <= 0.0) {
        eprintln!("warning: asymptotic modes are undefined at t = 0; dropping t <= 0 from the grid");
        times.retain(|&t| t > 0.0);
    }
    let finite = matches!(mode, Mode::Eigen | Mode::Thermal);
    let extra = [
        ("mode".to_string(), format!("{mode:?}").to_lowercase()),
        ("state".to_string(), state.to_string()),
        ("normalized".to_string(), normalized.to_string()),
    ];
    let mut out = header("spinflip", cfg, &extra);
    out.push_str("n,t,delta\n");
    for &n in &sites {
        for &t in &times {
            let q = ResponseQuery {
                j: cfg.chain.j,
                h: cfg.chain.h,
                sites: finite.then_some(cfg.chain.n),
                n,
                t,
                beta: cfg.beta_sys0,
                regime: regime.clone(),
            };
            let v = if normalized { q.evaluate_normalized()? } else { q.evaluate()? };
            let _ = writeln!(out, "{n},{},{}", fmt_float(t), fmt_float(v));
        }
    }
    write_output(&cfg.output_path, &out)
}

fn run_validate() -> Result<(), CliError> {
    let reports = validate::run_all()?;
    let mut out = String::from("suite,cases,max_error,tolerance,passed\n");
    for r in &reports {
        eprintln!("{r}");
        let _ = writeln!(out, "{},{},{},{},{}", r.name, r.cases, fmt_float(r.max_error), fmt_float(r.tolerance), r.passed());
    }
    write_output("-", &out)?;
    if reports.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(c) => run_spectrum(&c.resolve()?),
        Command::BathSpectrum { common, omega_min, omega_max, points, time } => {
            run_bath_spectrum(&common.resolve()?, omega_min, omega_max, points, time)
        }
        Command::Flux { common, dump_operators } => run_dynamics("flux", &common.resolve()?, dump_operators),
        Command::Magnetization(c) => run_dynamics("magnetization", &c.resolve()?, false),
        Command::Spinflip { common, mode, sites, times, state, normalized } => {
            run_spinflip(&common.resolve()?, mode, &sites, &times, state, normalized)
        }
        Command::Validate => run_validate(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
