//! `udw`: dual switchings, single-detector probabilities, harvesting and
//! the canned sweeps. All parameters are dimensionless: times and lengths
//! in units of the switching timescale T, the gap as Omega T.

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use udw_core::acceptance;
use udw_core::detector::{self, CouplingKind, DetectorConfig, Smearing};
use udw_core::experiments::{self, ExperimentId, SweepSpec, ToleranceSpec};
use udw_core::field::FieldModel;
use udw_core::harvesting::{self, DetectorPair};
use udw_core::switching::{self, SwitchingKind, SwitchingSpec};
use udw_core::Error;

const EXIT_ACCEPTANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "udw",
    version,
    about = "Unruh-DeWitt detectors: dual switching, excitation probabilities, harvesting"
)]
struct Cli {
    /// Config file of `key = value` lines (`#` comments); keys are flag names.
    /// Explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for sweeps [default: all cores]
    #[arg(long, global = true, env = "UDW_JOBS", value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dual switching on a grid: tau/T, chi, Omega chi_tilde, theta (CSV)
    #[command(args_override_self = true)]
    Dual {
        #[command(flatten)]
        sw: SwitchArgs,
        /// Sample grid lo:hi:n in units of T [default: the switching's standard grid]
        #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
        grid: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Excitation probabilities L (amplitude) and L_tilde (derivative, chi/Omega and exact dual)
    #[command(args_override_self = true)]
    Single {
        #[command(flatten)]
        sw: SwitchArgs,
        #[command(flatten)]
        field: FieldArgs,
        /// Detector position x/T [default: 0, or 0.325 L in the cavity]
        #[arg(long, allow_hyphen_values = true, value_name = "X")]
        position: Option<f64>,
        /// Coupling constant lambda (dimensionless)
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Gaussian smearing width sigma/T [default: pointlike]
        #[arg(long, value_name = "SIGMA")]
        sigma: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Two-detector harvesting: L_ij, M, negativity (CSV)
    #[command(args_override_self = true)]
    Harvest {
        #[command(flatten)]
        sw: SwitchArgs,
        #[command(flatten)]
        field: FieldArgs,
        /// Separation d/T of detector B from detector A (along x)
        #[arg(long, default_value_t = 2.0)]
        separation: f64,
        /// Time offset of B's switching centre, in units of T
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delay: f64,
        /// Position of detector A, x/T [default: 0, or 1.1 in the cavity]
        #[arg(long, allow_hyphen_values = true, value_name = "X")]
        position: Option<f64>,
        /// amplitude or derivative (derivative uses chi/Omega)
        #[arg(long = "coupling-kind", default_value = "amplitude")]
        coupling_kind: CouplingKind,
        /// Coupling constant lambda, same for both detectors
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Gaussian smearing width sigma/T for both detectors [default: pointlike]
        #[arg(long, value_name = "SIGMA")]
        sigma: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a canned experiment and write its CSV table
    #[command(args_override_self = true)]
    Sweep {
        /// Fig1Gaussian, Fig2Compact, Fig3CompactSmooth, L1Table, SingleDuality, PairDuality or PhaseCheck
        #[arg(long)]
        experiment: ExperimentId,
        /// Comma-separated Omega T values [default: the experiment's grid]
        #[arg(long = "omegaT", value_delimiter = ',', value_name = "LIST")]
        omega_t: Option<Vec<f64>>,
        /// Time grid lo:hi:n in units of T [default: the experiment's grid]
        #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
        grid: Option<String>,
        /// Comma-separated separations d/T (PairDuality)
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        separations: Option<Vec<f64>>,
        /// Minkowski regulator epsilon/T (integrals use 100, 10 and 1 x epsilon, extrapolated)
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Compare the table with a tolerance file (JSON)
        #[arg(long, value_name = "FILE", conflicts_with = "check")]
        reference: Option<PathBuf>,
        /// Compare the table with the built-in tolerance file
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the acceptance suite; exit status 1 if any criterion fails
    #[command(args_override_self = true)]
    Verify {
        /// Run only these criteria (repeatable), e.g. 4 or 6a
        #[arg(long)]
        criterion: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct SwitchArgs {
    /// gaussian, compact-cosine or compact-cosine-sq
    #[arg(long, default_value = "gaussian")]
    kind: SwitchingKind,
    /// Switching timescale T, the unit of time (results depend only on the dimensionless inputs)
    #[arg(long = "T", default_value_t = 1.0, value_name = "T")]
    timescale: f64,
    /// Gap Omega T (dimensionless)
    #[arg(long = "omegaT", value_name = "OMEGA_T")]
    omega_t: f64,
}

impl SwitchArgs {
    fn spec(&self) -> udw_core::Result<SwitchingSpec> {
        if self.kind == SwitchingKind::Tabulated {
            return Err(Error::InvalidArgument(
                "tabulated switchings are not available from the command line".into(),
            ));
        }
        SwitchingSpec::new(self.kind, self.timescale)
    }

    fn omega(&self) -> f64 {
        self.omega_t / self.timescale
    }
}

#[derive(Args, Debug)]
struct FieldArgs {
    /// minkowski (massless 3+1 vacuum) or cavity (1+1 Dirichlet mode sum)
    #[arg(long, default_value = "minkowski", value_parser = ["minkowski", "cavity"])]
    field: String,
    /// Minkowski regulator epsilon/T (integrals use 100, 10 and 1 x epsilon, extrapolated)
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Cavity length L/T
    #[arg(long = "cavity-length", default_value_t = 4.0)]
    cavity_length: f64,
    /// Number of cavity modes
    #[arg(long, default_value_t = 5)]
    modes: usize,
}

impl FieldArgs {
    fn model(&self, t: f64) -> udw_core::Result<FieldModel> {
        match self.field.as_str() {
            "cavity" => FieldModel::cavity(self.cavity_length * t, self.modes),
            _ => FieldModel::minkowski(self.eps * t),
        }
    }
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output file [default: stdout]
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::InvalidArgument(_) | Error::InvalidRegulator(_) | Error::Config(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

const SUBCOMMANDS: [&str; 5] = ["dual", "single", "harvest", "sweep", "verify"];

/// Inserts the config file's settings right after the subcommand name, so
/// that flags given on the command line (which come later) override them.
fn merge_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("config file {path}: {e}"))?;
    let extra = parse_config(&text).map_err(|e| format!("config file {path}: {e}"))?;
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn parse_config(text: &str) -> Result<Vec<String>, String> {
    let mut args = vec![];
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        let key = k.trim().trim_start_matches("--");
        let value = v.trim();
        if key.is_empty() {
            return Err(format!("line {}: empty key", n + 1));
        }
        if key == "config" {
            return Err(format!("line {}: config files cannot include others", n + 1));
        }
        match value {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => args.push(format!("--{key}={value}")),
        }
    }
    Ok(args)
}

fn parse_grid(s: &str, t: f64) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("grid '{s}' is not lo:hi:n"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || (n > 1 && !(hi > lo)) {
        return Err(Failure::Usage(format!("grid '{s}' needs lo < hi and n >= 1")));
    }
    Ok(switching::uniform_grid(lo * t, hi * t, n))
}

fn emit(out: &OutArgs, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(p) => write_file(p, text),
        None => {
            let mut so = std::io::stdout().lock();
            match so.write_all(text.as_bytes()).and_then(|_| so.flush()) {
                // a closed reader (`| head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| Failure::Usage(format!("stdout: {e}"))),
            }
        }
    }
}

fn write_file(p: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
}

fn csv(meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        s.push_str(&format!("# meta {k}={v}\n"));
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn version() -> (&'static str, String) {
    ("version", env!("CARGO_PKG_VERSION").to_string())
}

fn smearing(sigma: Option<f64>, t: f64) -> Smearing {
    match sigma {
        Some(w) => Smearing::GaussianBall { width: w * t },
        None => Smearing::Pointlike,
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Dual { sw, grid, out } => {
            let spec = sw.spec()?;
            let t = sw.timescale;
            let grid = match &grid {
                Some(g) => parse_grid(g, t)?,
                None => switching::default_grid(&spec),
            };
            let dual = switching::dual_switching(&spec, sw.omega(), &grid)?;
            let scaled = dual.scaled_modulus();
            let rows: Vec<Vec<String>> = grid
                .iter()
                .enumerate()
                .map(|(k, &tau)| vec![num(tau / t), num(spec.eval(tau)), num(scaled[k]), num(dual.theta[k])])
                .collect();
            let meta = [
                version(),
                ("switching", format!("{:?}", spec.kind)),
                ("omegaT", num(sw.omega_t)),
                ("points", grid.len().to_string()),
            ];
            emit(&out, &csv(&meta, &["tau", "chi", "omega_chi_tilde", "theta"], &rows))?;
            Ok(0)
        }
        Command::Single {
            sw,
            field,
            position,
            coupling,
            sigma,
            out,
        } => {
            let spec = sw.spec()?;
            let t = sw.timescale;
            let model = field.model(t)?;
            let x = position.unwrap_or(if model.is_cavity() {
                0.325 * field.cavity_length
            } else {
                0.0
            }) * t;
            let place = |d: DetectorConfig| d.with_position([x, 0.0, 0.0]).with_smearing(smearing(sigma, t));
            let omega = sw.omega();
            let amp = detector::excitation_probability_report(
                &place(DetectorConfig::amplitude(spec.clone(), omega, coupling)),
                &model,
            )?;
            let der = detector::excitation_probability_derivative_report(
                &place(DetectorConfig::derivative(spec.clone(), omega, coupling)),
                &model,
            )?;
            let dual = switching::dual_switching(&spec, omega, &switching::default_grid(&spec))?;
            let exact =
                detector::excitation_probability_derivative(&place(DetectorConfig::dual(dual, coupling)), &model)?;
            let l = amp.value;
            let rel = |v: f64| if l > 0.0 { (v - l).abs() / l } else { f64::NAN };
            let gap = amp.routes.relative_gap.max(der.routes.relative_gap);
            let meta = [
                version(),
                ("switching", format!("{:?}", spec.kind)),
                ("field", field.field.clone()),
                (
                    "eps_schedule",
                    model
                        .eps_schedule()
                        .iter()
                        .map(|e| num(*e))
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
            ];
            let mut text = csv(
                &meta,
                &[
                    "omegaT",
                    "L",
                    "L_tilde",
                    "residual",
                    "L_tilde_exact_dual",
                    "exact_residual",
                    "route_gap",
                ],
                &[vec![
                    num(sw.omega_t),
                    num(l),
                    num(der.value),
                    num(rel(der.value)),
                    num(exact),
                    num(rel(exact)),
                    num(gap),
                ]],
            );
            for w in [amp.warning, der.warning].into_iter().flatten() {
                text.push_str(&format!("# warning {w}\n"));
            }
            emit(&out, &text)?;
            Ok(0)
        }
        Command::Harvest {
            sw,
            field,
            separation,
            delay,
            position,
            coupling_kind,
            coupling,
            sigma,
            out,
        } => {
            let spec = sw.spec()?;
            let t = sw.timescale;
            let model = field.model(t)?;
            let xa = position.unwrap_or(if model.is_cavity() { 1.1 } else { 0.0 }) * t;
            let base = DetectorConfig::amplitude(spec.clone(), sw.omega(), coupling).with_smearing(smearing(sigma, t));
            let pair = DetectorPair::new(
                base.clone().with_position([xa, 0.0, 0.0]),
                base.with_position([xa + separation * t, 0.0, 0.0])
                    .with_center(delay * t),
            )?;
            let h = harvesting::harvest(&pair, &model, coupling_kind)?;
            let check = h.m_check;
            let meta = [
                version(),
                ("switching", format!("{:?}", spec.kind)),
                ("field", field.field.clone()),
                ("coupling_kind", format!("{coupling_kind:?}")),
                (
                    "eps_schedule",
                    model
                        .eps_schedule()
                        .iter()
                        .map(|e| num(*e))
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
            ];
            let header = [
                "omegaT",
                "separation",
                "delay",
                "L_AA",
                "L_BB",
                "L_AB_re",
                "L_AB_im",
                "M_re",
                "M_im",
                "V",
                "negativity",
                "spacelike",
                "truncation_bound",
                "m_tilde_by_parts_re",
                "m_tilde_by_parts_im",
                "m_tilde_remnant_re",
                "m_tilde_remnant_im",
                "m_tilde_mismatch",
            ];
            let opt =
                |f: &dyn Fn(&harvesting::MTildeReport) -> f64| check.as_ref().map_or("".to_string(), |c| num(f(c)));
            let row = vec![
                num(sw.omega_t),
                num(separation),
                num(delay),
                num(h.l_aa),
                num(h.l_bb),
                num(h.l_ab.re),
                num(h.l_ab.im),
                num(h.m.re),
                num(h.m.im),
                num(h.v_score),
                num(h.negativity),
                h.spacelike.to_string(),
                num(h.truncation_bound),
                opt(&|c| c.by_parts.re),
                opt(&|c| c.by_parts.im),
                opt(&|c| c.remnant.re),
                opt(&|c| c.remnant.im),
                opt(&|c| c.mismatch),
            ];
            emit(&out, &csv(&meta, &header, &[row]))?;
            Ok(0)
        }
        Command::Sweep {
            experiment,
            omega_t,
            grid,
            separations,
            eps,
            reference,
            check,
            out,
        } => {
            let mut spec = SweepSpec::default_for(experiment);
            if let Some(w) = omega_t {
                spec.omega_t = w;
            }
            if let Some(g) = &grid {
                spec.tau_grid = parse_grid(g, 1.0)?;
            }
            if let Some(d) = separations {
                spec.separations = d;
            }
            spec.epsilon = eps;
            spec.output = out.output.clone();
            spec.jobs = cli.jobs.unwrap_or(0);
            let table = match experiments::run_experiment(&spec) {
                Ok(t) => t,
                Err(f) => {
                    let mut partial = f.partial.clone();
                    partial.meta.push(("status".into(), "partial".into()));
                    partial.meta.push(("failed_at".into(), format!("{:?}", f.failed_at)));
                    partial.meta.push(("error".into(), f.error.to_string()));
                    emit(&out, &partial.to_csv())?;
                    return Err(f.error.into());
                }
            };
            emit(&out, &table.to_csv())?;
            let tolerances = match (&reference, check) {
                (Some(p), _) => {
                    let text =
                        std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                    Some(ToleranceSpec::parse(&text)?)
                }
                (None, true) => Some(ToleranceSpec::builtin()),
                (None, false) => None,
            };
            if let Some(tol) = tolerances {
                let report = experiments::compare_to_reference(&table, &tol)?;
                for c in &report.checks {
                    eprintln!(
                        "{} row {} {:?} {} = {:?} (target {:?} +- {:?})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.row,
                        c.params,
                        c.column,
                        c.value,
                        c.target,
                        c.tolerance
                    );
                }
                return Ok(if report.passed { 0 } else { EXIT_ACCEPTANCE });
            }
            Ok(0)
        }
        Command::Verify { criterion } => {
            let known = acceptance::criterion_ids();
            if let Some(bad) = criterion.iter().find(|c| !known.contains(&c.as_str())) {
                return Err(Failure::Usage(format!(
                    "unknown criterion '{bad}' (known: {})",
                    known.join(", ")
                )));
            }
            let ids: Vec<&str> = if criterion.is_empty() {
                known
            } else {
                known.into_iter().filter(|k| criterion.iter().any(|c| c == k)).collect()
            };
            let mut all = true;
            for id in ids {
                let r = acceptance::run_one(id).expect("known id");
                println!("{r}");
                all &= r.passed;
            }
            Ok(if all { 0 } else { EXIT_ACCEPTANCE })
        }
    }
}
