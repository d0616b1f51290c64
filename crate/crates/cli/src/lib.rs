//! `gceo`: command-line access to the bound computations.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gaussian_ceo::achievability::{monte_carlo_distortion, test_channel_distortion};
use gaussian_ceo::cyclic::{parametric_curve, CyclicInstance};
use gaussian_ceo::duality::{convert_spec, matching_direct};
use gaussian_ceo::matching::{alpha_max_star, sufficient_matching, MatchVerdict};
use gaussian_ceo::model_file::render_model;
use gaussian_ceo::optim::SearchConfig;
use gaussian_ceo::rate_region::{membership_verdict, sum_rate_bounds, RateVector, Verdict};
use gaussian_ceo::waterfill::{alpha_spectrum, omega, water_level};
use gaussian_ceo::{load_model, DistortionSpec, Error, Matrix, ModelFile, RateAllocation, SourceModel};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "gceo",
    version,
    about = "Sum-rate bounds for Gaussian remote and multiterminal source coding"
)]
struct Cli {
    /// Report rates in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dimensions, conditional covariance and matching threshold of a model.
    Info {
        model: ExistingFile,
        /// Weighting matrix (default: identity).
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Inner and outer sum-rate bounds.
    Sumrate {
        model: ExistingFile,
        #[arg(long)]
        gamma: Option<String>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Classify a rate vector against the inner and outer regions.
    Member {
        model: ExistingFile,
        /// Comma-separated rates R_1,..,R_L (in the selected unit).
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        rates: Vec<f64>,
        #[arg(long)]
        gamma: Option<String>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Water level, levels and omega at a rate allocation.
    Waterfill {
        model: ExistingFile,
        /// Comma-separated allocation r_1,..,r_L in nats.
        #[arg(
            short = 'r',
            long = "alloc",
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        alloc: Vec<f64>,
        #[arg(long)]
        gamma: Option<String>,
        /// Total weighted distortion budget.
        #[arg(long)]
        sum: f64,
    },
    /// Sufficient condition for the inner and outer sum rates to coincide.
    Match {
        model: ExistingFile,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        sum: f64,
    },
    /// Map a direct-model criterion to the equivalent remote model and criterion.
    Convert {
        model: ExistingFile,
        #[arg(long)]
        gamma: Option<String>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Parametric sum-rate curve of a cyclic direct model as CSV.
    Curve {
        model: ExistingFile,
        /// Number of intervals; N + 1 points are printed.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Largest curve parameter r in nats.
        #[arg(long, default_value_t = 3.0)]
        r_end: f64,
    },
    /// Compare the analytic test-channel distortion with a simulation.
    Simulate {
        model: ExistingFile,
        /// Comma-separated allocation r_1,..,r_L in nats.
        #[arg(
            short = 'r',
            long = "alloc",
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        alloc: Vec<f64>,
        /// Number of samples.
        #[arg(short = 'n', long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exactly one distortion criterion.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SpecArgs {
    /// Trace criterion tr[Γ Σ Γᵀ] ≤ D.
    #[arg(long)]
    sum: Option<f64>,
    /// Per-component criterion [Γ Σ Γᵀ]_ii ≤ D_i (comma-separated).
    #[arg(long, value_delimiter = ',')]
    vector: Option<Vec<f64>>,
    /// Matrix criterion Σ ⪯ Σ_d: a scalar (times identity) or rows `a,b;c,d`.
    #[arg(long)]
    matrix: Option<String>,
}

#[derive(Debug, Clone)]
struct ExistingFile(PathBuf);

impl std::str::FromStr for ExistingFile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let p = PathBuf::from(s);
        if p.is_file() {
            Ok(ExistingFile(p))
        } else {
            Err(format!("no such file: {s}"))
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InfeasibleSpec(_)
        | Error::InsufficientBudget { .. }
        | Error::InfeasibleAllocation(_)
        | Error::DistortionNotPositive { .. }
        | Error::OutsideD { .. } => EXIT_INFEASIBLE,
        Error::NotPositiveDefinite(_) | Error::NonpositiveTheta(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn variant_name(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or_default()
        .to_string()
}

/// Runs the tool on `args` (including the program name). Normal output goes
/// to `out`, diagnostics to `err`; the return value is the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error [{}]: {e}", variant_name(&e));
            exit_code(&e)
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_NUMERICAL
        }
    }
}

struct Units {
    bits: bool,
}

impl Units {
    fn rate(&self, nats: f64) -> String {
        let v = if self.bits { nats / std::f64::consts::LN_2 } else { nats };
        format!("{} {}", sig(v, 6), self.name())
    }

    fn rates(&self, r: &[f64]) -> String {
        let scale = if self.bits { 1.0 / std::f64::consts::LN_2 } else { 1.0 };
        format!(
            "{} {}",
            join(&r.iter().map(|x| x * scale).collect::<Vec<_>>(), 6),
            self.name()
        )
    }

    fn to_nats(&self, v: f64) -> f64 {
        if self.bits {
            v * std::f64::consts::LN_2
        } else {
            v
        }
    }

    fn name(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

/// Shortest decimal that round-trips `x` rounded to `digits` significant digits.
fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let rounded: f64 = format!("{:.*e}", digits - 1, x).parse().unwrap_or(x);
    format!("{rounded}")
}

fn join(xs: &[f64], digits: usize) -> String {
    xs.iter().map(|&x| sig(x, digits)).collect::<Vec<_>>().join(",")
}

fn write_matrix(out: &mut dyn Write, name: &str, m: &Matrix) -> std::io::Result<()> {
    writeln!(out, "{name}:")?;
    for row in m.row_iter() {
        let v: Vec<f64> = row.iter().cloned().collect();
        writeln!(out, "  [{}]", join(&v, 6).replace(',', ", "))?;
    }
    Ok(())
}

/// A scalar (times the `k × k` identity) or rows `a,b;c,d`.
fn parse_matrix(text: &str, k: usize, what: &str) -> Result<Matrix, Failure> {
    let bad = |msg: String| Failure::Usage(format!("--{what}: {msg}"));
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("`{}`: {e}", v.trim()))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.len() == 1 && rows[0].len() == 1 {
        return Ok(Matrix::identity(k, k) * rows[0][0]);
    }
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(bad(format!("expected a scalar or a {k}x{k} matrix")));
    }
    Ok(Matrix::from_fn(k, k, |i, j| rows[i][j]))
}

fn gamma(text: &Option<String>, k: usize) -> Result<Matrix, Failure> {
    match text {
        Some(t) => parse_matrix(t, k, "gamma"),
        None => Ok(Matrix::identity(k, k)),
    }
}

fn spec(args: &SpecArgs, gamma_text: &Option<String>, k: usize) -> Result<DistortionSpec, Failure> {
    if let Some(d) = args.sum {
        Ok(DistortionSpec::sum(gamma(gamma_text, k)?, d))
    } else if let Some(d) = &args.vector {
        Ok(DistortionSpec::vector(gamma(gamma_text, k)?, d.clone()))
    } else if let Some(m) = &args.matrix {
        if gamma_text.is_some() {
            return Err(Failure::Usage("--gamma does not apply to --matrix".into()));
        }
        Ok(DistortionSpec::Matrix(parse_matrix(m, k, "matrix")?))
    } else {
        Err(Failure::Usage("one of --sum, --vector or --matrix is required".into()))
    }
}

fn describe_spec(out: &mut dyn Write, spec: &DistortionSpec) -> std::io::Result<()> {
    match spec {
        DistortionSpec::Matrix(m) => write_matrix(out, "criterion: matrix, sigma_d", m),
        DistortionSpec::Vector { gamma, d } => {
            write_matrix(out, "criterion: vector, gamma", gamma)?;
            writeln!(out, "d=[{}]", join(d, 9).replace(',', ", "))
        }
        DistortionSpec::Sum { gamma, d } => {
            write_matrix(out, "criterion: sum, gamma", gamma)?;
            writeln!(out, "d={}", sig(*d, 9))
        }
    }
}

fn allocation(values: &[f64], model: &SourceModel) -> Result<RateAllocation, Failure> {
    if values.len() != model.l() {
        return Err(Failure::Usage(format!(
            "expected {} rates, got {}",
            model.l(),
            values.len()
        )));
    }
    Ok(RateAllocation::new(values.to_vec())?)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let units = Units { bits: cli.bits };
    let cfg = SearchConfig::default();
    match &cli.command {
        Command::Info { model, gamma: g } => {
            let file = load_model(&model.0)?;
            let m = file.remote();
            let gm = gamma(g, m.k())?;
            let kind = match file {
                ModelFile::Remote(_) => "remote",
                ModelFile::Direct(_) => "direct",
            };
            writeln!(out, "kind={kind}")?;
            writeln!(out, "K={}", m.k())?;
            writeln!(out, "L={}", m.l())?;
            write_matrix(out, "sigma_x_given_y", &m.conditional_covariance())?;
            let alpha = alpha_max_star(m, &gm)?;
            writeln!(out, "alpha_max={}", sig(alpha, 6))?;
            writeln!(out, "matching_threshold={}", sig((m.k() as f64 + 1.0) / alpha, 6))?;
        }
        Command::Sumrate {
            model,
            gamma: g,
            spec: s,
        } => {
            let file = load_model(&model.0)?;
            let m = file.remote();
            let sp = spec(s, g, m.k())?;
            let b = sum_rate_bounds(m, &sp, &cfg)?;
            let matched = b.gap() <= 1e-6 * (1.0 + b.inner.value);
            writeln!(out, "inner={}", units.rate(b.inner.value))?;
            writeln!(out, "outer={}", units.rate(b.outer.value))?;
            writeln!(out, "gap={}", units.rate(b.gap()))?;
            writeln!(out, "matched={}", if matched { "yes" } else { "no" })?;
            writeln!(out, "r_inner={}", units.rates(b.inner.r.as_slice()))?;
        }
        Command::Member {
            model,
            rates,
            gamma: g,
            spec: s,
        } => {
            let file = load_model(&model.0)?;
            let m = file.remote();
            let sp = spec(s, g, m.k())?;
            let nats: Vec<f64> = rates.iter().map(|&v| units.to_nats(v)).collect();
            let rv = RateVector::new(nats)?;
            let report = membership_verdict(m, &rv, &sp, &cfg)?;
            match report.verdict() {
                Verdict::InnerCertified(r) => writeln!(out, "achievable (r={})", units.rates(r.as_slice()))?,
                Verdict::OuterCertified { r, theta } => writeln!(
                    out,
                    "undetermined: inside the outer bound (r={}, theta={})",
                    units.rates(r.as_slice()),
                    sig(theta, 6)
                )?,
                Verdict::ExcludedHeuristic { margin } => {
                    writeln!(out, "not achievable (outer bound missed by {})", units.rate(margin))?
                }
                Verdict::Undetermined => writeln!(out, "undetermined")?,
            }
            writeln!(out, "inner_margin={}", units.rate(report.inner_margin))?;
            writeln!(out, "outer_margin={}", units.rate(report.outer_margin))?;
        }
        Command::Waterfill {
            model,
            alloc,
            gamma: g,
            sum,
        } => {
            let file = load_model(&model.0)?;
            let m = file.remote();
            let gm = gamma(g, m.k())?;
            let r = allocation(alloc, m)?;
            let alphas = alpha_spectrum(m, &gm, &r)?;
            let sol = water_level(&alphas, *sum)?;
            let omega = omega(m, &gm, *sum, &r)?;
            writeln!(out, "xi={}", sig(sol.xi, 9))?;
            writeln!(out, "levels=[{}]", join(&sol.levels, 9).replace(',', ", "))?;
            writeln!(out, "omega={}", sig(omega, 9))?;
        }
        Command::Match { model, gamma: g, sum } => {
            let file = load_model(&model.0)?;
            let gm = gamma(g, file.remote().k())?;
            let verdict = |v: MatchVerdict| match v {
                MatchVerdict::Matched => "matched",
                MatchVerdict::Unknown => "unknown",
                MatchVerdict::Infeasible => "infeasible",
            };
            match &file {
                ModelFile::Remote(m) => {
                    let rep = sufficient_matching(m, &gm, *sum)?;
                    writeln!(out, "feasible_lower={}", sig(rep.feasible_lower, 9))?;
                    writeln!(out, "threshold={}", sig(rep.threshold, 9))?;
                    writeln!(out, "verdict={}", verdict(rep.verdict))?;
                }
                ModelFile::Direct(dm) => {
                    let rep = matching_direct(dm, &gm, *sum)?;
                    writeln!(out, "mu_min={}", sig(rep.mu_min, 9))?;
                    writeln!(out, "threshold={}", sig(rep.threshold, 9))?;
                    writeln!(out, "verdict={}", verdict(rep.verdict))?;
                }
            }
        }
        Command::Convert {
            model,
            gamma: g,
            spec: s,
        } => {
            let ModelFile::Direct(dm) = load_model(&model.0)? else {
                return Err(Failure::Usage("convert needs a model with kind = \"direct\"".into()));
            };
            let sp = spec(s, g, dm.l())?;
            let (remote, converted) = convert_spec(&dm, &sp)?;
            writeln!(out, "# remote model")?;
            write!(out, "{}", render_model(&ModelFile::Remote(remote)))?;
            writeln!(out, "# converted criterion")?;
            describe_spec(out, &converted)?;
        }
        Command::Curve { model, steps, r_end } => {
            let ModelFile::Direct(dm) = load_model(&model.0)? else {
                return Err(Failure::Usage("curve needs a model with kind = \"direct\"".into()));
            };
            if *steps == 0 || !(r_end.is_finite() && *r_end > 0.0) {
                return Err(Failure::Usage(
                    "--steps must be positive and --r-end positive and finite".into(),
                ));
            }
            let inst = CyclicInstance::new(dm)?;
            let scale = if units.bits { 1.0 / std::f64::consts::LN_2 } else { 1.0 };
            writeln!(out, "r,R_{},D", units.name())?;
            for k in 0..=*steps {
                let r = r_end * k as f64 / *steps as f64;
                let p = parametric_curve(&inst, r);
                writeln!(
                    out,
                    "{},{},{}",
                    sig(r * scale, 9),
                    sig(p.rate * scale, 9),
                    sig(p.distortion, 9)
                )?;
            }
        }
        Command::Simulate {
            model,
            alloc,
            samples,
            seed,
        } => {
            let file = load_model(&model.0)?;
            let m = file.remote();
            let r = allocation(alloc, m)?;
            let analytic = test_channel_distortion(m, &r)?;
            let mc = monte_carlo_distortion(m, &r, *samples, *seed)?;
            write_matrix(out, "analytic", &analytic)?;
            write_matrix(out, "empirical", &mc.empirical)?;
            let diff = &mc.empirical - &analytic;
            let worst_se = diff
                .iter()
                .zip(mc.std_error.iter())
                .map(|(d, s)| d.abs() / s)
                .fold(0.0, f64::max);
            writeln!(out, "max_abs_deviation={}", sig(diff.abs().max(), 6))?;
            writeln!(out, "max_deviation_in_std_errors={}", sig(worst_se, 6))?;
            writeln!(out, "samples={}", mc.samples)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.0, 9), "0");
        assert_eq!(sig(2.2, 9), "2.2");
        assert_eq!(sig(1.0397207708399179, 6), "1.03972");
        assert_eq!(sig(0.000496840874123, 9), "0.000496840874");
    }

    #[test]
    fn matrix_arguments() {
        assert_eq!(parse_matrix("2", 2, "gamma").unwrap(), Matrix::identity(2, 2) * 2.0);
        let m = parse_matrix("1,0.5;0.5,2", 2, "matrix").unwrap();
        assert_eq!(m[(1, 1)], 2.0);
        assert!(matches!(parse_matrix("1,2", 2, "gamma"), Err(Failure::Usage(_))));
        assert!(matches!(parse_matrix("x", 1, "gamma"), Err(Failure::Usage(_))));
    }
}
