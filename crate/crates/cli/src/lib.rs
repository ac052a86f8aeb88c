//! Command-line front end for `fraclag`.
//!
//! Every command writes CSV (header row first, floats with 17 significant
//! digits) to `--out` or to standard output. Exit codes: 0 on success, 1 on
//! runtime or data errors, 2 on usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fraclag::apply::{apply_with_systems, node_systems};
use fraclag::estimates::{eps1, eps2, g_sequences, n_star, n_star_star, standard_estimate};
use fraclag::io::{format_float, format_vector, read_dense_csv, read_diagonal, read_vector};
use fraclag::oracle::{
    error_sweep, exact_dense_apply, exact_diagonal_apply, log_grid, reference_operator_entries,
};
use fraclag::planner::{
    balanced_estimate, make_plan, plan_for_tolerance, truncated_estimate, Plan,
};
use fraclag::{Mode, OperatorHandle, Params};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FRACLAG_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "fraclag",
    version,
    about = "Resolvents of fractional operator powers by Gauss-Laguerre quadrature"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar quadrature errors and their estimates over a log-spaced lambda grid.
    ScalarSweep(ScalarSweepArgs),
    /// The g sequences, eps1/eps2 and the crossovers n*, n** for n = 1..n-max.
    Sequences(SequencesArgs),
    /// Node budgets (m, k_n, j_n, k_m, j_m) for a list of n or a tolerance.
    Plan(PlanArgs),
    /// Measured operator errors and estimates for each method variant.
    OperatorError(OperatorErrorArgs),
    /// Apply the method to a matrix or diagonal operator and a vector.
    Apply(ApplyArgs),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ProblemArgs {
    /// Fractional exponent in (0, 1); decimal or a fraction such as 1/3.
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: f64,
    /// Step size h > 0.
    #[arg(long, value_parser = parse_h)]
    pub h: f64,
}

impl ProblemArgs {
    fn params(&self) -> Result<Params, CliError> {
        Params::new(self.alpha, self.h).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Standard,
    Balanced,
    Truncated,
}

impl ModeArg {
    pub fn with_n(self, n: usize) -> Mode {
        match self {
            ModeArg::Standard => Mode::Standard(n),
            ModeArg::Balanced => Mode::Balanced(n),
            ModeArg::Truncated => Mode::Truncated(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeSelection {
    Standard,
    Balanced,
    Truncated,
    All,
}

impl ModeSelection {
    fn includes(self, mode: ModeArg) -> bool {
        match self {
            ModeSelection::All => true,
            ModeSelection::Standard => mode == ModeArg::Standard,
            ModeSelection::Balanced => mode == ModeArg::Balanced,
            ModeSelection::Truncated => mode == ModeArg::Truncated,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScalarSweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_parser = parse_positive)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1e16)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 200, value_parser = parse_positive)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Standard)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SequencesArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_parser = parse_positive)]
    pub n_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "budget", required = true, multiple = false, args = ["n", "tol"])]
pub struct PlanArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated rule sizes.
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub n: Vec<usize>,
    /// Smallest n whose predicted error is at most this value.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Search limit for --tol.
    #[arg(long, default_value_t = 2000, value_parser = parse_positive)]
    pub max_n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OperatorSourceArgs {
    /// Dense symmetric matrix, one comma-separated row per line.
    #[arg(long, conflicts_with = "diag_file")]
    pub matrix_file: Option<PathBuf>,
    /// Diagonal entries, whitespace separated; "+inf" allowed.
    #[arg(long)]
    pub diag_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OperatorErrorArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated rule sizes.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_positive)]
    pub n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeSelection::All)]
    pub mode: ModeSelection,
    /// Operator; defaults to diag(10^0, 10^0.1, ..., 10^16).
    #[command(flatten)]
    pub operator: OperatorSourceArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "operator_input", required = true, multiple = false, args = ["matrix_file", "diag_file"])]
pub struct ApplyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_parser = parse_positive)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Truncated)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub operator: OperatorSourceArgs,
    #[arg(long)]
    pub vector_file: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Runtime(err) => write!(f, "{err:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Runtime(err)
    }
}

impl From<fraclag::Error> for CliError {
    fn from(err: fraclag::Error) -> Self {
        CliError::Runtime(err.into())
    }
}

/// Accepts `0.25` as well as `1/3`.
pub fn parse_alpha(text: &str) -> Result<f64, String> {
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in '{text}'"))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in '{text}'"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in '{text}'"));
            }
            num / den
        }
        None => text
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse '{text}' as a number"))?,
    };
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(format!(
            "alpha must lie strictly between 0 and 1, got {value}"
        ))
    }
}

fn parse_h(text: &str) -> Result<f64, String> {
    let h: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse '{text}' as a number"))?;
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(format!("h must be positive and finite, got {h}"))
    }
}

fn parse_positive(text: &str) -> Result<usize, String> {
    match text.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got '{text}'")),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| execute(cli.command));
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads =
        parse_positive(&raw).map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))?;
    // A pool may already exist when commands run in-process more than once.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::ScalarSweep(args) => {
            let p = args.problem.params()?;
            let range_ok = args.lambda_min >= 1.0
                && args.lambda_max >= args.lambda_min
                && args.lambda_max.is_finite();
            if !range_ok {
                return Err(CliError::Usage(format!(
                    "need 1 <= lambda-min <= lambda-max < inf, got [{:e}, {:e}]",
                    args.lambda_min, args.lambda_max
                )));
            }
            let grid = log_grid(args.lambda_min, args.lambda_max, args.points);
            let csv = scalar_sweep_csv(&p, args.mode.with_n(args.n), &grid)?;
            emit(args.out.as_deref(), &csv)
        }
        Command::Sequences(args) => {
            let p = args.problem.params()?;
            emit(args.out.as_deref(), &sequences_csv(&p, args.n_max))
        }
        Command::Plan(args) => {
            let p = args.problem.params()?;
            let plans = match args.tol {
                Some(tol) => {
                    if tol.is_nan() || tol <= 0.0 {
                        return Err(CliError::Usage(format!("tol must be positive, got {tol}")));
                    }
                    vec![plan_for_tolerance(tol, args.max_n, &p)?]
                }
                None => args
                    .n
                    .iter()
                    .map(|&n| make_plan(n, &p))
                    .collect::<fraclag::Result<_>>()?,
            };
            emit(args.out.as_deref(), &plan_csv(&plans))
        }
        Command::OperatorError(args) => {
            let p = args.problem.params()?;
            let target = OperatorTarget::load(&args.operator, &p)?;
            let csv = operator_error_csv(&p, &args.n, args.mode, &target)?;
            emit(args.out.as_deref(), &csv)
        }
        Command::Apply(args) => {
            let p = args.problem.params()?;
            let handle = load_operator(&args.operator)?.ok_or_else(|| {
                CliError::Usage("one of --matrix-file or --diag-file is required".into())
            })?;
            let b = read_vector(&args.vector_file)
                .with_context(|| format!("reading {}", args.vector_file.display()))?;
            let mode = args.mode.with_n(args.n);
            let plan = make_plan(args.n, &p)?;
            let predicted = match args.mode {
                ModeArg::Standard => standard_estimate(args.n, &p),
                ModeArg::Balanced => balanced_estimate(args.n, &p),
                ModeArg::Truncated => plan.predicted_error,
            };
            eprintln!(
                "plan: n={} m={} k_n={} k_m={} j_n={} j_m={} mode={} predicted_error={}",
                plan.n,
                plan.m,
                plan.k_n,
                plan.k_m,
                plan.j_n,
                plan.j_m,
                args.mode
                    .to_possible_value()
                    .map(|v| v.get_name().to_owned())
                    .unwrap_or_default(),
                format_float(predicted)
            );
            let y = fraclag::apply_resolvent(&handle, &b, &p, mode)?;
            emit(args.out.as_deref(), &format_vector(&y))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            use std::io::Write as _;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing to standard output")?;
        }
    }
    Ok(())
}

fn load_operator(src: &OperatorSourceArgs) -> Result<Option<OperatorHandle>, CliError> {
    if let Some(path) = &src.matrix_file {
        let m = read_dense_csv(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Some(OperatorHandle::dense(m)?));
    }
    if let Some(path) = &src.diag_file {
        let d = read_diagonal(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Some(OperatorHandle::diagonal(d)?));
    }
    Ok(None)
}

/// An operator together with its exact resolvent applied to the all-ones
/// vector.
pub struct OperatorTarget {
    pub handle: OperatorHandle,
    pub exact: Vec<f64>,
}

impl OperatorTarget {
    pub fn load(src: &OperatorSourceArgs, p: &Params) -> Result<Self, CliError> {
        if let Some(path) = &src.matrix_file {
            let m = read_dense_csv(path).with_context(|| format!("reading {}", path.display()))?;
            let ones = vec![1.0; m.nrows()];
            let exact = exact_dense_apply(&m, &ones, p)?;
            return Ok(OperatorTarget {
                handle: OperatorHandle::dense(m)?,
                exact,
            });
        }
        let entries = match &src.diag_file {
            Some(path) => {
                read_diagonal(path).with_context(|| format!("reading {}", path.display()))?
            }
            None => reference_operator_entries(),
        };
        Ok(Self::diagonal(entries, p)?)
    }

    pub fn diagonal(entries: Vec<f64>, p: &Params) -> fraclag::Result<Self> {
        let ones = vec![1.0; entries.len()];
        let exact = exact_diagonal_apply(&entries, &ones, p)?;
        Ok(OperatorTarget {
            handle: OperatorHandle::diagonal(entries)?,
            exact,
        })
    }

    /// Max-entry error of `mode` on the all-ones vector and the number of
    /// shifted solves it used.
    pub fn measure(&self, p: &Params, mode: Mode) -> fraclag::Result<(f64, usize)> {
        let systems = node_systems(p, mode)?;
        let ones = vec![1.0; self.exact.len()];
        let y = apply_with_systems(&self.handle, &ones, p, &systems)?;
        let err = y
            .iter()
            .zip(&self.exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((err, systems.inversions()))
    }
}

fn regime_str<T: std::fmt::Display>(r: T) -> String {
    r.to_string()
}

pub fn scalar_sweep_csv(p: &Params, mode: Mode, grid: &[f64]) -> fraclag::Result<String> {
    let rows = error_sweep(p, grid, mode)?;
    let mut out =
        String::from("lambda,err_total,err_int1,err_int2,q_I,q_II,q_III,q_IV,regime1,regime2\n");
    for r in rows {
        let e = &r.estimates;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            format_float(r.lambda),
            format_float(r.err_total),
            format_float(r.err_int1),
            format_float(r.err_int2),
            format_float(e.q_i),
            format_float(e.q_ii),
            format_float(e.q_iii),
            format_float(e.q_iv),
            regime_str(e.regime1),
            regime_str(e.regime2),
        );
    }
    Ok(out)
}

pub fn sequences_csv(p: &Params, n_max: usize) -> String {
    let mut out = String::from("n,g_I,g_II,g_III,g_IV,eps1,eps2,n_star,n_star_star\n");
    let (ns, nss) = (n_star(p), n_star_star(p));
    for n in 1..=n_max {
        let g = g_sequences(n, p);
        let _ = writeln!(
            out,
            "{n},{},{},{},{},{},{},{},{}",
            format_float(g.g_i),
            format_float(g.g_ii),
            format_float(g.g_iii),
            format_float(g.g_iv),
            format_float(eps1(n, p)),
            format_float(eps2(n, p)),
            format_float(ns),
            format_float(nss),
        );
    }
    out
}

pub fn plan_csv(plans: &[Plan]) -> String {
    let mut out = String::from("n,m,k_n,j_n,k_m,j_m,predicted_error,inversions\n");
    for pl in plans {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            pl.n,
            pl.m,
            pl.k_n,
            pl.j_n,
            pl.k_m,
            pl.j_m,
            format_float(pl.predicted_error),
            pl.inversions
        );
    }
    out
}

/// Columns after `inversions` (which counts the standard method's `2n`
/// solves) come in error/estimate pairs per variant; the last two columns
/// give the solve counts of the balanced and truncated variants. Variants not
/// selected are left empty.
pub fn operator_error_csv(
    p: &Params,
    ns: &[usize],
    selection: ModeSelection,
    target: &OperatorTarget,
) -> fraclag::Result<String> {
    let mut out = String::from(
        "n,inversions,err_standard,est_standard,err_balanced,est_balanced,err_truncated,est_truncated,inversions_balanced,inversions_truncated\n",
    );
    for &n in ns {
        let mut cells = vec![n.to_string(), (2 * n).to_string()];
        let mut counts = [String::new(), String::new()];
        for (mode, estimate) in [
            (
                ModeArg::Standard,
                standard_estimate as fn(usize, &Params) -> f64,
            ),
            (ModeArg::Balanced, balanced_estimate),
            (ModeArg::Truncated, truncated_estimate),
        ] {
            if selection.includes(mode) {
                let (err, inversions) = target.measure(p, mode.with_n(n))?;
                cells.push(format_float(err));
                cells.push(format_float(estimate(n, p)));
                match mode {
                    ModeArg::Balanced => counts[0] = inversions.to_string(),
                    ModeArg::Truncated => counts[1] = inversions.to_string(),
                    ModeArg::Standard => {}
                }
            } else {
                cells.push(String::new());
                cells.push(String::new());
            }
        }
        cells.extend(counts);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_accepts_fractions() {
        assert_eq!(parse_alpha("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_alpha("0.75").unwrap(), 0.75);
        assert!(parse_alpha("1").is_err());
        assert!(parse_alpha("1/0").is_err());
        assert!(parse_alpha("x").is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(
            run(["fraclag", "plan", "--alpha", "1.5", "--h", "1", "--n", "5"]),
            2
        );
        assert_eq!(run(["fraclag", "plan", "--alpha", "0.5", "--h", "1"]), 2);
        assert_eq!(run(["fraclag", "nonsense"]), 2);
    }

    #[test]
    fn plan_rows_follow_input_order() {
        let p = Params::new(0.6, 0.01).unwrap();
        let plans: Vec<_> = [10, 5].iter().map(|&n| make_plan(n, &p).unwrap()).collect();
        let csv = plan_csv(&plans);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "n,m,k_n,j_n,k_m,j_m,predicted_error,inversions");
        assert!(lines[1].starts_with("10,4,"));
        assert!(lines[2].starts_with("5,2,"));
    }

    #[test]
    fn single_mode_leaves_other_columns_empty() {
        let p = Params::new(0.5, 0.01).unwrap();
        let target = OperatorTarget::diagonal(vec![1.0, 10.0, 100.0], &p).unwrap();
        let csv = operator_error_csv(&p, &[4], ModeSelection::Balanced, &target).unwrap();
        let row: Vec<_> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[0], "4");
        assert_eq!(row[1], "8");
        assert!(row[2].is_empty() && row[3].is_empty());
        assert!(!row[4].is_empty() && !row[5].is_empty());
        assert!(row[6].is_empty() && row[7].is_empty());
        assert!(!row[8].is_empty() && row[9].is_empty());
    }

    #[test]
    fn sequences_have_one_row_per_n() {
        let p = Params::new(0.7, 0.01).unwrap();
        assert_eq!(sequences_csv(&p, 1).lines().count(), 2);
        assert_eq!(sequences_csv(&p, 25).lines().count(), 26);
    }
}
