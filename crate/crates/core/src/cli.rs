//! Command-line front end: argument parsing, run configuration and dispatch.

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::bench::{bench_suite, to_csv, BENCH_MAX_N};
use crate::error::{Error, Result};
use crate::graph::{export_dot, graph_from_operator, graph_from_reduction, DotOptions};
use crate::matrix::{random_matrix, random_zero_one, MatrixFormat, RandomKind, SquareMatrix};
use crate::oracle::{determinant_gauss, permanent_ryser, RYSER_MAX_N};
use crate::reduction::reduce_fully;
use crate::scalar::{rel_diff, Exact, Scalar};
use crate::selftest;
use crate::spectral::{block_decompose, hermitian_parts, verify_spectrum, DEFAULT_TOL};
use crate::spin::{SpinOperator, Statistics, Variant};
use crate::OpCount;

/// Largest size at which `perm` cross-checks against exact Ryser.
pub const EXACT_RYSER_MAX_N: usize = 16;

#[derive(Parser, Debug)]
#[command(name = "spinperm", version, about = "Permanents and determinants via a spin-1/2 branching operator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,

    /// Matrix file (CSV, or JSON for a `.json` extension); `-` reads stdin.
    #[arg(long, global = true, conflicts_with = "gen")]
    pub input: Option<String>,

    /// Generated input, e.g. `n=4,seed=1,kind=zero_one`.
    #[arg(long, global = true)]
    pub gen: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = Backend::Float)]
    pub backend: Backend,

    #[arg(long, global = true, value_enum, default_value_t = VariantArg::Breve)]
    pub variant: VariantArg,

    /// Defaults to bosonic; `perm` and `det` fix it themselves.
    #[arg(long, global = true, value_enum)]
    pub statistics: Option<StatisticsArg>,

    /// Relative tolerance for residuals and cross-checks.
    #[arg(long, global = true, env = "SPINPERM_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum CliCommand {
    /// Permanent by the bosonic level sweep, checked against Ryser.
    Perm,
    /// Determinant by the fermionic level sweep, checked against elimination.
    Det,
    /// Eigenpairs, ranks and block structure of the operator.
    Spectrum,
    /// Generalized-kernel row reduction down to a single cycle.
    Reduce,
    /// Branching-program graph as DOT or JSON.
    Graph {
        /// Graph of the operator after this many reduction rounds.
        #[arg(long)]
        round: Option<usize>,
        /// Drop the `-` prefix on fermionic edge labels.
        #[arg(long)]
        no_signs: bool,
        /// Label edges with numeric weights.
        #[arg(long)]
        numeric: bool,
    },
    /// CSV table of operation counts and median wall times.
    Bench {
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Invariant suite at n ≤ 6.
    Selftest,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Float,
    Exact,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantArg {
    Tilde,
    Breve,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatisticsArg {
    Bosonic,
    Fermionic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Perm,
    Det,
    Spectrum,
    Reduce,
    Graph {
        round: Option<usize>,
        options: DotOptions,
    },
    Bench {
        n_min: usize,
        n_max: usize,
        repeats: usize,
    },
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Perm => "perm",
            Command::Det => "det",
            Command::Spectrum => "spectrum",
            Command::Reduce => "reduce",
            Command::Graph { .. } => "graph",
            Command::Bench { .. } => "bench",
            Command::Selftest => "selftest",
        }
    }

    fn needs_input(&self) -> bool {
        !matches!(self, Command::Bench { .. } | Command::Selftest)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub seed: u64,
    pub kind: RandomKind,
}

impl GeneratorSpec {
    /// Parses `n=4,seed=1,kind=zero_one`; `seed` defaults to 0 and `kind`
    /// to `complex_gaussian`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (mut n, mut seed, mut kind) = (None, 0, RandomKind::ComplexGaussian);
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Malformed(format!("generator field {part:?} is not key=value")))?;
            let bad = || Error::BadToken {
                token: value.to_string(),
            };
            match key.trim() {
                "n" => n = Some(value.trim().parse().map_err(|_| bad())?),
                "seed" => seed = value.trim().parse().map_err(|_| bad())?,
                "kind" => kind = value.trim().parse()?,
                other => return Err(Error::Malformed(format!("unknown generator field {other:?}"))),
            }
        }
        match n {
            Some(n) if n >= 1 => Ok(GeneratorSpec { n, seed, kind }),
            Some(_) => Err(Error::Malformed("generator needs n ≥ 1".into())),
            None => Err(Error::Malformed("generator needs n".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    File(PathBuf),
    Stdin,
    Generator(GeneratorSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<InputSource>,
    pub backend: Backend,
    pub variant: Variant,
    pub statistics: Statistics,
    pub tol: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let command = match cli.command {
            CliCommand::Perm => Command::Perm,
            CliCommand::Det => Command::Det,
            CliCommand::Spectrum => Command::Spectrum,
            CliCommand::Reduce => Command::Reduce,
            CliCommand::Graph {
                round,
                no_signs,
                numeric,
            } => Command::Graph {
                round,
                options: DotOptions {
                    show_signs: !no_signs,
                    numeric_weights: numeric,
                },
            },
            CliCommand::Bench {
                n_min,
                n_max,
                repeats,
            } => Command::Bench {
                n_min,
                n_max,
                repeats,
            },
            CliCommand::Selftest => Command::Selftest,
        };
        let requested = cli.statistics.map(|s| match s {
            StatisticsArg::Bosonic => Statistics::Bosonic,
            StatisticsArg::Fermionic => Statistics::Fermionic,
        });
        let statistics = match (&command, requested) {
            (Command::Perm, Some(Statistics::Fermionic)) | (Command::Det, Some(Statistics::Bosonic)) => {
                return Err(Error::Unsupported(format!(
                    "{} fixes its own statistics",
                    command.name()
                )))
            }
            (Command::Det, _) => Statistics::Fermionic,
            (_, s) => s.unwrap_or_default(),
        };
        let input = match (cli.input, cli.gen) {
            (Some(path), _) if path == "-" => Some(InputSource::Stdin),
            (Some(path), _) => Some(InputSource::File(path.into())),
            (None, Some(spec)) => Some(InputSource::Generator(GeneratorSpec::parse(&spec)?)),
            (None, None) => None,
        };
        let format = cli.format.unwrap_or(match command {
            Command::Graph { .. } => Format::Dot,
            _ => Format::Text,
        });
        let config = RunConfig {
            command,
            input,
            backend: cli.backend,
            variant: match cli.variant {
                VariantArg::Tilde => Variant::Tilde,
                VariantArg::Breve => Variant::Breve,
            },
            statistics,
            tol: cli.tol,
            output: cli.output,
            format,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Malformed(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.command.needs_input() && self.input.is_none() {
            return Err(Error::Malformed(format!(
                "{} needs --input or --gen",
                self.command.name()
            )));
        }
        match (&self.command, self.format) {
            (Command::Graph { .. }, Format::Text) => {
                return Err(Error::Unsupported("graph writes dot or json".into()))
            }
            (Command::Graph { .. }, _) => {}
            (_, Format::Dot) => {
                return Err(Error::Unsupported(format!(
                    "{} has no dot output",
                    self.command.name()
                )))
            }
            _ => {}
        }
        if self.backend == Backend::Exact {
            if !matches!(self.command, Command::Perm | Command::Det) {
                return Err(Error::Unsupported(format!(
                    "the exact backend covers perm and det only, not {}",
                    self.command.name()
                )));
            }
            if let Some(InputSource::Generator(g)) = &self.input {
                if g.kind != RandomKind::ZeroOne {
                    return Err(Error::Unsupported(
                        "the exact backend needs rational entries; use kind=zero_one or a file".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Result of a successful run: exit status (0 or 1) and the output blob.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub output: String,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome { status: 0, output }
    }
}

/// Exit code for an error: 1 for failed verification, 2 for bad input.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        2
    } else {
        1
    }
}

pub fn error_json(err: &Error) -> String {
    json!({ "error": err.kind(), "message": err.to_string() }).to_string()
}

fn read_source(source: &InputSource) -> Result<(String, MatrixFormat)> {
    let (text, json_ext) = match source {
        InputSource::Stdin => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::Malformed(format!("stdin: {e}")))?;
            (s, false)
        }
        InputSource::File(path) => {
            let s = std::fs::read_to_string(path)
                .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
            (s, path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")))
        }
        InputSource::Generator(_) => unreachable!("generators are not read"),
    };
    let format = if json_ext || text.trim_start().starts_with('{') {
        MatrixFormat::Json
    } else {
        MatrixFormat::Csv
    };
    Ok((text, format))
}

fn load_float(source: &InputSource) -> Result<SquareMatrix<Complex64>> {
    match source {
        InputSource::Generator(g) => Ok(random_matrix(g.n, g.seed, g.kind)),
        other => {
            let (text, format) = read_source(other)?;
            SquareMatrix::parse(&text, format)
        }
    }
}

fn load_exact(source: &InputSource) -> Result<SquareMatrix<Exact>> {
    match source {
        InputSource::Generator(g) => Ok(random_zero_one(g.n, g.seed)),
        other => {
            let (text, format) = read_source(other)?;
            SquareMatrix::parse(&text, format)
        }
    }
}

fn ops_json(ops: OpCount) -> Value {
    json!({
        "multiplications": ops.multiplications,
        "additions": ops.additions,
        "total": ops.total(),
    })
}

/// Sweep value, operation count and an optional oracle value.
struct Evaluation {
    n: usize,
    value: String,
    value_c64: Complex64,
    ops: OpCount,
    oracle: Option<(&'static str, String, bool, f64)>,
}

fn evaluate_exact(config: &RunConfig, m: &SquareMatrix<Exact>) -> Result<Evaluation> {
    let op = SpinOperator::new(m, config.variant, config.statistics)?;
    let (value, ops) = op.evaluate();
    let oracle = match config.statistics {
        Statistics::Bosonic if m.n() <= EXACT_RYSER_MAX_N => Some(("ryser", permanent_ryser(m)?)),
        Statistics::Bosonic => None,
        Statistics::Fermionic => Some(("gauss", determinant_gauss(m))),
    };
    Ok(Evaluation {
        n: m.n(),
        value_c64: value.to_c64(),
        oracle: oracle.map(|(name, o)| (name, o.to_literal(), o == value, if o == value { 0.0 } else { 1.0 })),
        value: value.to_literal(),
        ops,
    })
}

fn evaluate_float(config: &RunConfig, m: &SquareMatrix<Complex64>) -> Result<Evaluation> {
    let op = SpinOperator::new(m, config.variant, config.statistics)?;
    let (value, ops) = op.evaluate();
    let oracle = match config.statistics {
        Statistics::Bosonic if m.n() <= RYSER_MAX_N => Some(("ryser", permanent_ryser(m)?)),
        Statistics::Bosonic => None,
        Statistics::Fermionic => Some(("gauss", determinant_gauss(m))),
    };
    Ok(Evaluation {
        n: m.n(),
        value: value.to_literal(),
        value_c64: value,
        ops,
        oracle: oracle.map(|(name, o)| {
            let d = rel_diff(value, o);
            (name, o.to_literal(), d <= config.tol, d)
        }),
    })
}

fn run_evaluate(config: &RunConfig, input: &InputSource) -> Result<Outcome> {
    let e = match config.backend {
        Backend::Exact => evaluate_exact(config, &load_exact(input)?)?,
        Backend::Float => evaluate_float(config, &load_float(input)?)?,
    };
    let what = match config.statistics {
        Statistics::Bosonic => "permanent",
        Statistics::Fermionic => "determinant",
    };
    let output = match config.format {
        Format::Json => {
            let oracle = e.oracle.as_ref().map(|(name, v, agrees, d)| {
                json!({ "method": name, "value": v, "agrees": agrees, "rel_diff": d })
            });
            json!({
                "command": config.command.name(),
                "n": e.n,
                "backend": if config.backend == Backend::Exact { "exact" } else { "float" },
                "value": e.value,
                "value_complex": [e.value_c64.re, e.value_c64.im],
                "ops": ops_json(e.ops),
                "oracle": oracle,
            })
            .to_string()
                + "\n"
        }
        _ => {
            let mut s = format!("n = {}\n{what} = {}\nops = {}\n", e.n, e.value, e.ops.total());
            if let Some((name, v, agrees, d)) = &e.oracle {
                let verdict = if *agrees { "agrees" } else { "DISAGREES" };
                s += &format!("{name} = {v} ({verdict}, rel diff {d:.3e})\n");
            }
            s
        }
    };
    match &e.oracle {
        Some((name, v, false, d)) => Err(Error::Consistency(format!(
            "{what} {} disagrees with {name} {v} (rel diff {d:e})",
            e.value
        ))),
        _ => Ok(Outcome::ok(output)),
    }
}

fn run_spectrum(config: &RunConfig, m: &SquareMatrix<Complex64>) -> Result<Outcome> {
    let op = SpinOperator::new(m, config.variant, config.statistics)?;
    let report = verify_spectrum(&op, config.tol)?;
    let blocks = block_decompose(&op)?;
    hermitian_parts(&op)?;
    let output = match config.format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).map_err(|e| Error::Consistency(e.to_string()))?;
            v["blocks"] = json!(blocks.iter().map(|b| b.states.len()).collect::<Vec<_>>());
            v.to_string() + "\n"
        }
        _ => {
            let mut s = format!(
                "n = {}, dimension = {}, period = {}\n{} = {}\nprincipal root = {}\n",
                report.n,
                report.dimension,
                op.period(),
                match config.statistics {
                    Statistics::Bosonic => "permanent",
                    Statistics::Fermionic => "determinant",
                },
                report.permanent,
                report.principal_root
            );
            for p in &report.eigenpairs {
                s += &format!("k = {}: eigenvalue {:.12}, residual {:.3e}\n", p.k, p.eigenvalue, p.residual);
            }
            s += &format!(
                "rank(M^{}) = {}, nullity = {}, rank(M) = {}\ngeneralized kernel ranks = {:?}\nlevel blocks = {}\n",
                op.period(),
                report.rank,
                report.nullity,
                report.operator_rank,
                report.generalized_kernel_ranks,
                blocks.len()
            );
            s
        }
    };
    Ok(Outcome::ok(output))
}

fn run_reduce(config: &RunConfig, m: &SquareMatrix<Complex64>) -> Result<Outcome> {
    let op = SpinOperator::new(m, config.variant, config.statistics)?;
    let trace = reduce_fully(&op)?;
    let (value, _) = op.evaluate();
    let d = rel_diff(trace.final_product, value);
    if d > config.tol {
        return Err(Error::Consistency(format!(
            "reduced cycle product {} differs from sweep value {value} (rel diff {d:e})",
            trace.final_product
        )));
    }
    let output = match config.format {
        Format::Json => trace.to_json().to_string() + "\n",
        _ => {
            let mut s = format!("n = {}, statistics = {:?}\n", trace.n, trace.statistics);
            for r in &trace.rounds[1..] {
                let removed: Vec<String> = r.removed.iter().map(ToString::to_string).collect();
                s += &format!(
                    "round {}: removed {{{}}}, dimension {}, fill (reweighted {}, unchanged {}, new {})\n",
                    r.round,
                    removed.join(","),
                    r.dimension(),
                    r.fill_stats.reweighted,
                    r.fill_stats.unchanged,
                    r.fill_stats.new
                );
            }
            s += &format!("cycle product = {}\n", trace.final_product);
            s
        }
    };
    Ok(Outcome::ok(output))
}

fn run_graph(
    config: &RunConfig,
    m: &SquareMatrix<Complex64>,
    round: Option<usize>,
    options: DotOptions,
) -> Result<Outcome> {
    let op = SpinOperator::new(m, config.variant, config.statistics)?;
    let graph = match round {
        None | Some(0) => graph_from_operator(&op)?,
        Some(r) => graph_from_reduction(&reduce_fully(&op)?, r)?,
    };
    let output = match config.format {
        Format::Json => graph.to_json().to_string() + "\n",
        _ => export_dot(&graph, options),
    };
    Ok(Outcome::ok(output))
}

fn run_selftest(config: &RunConfig) -> Outcome {
    let results = selftest::run(config.tol);
    let passed = results.iter().all(|r| r.passed);
    let output = match config.format {
        Format::Json => json!({ "passed": passed, "checks": results }).to_string() + "\n",
        _ => results
            .iter()
            .map(|r| {
                let mark = if r.passed { "PASS" } else { "FAIL" };
                if r.detail.is_empty() {
                    format!("{mark} {}\n", r.name)
                } else {
                    format!("{mark} {} — {}\n", r.name, r.detail)
                }
            })
            .collect(),
    };
    Outcome {
        status: if passed { 0 } else { 1 },
        output,
    }
}

/// Executes one validated configuration.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    if let Command::Bench {
        n_min,
        n_max,
        repeats,
    } = config.command
    {
        if n_max > BENCH_MAX_N {
            return Err(Error::SizeGuard {
                what: "bench",
                n: n_max,
                max: BENCH_MAX_N,
            });
        }
        let rows = bench_suite(n_min..=n_max, repeats)?;
        return Ok(Outcome::ok(match config.format {
            Format::Json => json!(rows).to_string() + "\n",
            _ => to_csv(&rows),
        }));
    }
    if config.command == Command::Selftest {
        return Ok(run_selftest(config));
    }
    let input = config.input.as_ref().expect("validated");
    match &config.command {
        Command::Perm | Command::Det => run_evaluate(config, input),
        Command::Spectrum => run_spectrum(config, &load_float(input)?),
        Command::Reduce => run_reduce(config, &load_float(input)?),
        Command::Graph { round, options } => run_graph(config, &load_float(input)?, *round, *options),
        Command::Bench { .. } | Command::Selftest => unreachable!(),
    }
}

fn write_output(path: Option<&Path>, output: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, output).map_err(|e| Error::Malformed(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{output}");
            Ok(())
        }
    }
}

/// Parses arguments, runs, writes output and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = RunConfig::from_cli(cli).and_then(|config| {
        let outcome = run(&config)?;
        write_output(config.output.as_deref(), &outcome.output)?;
        Ok(outcome)
    });
    match outcome {
        Ok(o) => o.status,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> Result<RunConfig> {
        let cli = Cli::try_parse_from(std::iter::once("spinperm").chain(args.iter().copied())).unwrap();
        RunConfig::from_cli(cli)
    }

    #[test]
    fn generator_specs() {
        let g = GeneratorSpec::parse("n=4,seed=1,kind=zero_one").unwrap();
        assert_eq!((g.n, g.seed, g.kind), (4, 1, RandomKind::ZeroOne));
        assert_eq!(GeneratorSpec::parse("n=3").unwrap().kind, RandomKind::ComplexGaussian);
        assert!(GeneratorSpec::parse("seed=1").is_err());
        assert!(GeneratorSpec::parse("n=0").is_err());
        assert!(GeneratorSpec::parse("n=3,colour=red").is_err());
        assert!(GeneratorSpec::parse("n=3,kind=heavy").is_err());
    }

    #[test]
    fn config_invariants() {
        assert!(config(&["graph", "--gen", "n=3", "--format", "text"]).is_err());
        assert_eq!(config(&["graph", "--gen", "n=3"]).unwrap().format, Format::Dot);
        assert!(config(&["spectrum", "--gen", "n=3", "--backend", "exact"]).is_err());
        assert!(config(&["perm", "--gen", "n=3", "--backend", "exact"]).is_err());
        assert!(config(&["perm", "--gen", "n=3,kind=zero_one", "--backend", "exact"]).is_ok());
        assert!(config(&["perm"]).is_err());
        assert!(config(&["perm", "--gen", "n=3", "--statistics", "fermionic"]).is_err());
        assert_eq!(config(&["det", "--gen", "n=3"]).unwrap().statistics, Statistics::Fermionic);
        assert!(config(&["perm", "--gen", "n=3", "--tol=-1"]).is_err());
        assert!(config(&["selftest"]).is_ok());
    }

    #[test]
    fn perm_zero_one_example() {
        let out = run(&config(&["perm", "--gen", "n=4,seed=1,kind=zero_one"]).unwrap()).unwrap();
        assert_eq!(out.status, 0);
        assert!(out.output.contains("ops = 64"), "{}", out.output);
        let exact = run(&config(&["perm", "--gen", "n=4,seed=1,kind=zero_one", "--backend", "exact"]).unwrap()).unwrap();
        let value = |s: &str| s.lines().find(|l| l.starts_with("permanent")).unwrap().to_string();
        assert_eq!(value(&out.output), value(&exact.output));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::EmptyInput), 2);
        assert_eq!(exit_code(&Error::Consistency("x".into())), 1);
        let e = error_json(&Error::EmptyInput);
        let v: Value = serde_json::from_str(&e).unwrap();
        assert_eq!(v["error"], "ParseError");
    }
}
