//! Command-line front end.
//!
//! Every subcommand writes deterministic JSON (or TSV where a table is
//! natural) to standard output. Exit codes: 0 success or verdict true,
//! 1 verdict false, 2 usage or input error, 3 internal inconsistency.

use std::fs;
use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::congruence::{
    ramified_deep_only, ramified_elementary_only, search_ramified, theorem_verdict_with_range,
    worked_example_report, CongruenceError, CongruenceReport,
};
use crate::exact_arith::{
    format_rational, parse_rational, CoefficientRing, EisensteinRing, GaloisRing, IdealRing, IdealSpec,
    LocalizedRationals, Rational,
};
use crate::module_compare::{
    embedding_possible, recover_multiplicities, ss_isomorphic, trace_range, virtual_compare, IntegerMatrix,
    ModuleError, MultiplicityVector, SsComparison, TraceRow, VirtualComparison,
};
use crate::partitions::{p_deprived_representative, p_equivalence_class_bounded, Partition, PartitionStats, DEFAULT_WEIGHT_BOUND};
use crate::poly::MonicPoly;
use crate::series::{artin_hasse, g_u_series, ArtinHasseMethod, GuMethod, TruncatedSeries};
use crate::symfunc::{g_lambda, Basis, SymFunc};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Seed used by randomized modes when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "deepcong", version, about = "Exact congruence checks for monic polynomials and operator modules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare elementary and deep power-sum congruences of two monic polynomials.
    CongruenceCheck(CongruenceArgs),
    /// Change the basis of a symmetric function.
    SymfuncConvert(ConvertArgs),
    /// The class sum g_λ for a partition λ.
    Glam(GlamArgs),
    /// The p-equivalence class of a partition.
    PartitionsClass(ClassArgs),
    /// Artin-Hasse exponential by the exponential and product constructions.
    ArtinHasse(ArtinHasseArgs),
    /// The generating series G_u(t) with symmetric-function coefficients.
    GuSeries(GuArgs),
    /// Semisimplification comparison of two integer matrices mod p.
    ModuleCompare(ModuleArgs),
    /// Four-matrix trace congruence for quotient modules.
    VirtualCompare(VirtualArgs),
    /// Eigenvalue multiplicities mod p^S from traces over a Galois ring.
    Recover(RecoverArgs),
    /// The worked example table for X²+X+3 and X⁴+3X³+5X²+2X+6 at p = 2.
    PaperTable(TableArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RamifiedExample {
    /// P = X^p - αX^{p-1}, Q = X^p: elementary holds, deep fails at n = p.
    ElementaryOnly,
    /// P = (X - (α+p-1))(X+1)^{p-1}, Q = X^p: deep holds, elementary fails.
    DeepOnly,
}

#[derive(Debug, Args)]
pub struct CongruenceArgs {
    #[arg(long)]
    pub p: u64,
    /// Ramification degree e of Z_(p)[α]/(α^e - p); omit for Z_(p).
    #[arg(long)]
    pub e: Option<u32>,
    /// First polynomial, integer coefficients leading first, e.g. 1,1,3.
    #[arg(long, allow_hyphen_values = true)]
    pub poly_p: Option<String>,
    /// Second polynomial, same layout.
    #[arg(long, allow_hyphen_values = true)]
    pub poly_q: Option<String>,
    /// JSON file (or "-") with `p_poly` and `q_poly` coefficient lists.
    #[arg(long = "in")]
    pub input: Option<String>,
    /// Built-in ramified example in Z_(p)[α]/(α^p - p).
    #[arg(long, value_enum)]
    pub example: Option<RamifiedExample>,
    /// Ideal valuation c as a rational; defaults to the maximal ideal.
    #[arg(long, allow_hyphen_values = true)]
    pub ideal_val: Option<String>,
    /// Report range; defaults to the maximal degree.
    #[arg(long)]
    pub range: Option<u64>,
    /// Also require the n = 0 congruence (equal degrees).
    #[arg(long)]
    pub include_n0: bool,
    /// Random search for separating pairs in the ramified ring (needs --e).
    #[arg(long)]
    pub search: bool,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// JSON file (or "-") holding a symmetric function.
    #[arg(long = "in")]
    pub input: Option<String>,
    /// Basis of the element given by --partition.
    #[arg(long)]
    pub basis: Option<Basis>,
    #[arg(long, allow_hyphen_values = true)]
    pub partition: Option<String>,
    /// Target basis, e or p.
    #[arg(long)]
    pub to: Basis,
}

#[derive(Debug, Args)]
pub struct GlamArgs {
    #[arg(long)]
    pub p: u64,
    /// Parts separated by commas; empty for the empty partition.
    #[arg(long, allow_hyphen_values = true)]
    pub partition: String,
    /// Output basis.
    #[arg(long, default_value = "p")]
    pub to: Basis,
}

#[derive(Debug, Args)]
pub struct ClassArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub partition: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AhMethod {
    Exponential,
    Product,
    Both,
}

#[derive(Debug, Args)]
pub struct ArtinHasseArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 20)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = AhMethod::Both)]
    pub method: AhMethod,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GuMethodArg {
    ClassSum,
    ArtinHasse,
    Both,
}

#[derive(Debug, Args)]
pub struct GuArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub u: u32,
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = GuMethodArg::Both)]
    pub method: GuMethodArg,
}

#[derive(Debug, Args)]
pub struct ModuleArgs {
    #[arg(long)]
    pub p: u64,
    /// JSON file (or "-") with matrices `m` and `n`.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct VirtualArgs {
    #[arg(long)]
    pub p: u64,
    /// JSON file (or "-") with matrices `m1`, `n1`, `m2`, `n2`.
    #[arg(long = "in")]
    pub input: String,
    /// Highest n checked; defaults to rank M1 + rank N2.
    #[arg(long)]
    pub range: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// JSON file (or "-") with the traces and optionally the ring header.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long)]
    pub p: Option<u64>,
    /// Precision S of the Galois ring (coefficients mod p^S).
    #[arg(long)]
    pub prec: Option<u32>,
    /// Degree k of the residue field extension.
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// A scalar in `Z_(p)`: a JSON integer or a rational string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarInput {
    Integer(i64),
    Rational(String),
}

impl ScalarInput {
    fn value(&self) -> Result<Rational, CliError> {
        match self {
            ScalarInput::Integer(n) => Ok(Rational::from_integer((*n).into())),
            ScalarInput::Rational(s) => parse_rational(s).map_err(usage),
        }
    }
}

/// A polynomial coefficient: a scalar, or for the ramified ring the list of
/// coefficients of `1, α, .., α^{e-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientInput {
    Scalar(ScalarInput),
    Ramified(Vec<ScalarInput>),
}

/// Input of `congruence-check --in`; coefficients leading first, leading 1 included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialPairInput {
    pub p_poly: Vec<CoefficientInput>,
    pub q_poly: Vec<CoefficientInput>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulePairInput {
    pub m: IntegerMatrix,
    pub n: IntegerMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualInput {
    pub m1: IntegerMatrix,
    pub n1: IntegerMatrix,
    pub m2: IntegerMatrix,
    pub n2: IntegerMatrix,
}

/// Traces `t_0, t_1, ..` as coefficient lists over `GR(p^S, k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoverInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    /// Monic modulus of the residue extension, low degree first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
    pub traces: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassReport {
    pub prime: u64,
    pub partition: Partition,
    pub representative: Partition,
    pub size: usize,
    pub class: Vec<Partition>,
    pub stats: PartitionStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArtinHasseReport {
    pub prime: u64,
    pub order: usize,
    pub methods: Vec<ArtinHasseMethod>,
    pub methods_agree: bool,
    pub p_integral: bool,
    pub series: TruncatedSeries<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuReport {
    pub u: u32,
    pub prime: u64,
    pub order: usize,
    pub methods: Vec<GuMethod>,
    pub methods_agree: bool,
    pub p_integral: bool,
    pub series: TruncatedSeries<SymFunc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VirtualReport {
    #[serde(flatten)]
    pub comparison: VirtualComparison,
    /// Necessary invariant-factor condition for `N̄_i ↪ M̄_i`, i = 1, 2.
    /// The embeddings themselves are the caller's responsibility.
    pub embedding_possible: [bool; 2],
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// Exit code plus the text destined for standard output and standard error.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn output(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn verdict(ok: bool, stdout: String) -> Self {
        Self::output(if ok { EXIT_OK } else { EXIT_FALSE }, stdout)
    }
}

/// Parses `argv` (program name first) and runs the subcommand, reading
/// `--in -` from `stdin`.
pub fn run_with_stdin<I, T>(argv: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                Outcome::output(EXIT_OK, text)
            };
        }
    };
    match dispatch(cli.command, stdin) {
        Ok(outcome) => outcome,
        Err(CliError::Usage(msg)) => Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {msg}\n") },
        Err(e @ CliError::Internal(_)) => Outcome { code: EXIT_INTERNAL, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

/// [`run_with_stdin`] on the process standard input.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with_stdin(argv, &mut std::io::stdin())
}

fn dispatch(command: Command, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    match command {
        Command::CongruenceCheck(a) => congruence_check(a, stdin),
        Command::SymfuncConvert(a) => symfunc_convert(a, stdin),
        Command::Glam(a) => glam(a),
        Command::PartitionsClass(a) => partitions_class(a),
        Command::ArtinHasse(a) => artin_hasse_cmd(a),
        Command::GuSeries(a) => gu_series(a),
        Command::ModuleCompare(a) => module_compare(a, stdin),
        Command::VirtualCompare(a) => virtual_compare_cmd(a, stdin),
        Command::Recover(a) => recover(a, stdin),
        Command::PaperTable(a) => paper_table(a),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn read_input(source: &str, stdin: &mut dyn Read) -> Result<String, CliError> {
    if source == "-" {
        let mut buf = String::new();
        stdin.read_to_string(&mut buf).map_err(|e| usage(format!("reading standard input: {e}")))?;
        Ok(buf)
    } else {
        fs::read_to_string(source).map_err(|e| usage(format!("reading {source}: {e}")))
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(source: &str, stdin: &mut dyn Read) -> Result<T, CliError> {
    let text = read_input(source, stdin)?;
    serde_json::from_str(&text).map_err(|e| usage(format!("malformed input: {e}")))
}

fn parse_int_list(s: &str) -> Result<Vec<i64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| usage(format!("not an integer list: {s:?}"))))
        .collect()
}

fn no_tsv(format: Option<Format>, what: &str) -> Result<(), CliError> {
    if format == Some(Format::Tsv) {
        return Err(usage(format!("{what} has no TSV output")));
    }
    Ok(())
}

fn rows_tsv(rows: &[TraceRow]) -> String {
    let mut out = String::from("n\tdifference\tachieved\trequired\tpass\n");
    for r in rows {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.n, r.difference.0, r.achieved, r.required, r.pass));
    }
    out
}

fn congruence_check(a: CongruenceArgs, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    if a.search {
        let e = a.e.ok_or_else(|| usage("--search needs --e"))?;
        no_tsv(a.format, "--search")?;
        let range = a.range.unwrap_or(2 * (a.p + 1));
        let summary =
            search_ramified(a.p, e, a.trials, a.seed.unwrap_or(DEFAULT_SEED), range).map_err(congruence_error)?;
        return Ok(Outcome::output(EXIT_OK, to_json(&summary)?));
    }
    if let Some(example) = a.example {
        if a.e.is_some_and(|e| e as u64 != a.p) {
            return Err(usage("the ramified examples live in ramification degree e = p"));
        }
        let (pp, qq) = match example {
            RamifiedExample::ElementaryOnly => ramified_elementary_only(a.p),
            RamifiedExample::DeepOnly => ramified_deep_only(a.p),
        }
        .map_err(congruence_error)?;
        let ideal = ideal_for(IdealRing::Eisenstein { p: a.p, e: a.p as u32 }, a.ideal_val.as_deref())?;
        return report(&pp, &qq, &ideal, &a);
    }
    let pair = match (&a.input, &a.poly_p, &a.poly_q) {
        (Some(src), None, None) => read_json::<PolynomialPairInput>(src, stdin)?,
        (None, Some(pp), Some(qq)) => PolynomialPairInput {
            p_poly: parse_int_list(pp)?.into_iter().map(|c| CoefficientInput::Scalar(ScalarInput::Integer(c))).collect(),
            q_poly: parse_int_list(qq)?.into_iter().map(|c| CoefficientInput::Scalar(ScalarInput::Integer(c))).collect(),
        },
        _ => return Err(usage("give either --in or both --poly-p and --poly-q")),
    };
    match a.e {
        None => {
            let ring = LocalizedRationals::new(a.p).map_err(usage)?;
            let pp = build_poly(ring, &pair.p_poly, scalar_only)?;
            let qq = build_poly(ring, &pair.q_poly, scalar_only)?;
            let ideal = ideal_for(IdealRing::LocalizedRationals { p: a.p }, a.ideal_val.as_deref())?;
            report(&pp, &qq, &ideal, &a)
        }
        Some(e) => {
            let ring = EisensteinRing::new(a.p, e).map_err(usage)?;
            let to_element = |c: &CoefficientInput| {
                let parts = match c {
                    CoefficientInput::Scalar(s) => vec![s.value()?],
                    CoefficientInput::Ramified(v) => v.iter().map(ScalarInput::value).collect::<Result<_, _>>()?,
                };
                ring.element(parts).map_err(usage)
            };
            let pp = build_poly(ring, &pair.p_poly, to_element)?;
            let qq = build_poly(ring, &pair.q_poly, to_element)?;
            let ideal = ideal_for(IdealRing::Eisenstein { p: a.p, e }, a.ideal_val.as_deref())?;
            report(&pp, &qq, &ideal, &a)
        }
    }
}

fn scalar_only(c: &CoefficientInput) -> Result<Rational, CliError> {
    match c {
        CoefficientInput::Scalar(s) => s.value(),
        CoefficientInput::Ramified(_) => Err(usage("coefficient lists need --e")),
    }
}

fn build_poly<R: CoefficientRing>(
    ring: R,
    coeffs: &[CoefficientInput],
    convert: impl Fn(&CoefficientInput) -> Result<R::Element, CliError>,
) -> Result<MonicPoly<R>, CliError> {
    let elements = coeffs.iter().map(convert).collect::<Result<Vec<_>, _>>()?;
    MonicPoly::from_full(ring, elements).map_err(usage)
}

fn ideal_for(ring: IdealRing, value: Option<&str>) -> Result<IdealSpec, CliError> {
    match value {
        None => IdealSpec::maximal(ring).map_err(usage),
        Some(s) => IdealSpec::new(ring, parse_rational(s).map_err(usage)?).map_err(usage),
    }
}

fn congruence_error(e: CongruenceError) -> CliError {
    match e {
        CongruenceError::TheoremViolation(_) => CliError::Internal(e.to_string()),
        other => usage(other),
    }
}

fn render_report(report: &CongruenceReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(report),
        Format::Tsv => Ok(report.to_tsv()),
    }
}

fn report<R: CoefficientRing>(
    pp: &MonicPoly<R>,
    qq: &MonicPoly<R>,
    ideal: &IdealSpec,
    a: &CongruenceArgs,
) -> Result<Outcome, CliError> {
    let format = a.format.unwrap_or(Format::Json);
    match theorem_verdict_with_range(pp, qq, ideal, a.range, a.include_n0) {
        Ok(r) => Ok(Outcome::verdict(r.verdict(), render_report(&r, format)?)),
        Err(CongruenceError::TheoremViolation(r)) => Ok(Outcome {
            code: EXIT_INTERNAL,
            stdout: render_report(&r, format)?,
            stderr: "error: elementary and deep verdicts disagree under a divided-power ideal\n".into(),
        }),
        Err(e) => Err(usage(e)),
    }
}

fn symfunc_convert(a: ConvertArgs, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    let f = match (&a.input, a.basis, &a.partition) {
        (Some(src), None, None) => read_json::<SymFunc>(src, stdin)?,
        (None, Some(basis), Some(lambda)) => {
            SymFunc::basis_element(basis, lambda.parse::<Partition>().map_err(usage)?)
        }
        _ => return Err(usage("give either --in or both --basis and --partition")),
    };
    let converted = f.convert(a.to).map_err(usage)?;
    Ok(Outcome::output(EXIT_OK, to_json(&converted)?))
}

fn glam(a: GlamArgs) -> Result<Outcome, CliError> {
    let lambda: Partition = a.partition.parse().map_err(usage)?;
    let g = g_lambda(&lambda, a.p).map_err(usage)?;
    let g = g.convert(a.to).map_err(usage)?;
    Ok(Outcome::output(EXIT_OK, to_json(&g)?))
}

fn partitions_class(a: ClassArgs) -> Result<Outcome, CliError> {
    crate::exact_arith::ensure_prime(a.p).map_err(usage)?;
    let lambda: Partition = a.partition.parse().map_err(usage)?;
    let class = p_equivalence_class_bounded(&lambda, a.p, DEFAULT_WEIGHT_BOUND).map_err(usage)?;
    let out = ClassReport {
        prime: a.p,
        representative: p_deprived_representative(&lambda, a.p),
        size: class.len(),
        stats: lambda.stats(a.p),
        partition: lambda,
        class,
    };
    Ok(Outcome::output(EXIT_OK, to_json(&out)?))
}

fn denominators_prime_to(coeffs: &[Rational], p: u64) -> bool {
    let p = num_bigint::BigInt::from(p);
    coeffs.iter().all(|c| (c.denom() % &p) != num_bigint::BigInt::from(0))
}

fn artin_hasse_cmd(a: ArtinHasseArgs) -> Result<Outcome, CliError> {
    let methods = match a.method {
        AhMethod::Exponential => vec![ArtinHasseMethod::Exponential],
        AhMethod::Product => vec![ArtinHasseMethod::Product],
        AhMethod::Both => vec![ArtinHasseMethod::Exponential, ArtinHasseMethod::Product],
    };
    let all: Vec<_> = methods
        .iter()
        .map(|&m| artin_hasse(a.p, a.order, m))
        .collect::<Result<_, _>>()
        .map_err(usage)?;
    let series = all[0].clone();
    let out = ArtinHasseReport {
        prime: a.p,
        order: a.order,
        methods,
        methods_agree: all.iter().all(|s| *s == series),
        p_integral: denominators_prime_to(series.coeffs(), a.p),
        series,
    };
    if !out.methods_agree || !out.p_integral {
        return Err(CliError::Internal("Artin-Hasse constructions disagree or lose p-integrality".into()));
    }
    let text = match a.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out)?,
        Format::Tsv => {
            let mut s = String::from("k\tcoefficient\n");
            for (k, c) in out.series.coeffs().iter().enumerate() {
                s.push_str(&format!("{k}\t{}\n", format_rational(c)));
            }
            s
        }
    };
    Ok(Outcome::output(EXIT_OK, text))
}

fn gu_series(a: GuArgs) -> Result<Outcome, CliError> {
    let methods = match a.method {
        GuMethodArg::ClassSum => vec![GuMethod::ClassSum],
        GuMethodArg::ArtinHasse => vec![GuMethod::ArtinHasse],
        GuMethodArg::Both => vec![GuMethod::ClassSum, GuMethod::ArtinHasse],
    };
    let all: Vec<_> = methods
        .iter()
        .map(|&m| g_u_series(a.u, a.p, a.order, m))
        .collect::<Result<_, _>>()
        .map_err(usage)?;
    let series = all[0].clone();
    let mut p_integral = true;
    for c in series.coeffs() {
        p_integral &= c.is_p_integral(a.p).map_err(usage)?;
    }
    let out = GuReport {
        u: a.u,
        prime: a.p,
        order: a.order,
        methods,
        methods_agree: all.iter().all(|s| *s == series),
        p_integral,
        series,
    };
    if !out.methods_agree || !out.p_integral {
        return Err(CliError::Internal("G_u constructions disagree or lose p-integrality".into()));
    }
    Ok(Outcome::output(EXIT_OK, to_json(&out)?))
}

fn module_error(e: ModuleError) -> CliError {
    match e {
        ModuleError::OracleDisagreement { .. } => CliError::Internal(e.to_string()),
        other => usage(other),
    }
}

fn module_compare(a: ModuleArgs, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    let input: ModulePairInput = read_json(&a.input, stdin)?;
    let cmp: SsComparison = ss_isomorphic(&input.m, &input.n, a.p).map_err(module_error)?;
    let text = match a.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&cmp)?,
        Format::Tsv => rows_tsv(&cmp.rows),
    };
    Ok(Outcome::verdict(cmp.verdict, text))
}

fn virtual_compare_cmd(a: VirtualArgs, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    let v: VirtualInput = read_json(&a.input, stdin)?;
    let range = a.range.unwrap_or((v.m1.dim() + v.n2.dim()) as u64);
    let comparison = virtual_compare(&v.m1, &v.n1, &v.m2, &v.n2, a.p, range).map_err(module_error)?;
    let out = VirtualReport {
        embedding_possible: [embedding_possible(&v.n1, &v.m1, a.p), embedding_possible(&v.n2, &v.m2, a.p)],
        comparison,
    };
    let text = match a.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out)?,
        Format::Tsv => rows_tsv(&out.comparison.rows),
    };
    Ok(Outcome::verdict(out.comparison.verdict, text))
}

fn merge_header<T: PartialEq + std::fmt::Display + Copy>(name: &str, flag: Option<T>, file: Option<T>) -> Result<T, CliError> {
    match (flag, file) {
        (Some(a), Some(b)) if a != b => Err(usage(format!("{name} is {a} on the command line but {b} in the input"))),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(usage(format!("{name} missing"))),
    }
}

fn recover(a: RecoverArgs, stdin: &mut dyn Read) -> Result<Outcome, CliError> {
    let input: RecoverInput = read_json(&a.input, stdin)?;
    let p = merge_header("p", a.p, input.p)?;
    let precision = merge_header("precision", a.prec, input.precision)?;
    let degree = merge_header("degree", a.degree, input.degree)?;
    let ring = GaloisRing::new(p, precision, degree, input.modulus.clone()).map_err(usage)?;
    if let Some(n) = input.traces.iter().position(|t| t.len() > degree as usize) {
        return Err(usage(format!("trace {n} has more than {degree} coefficients")));
    }
    let needed = trace_range(p, precision, degree);
    let traces: Vec<_> = input.traces.iter().map(|t| ring.element(t)).collect();
    let m: MultiplicityVector = recover_multiplicities(&ring, &traces)
        .map_err(|e| usage(format!("{e} (traces for n = 0..={needed} of the form Σ m(x) t(x)^n expected)")))?;
    let text = match a.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&m)?,
        Format::Tsv => {
            let mut s = String::from("residue\tmultiplicity\n");
            for (r, k) in &m.multiplicities {
                let digits: Vec<String> = r.iter().map(u64::to_string).collect();
                s.push_str(&format!("{}\t{k}\n", digits.join(",")));
            }
            s
        }
    };
    Ok(Outcome::output(EXIT_OK, text))
}

fn paper_table(a: TableArgs) -> Result<Outcome, CliError> {
    let report = worked_example_report().map_err(congruence_error)?;
    let text = render_report(&report, a.format.unwrap_or(Format::Tsv))?;
    Ok(Outcome::verdict(report.verdict(), text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        let mut argv = vec!["deepcong"];
        argv.extend_from_slice(args);
        run_with_stdin(argv, &mut std::io::empty())
    }

    fn run_stdin(args: &[&str], input: &str) -> Outcome {
        let mut argv = vec!["deepcong"];
        argv.extend_from_slice(args);
        run_with_stdin(argv, &mut input.as_bytes())
    }

    #[test]
    fn paper_table_has_seventeen_rows() {
        let out = run_args(&["paper-table"]);
        assert_eq!(out.code, EXIT_OK);
        let lines: Vec<&str> = out.stdout.lines().collect();
        assert_eq!(lines.len(), 18);
        assert_eq!(lines[0], "n\t1+v_2(n)\te_n(P)\te_n(Q)\tp_n(P)\tp_n(Q)\tv_2(diff)");
        assert_eq!(lines[17], "16\t5\t0\t0\t-353\t563871\t10");
    }

    #[test]
    fn glam_example() {
        let out = run_args(&["glam", "--p", "2", "--partition", "1,1"]);
        assert_eq!(out.code, EXIT_OK);
        let g: SymFunc = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(g.to_string(), "-1/2*p(2) + 1/2*p(1,1)");
    }

    #[test]
    fn congruence_check_exit_codes() {
        let same = run_args(&["congruence-check", "--p", "3", "--poly-p", "1,-2,7", "--poly-q", "1,-2,7"]);
        assert_eq!(same.code, EXIT_OK, "{}", same.stderr);
        let differ = run_args(&["congruence-check", "--p", "2", "--poly-p", "1,-1", "--poly-q", "1,-2"]);
        assert_eq!(differ.code, EXIT_FALSE);
        let bad = run_args(&["congruence-check", "--p", "2", "--poly-p", "2,1", "--poly-q", "1,1"]);
        assert_eq!(bad.code, EXIT_USAGE);
        assert_eq!(run_args(&["no-such-command"]).code, EXIT_USAGE);
        assert_eq!(run_args(&["congruence-check", "--p", "4", "--poly-p", "1", "--poly-q", "1"]).code, EXIT_USAGE);
    }

    #[test]
    fn ramified_examples_from_cli() {
        let elem = run_args(&["congruence-check", "--p", "2", "--example", "elementary-only"]);
        assert_eq!(elem.code, EXIT_FALSE);
        let r: serde_json::Value = serde_json::from_str(&elem.stdout).unwrap();
        assert_eq!(r["conditions"]["condition_2"], true);
        assert_eq!(r["conditions"]["condition_4"], false);
    }

    #[test]
    fn eisenstein_input_from_stdin() {
        // X^2 - αX over Z_(2)[α]/(α^2 - 2) against X^2
        let input = r#"{"p_poly": [1, ["0", "-1"], 0], "q_poly": [1, 0, 0]}"#;
        let out = run_stdin(&["congruence-check", "--p", "2", "--e", "2", "--in", "-"], input);
        assert_eq!(out.code, EXIT_FALSE, "{}", out.stderr);
    }

    #[test]
    fn module_and_virtual_commands() {
        let input = r#"{"m": [[4,0],[0,4]], "n": [[6,0],[0,6]]}"#;
        assert_eq!(run_stdin(&["module-compare", "--p", "2", "--in", "-"], input).code, EXIT_OK);
        let input = r#"{"m": [[1,0],[0,1]], "n": [[1,0],[0,2]]}"#;
        assert_eq!(run_stdin(&["module-compare", "--p", "2", "--in", "-"], input).code, EXIT_FALSE);
        let input = r#"{"m1": [[1,0],[0,3]], "n1": [[1]], "m2": [[1]], "n2": []}"#;
        let out = run_stdin(&["virtual-compare", "--p", "2", "--range", "10", "--in", "-"], input);
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    }

    #[test]
    fn recover_command() {
        let input = r#"{"p": 3, "precision": 1, "degree": 1, "traces": [[0], [1], [0]]}"#;
        let out = run_stdin(&["recover", "--in", "-"], input);
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
        let m: MultiplicityVector = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(m.get(&[1]), 2);
        assert_eq!(m.get(&[2]), 1);
        let conflicting = run_stdin(&["recover", "--p", "2", "--in", "-"], input);
        assert_eq!(conflicting.code, EXIT_USAGE);
    }

    #[test]
    fn input_formats_round_trip() {
        let pair = PolynomialPairInput {
            p_poly: vec![
                CoefficientInput::Scalar(ScalarInput::Integer(1)),
                CoefficientInput::Scalar(ScalarInput::Rational("1/3".into())),
                CoefficientInput::Ramified(vec![ScalarInput::Integer(0), ScalarInput::Rational("-2".into())]),
            ],
            q_poly: vec![CoefficientInput::Scalar(ScalarInput::Integer(1))],
        };
        let back: PolynomialPairInput = serde_json::from_str(&serde_json::to_string(&pair).unwrap()).unwrap();
        assert_eq!(back, pair);
        let rec = RecoverInput { p: Some(2), precision: None, degree: Some(2), modulus: Some(vec![1, 1, 1]), traces: vec![vec![1, 0]] };
        let back: RecoverInput = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn output_is_deterministic() {
        for args in [
            vec!["paper-table", "--format", "json"],
            vec!["gu-series", "--p", "2", "--order", "6"],
            vec!["congruence-check", "--p", "2", "--e", "2", "--search", "--trials", "20"],
        ] {
            assert_eq!(run_args(&args), run_args(&args));
        }
    }
}
