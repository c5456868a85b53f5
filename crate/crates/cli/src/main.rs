use std::ops::RangeInclusive;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpir::bounds::{bounds_report, gap_csv, gap_surface};
use mpir::harness::{cmd_run, plan_sweep_csv, plan_text, RunConfig};
use mpir::plan::stage_counts;
use mpir::query::{format_csv, format_text, parse_text, SchemeKind};
use mpir::scalar::fmt_rational;
use mpir::scheme::SchemeSetup;
use mpir::store::RetrievalRequest;
use mpir::suite::{run_suite, suite_text, SuiteOptions};
use mpir::verify::{all_subsets, statistical_privacy_check, structural_privacy_check};
use mpir::Error;

#[derive(Parser)]
#[command(name = "mpir", version, about = "Multi-message private information retrieval toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stage counts, download totals and rate of the multi-round scheme.
    Plan(PlanArgs),
    /// Build, answer and decode one retrieval, then check the rate.
    Run(RunArgs),
    /// Capacity, upper and lower bounds for one point or a sweep.
    Bounds(BoundsArgs),
    /// Privacy audit across desired sets.
    Audit(AuditArgs),
    /// Print a query table, or re-emit one read from a file.
    Table(TableArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct Point {
    #[arg(short = 'M', long = "messages")]
    m: usize,
    #[arg(short = 'P', long = "desired")]
    p: usize,
    #[arg(short = 'N', long = "databases")]
    n: usize,
}

#[derive(Args)]
struct OptPoint {
    #[arg(short = 'M', long = "messages")]
    m: Option<usize>,
    #[arg(short = 'P', long = "desired")]
    p: Option<usize>,
    #[arg(short = 'N', long = "databases")]
    n: Option<usize>,
}

impl OptPoint {
    fn get(&self) -> Result<(usize, usize, usize), Failure> {
        match (self.m, self.p, self.n) {
            (Some(m), Some(p), Some(n)) => Ok((m, p, n)),
            _ => Err(Failure::Usage("-M, -P and -N are required without --sweep".into())),
        }
    }
}

#[derive(Args)]
struct Grid {
    /// Message counts, e.g. `2:10`.
    #[arg(long, value_parser = parse_range, default_value = "2:10")]
    m_range: RangeInclusive<usize>,
    #[arg(long, value_parser = parse_range, default_value = "1:5")]
    p_range: RangeInclusive<usize>,
    #[arg(long, value_parser = parse_range, default_value = "2:20")]
    n_range: RangeInclusive<usize>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    point: OptPoint,
    /// Emit CSV over the grid instead of a single plan.
    #[arg(long)]
    sweep: bool,
    #[command(flatten)]
    grid: Grid,
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeKind>,
    #[command(flatten)]
    point: Point,
    /// Field size override.
    #[arg(long)]
    q: Option<u64>,
    /// Desired messages, 1-based, comma separated.
    #[arg(long, value_delimiter = ',')]
    pset: Option<Vec<usize>>,
    #[arg(long, env = "MPIR_SEED", default_value_t = 0)]
    seed: u64,
}

impl SchemeArgs {
    fn config(&self) -> Result<RunConfig, Failure> {
        let Point { m, p, n } = self.point;
        let mut cfg = RunConfig::new(m, p, n).seed(self.seed);
        cfg.scheme = self.scheme;
        cfg.modulus = self.q;
        if let Some(set) = &self.pset {
            if set.contains(&0) {
                return Err(Failure::Usage("--pset is 1-based".into()));
            }
            cfg.desired_set = Some(set.iter().map(|m| m - 1).collect());
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Also print the query table.
    #[arg(long)]
    emit_table: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Skip the brute-force decode cross-check.
    #[arg(long)]
    no_oracle: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    point: OptPoint,
    #[arg(long)]
    sweep: bool,
    #[command(flatten)]
    grid: Grid,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeKind>,
    #[command(flatten)]
    point: Point,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, env = "MPIR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeKind>,
    #[command(flatten)]
    point: OptPoint,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pset: Option<Vec<usize>>,
    #[arg(long, env = "MPIR_SEED", default_value_t = 0)]
    seed: u64,
    /// Read a table in text form and print it back.
    #[arg(long, conflicts_with_all = ["scheme", "q", "pset"])]
    input: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Keep criteria whose id, name or tag contains this.
    #[arg(long)]
    filter: Option<String>,
    /// Corrupt the stage counts to check that the suite notices.
    #[arg(long)]
    inject_fault: bool,
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::FieldTooSmall { .. }
            | Error::NotPrime(_)
            | Error::DomainError(_)
            | Error::NonIntegerStageCount { .. }
            | Error::Parse { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Verification(format!("error: {e}")),
        }
    }
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once(':') {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            Ok(a..=b)
        }
        None => parse(s).map(|v| v..=v),
    }
}

fn parse_scheme(s: &str) -> Result<SchemeKind, String> {
    s.parse::<SchemeKind>().map_err(|e| e.to_string())
}

fn plan(args: PlanArgs) -> Result<String, Failure> {
    if args.sweep {
        let g = &args.grid;
        let ms: Vec<usize> = g.m_range.clone().collect();
        let ps: Vec<usize> = g.p_range.clone().collect();
        let ns: Vec<usize> = g.n_range.clone().collect();
        return Ok(plan_sweep_csv(&ms, &ps, &ns)?);
    }
    let (m, p, n) = args.point.get()?;
    Ok(plan_text(&stage_counts(m, p, n)?))
}

fn run(args: RunArgs) -> Result<String, Failure> {
    let mut cfg = args.scheme.config()?;
    cfg.oracle = !args.no_oracle;
    let report = cmd_run(&cfg)?;
    let mut out = report.to_text();
    if args.emit_table {
        out.push('\n');
        out.push_str(&match args.format {
            Format::Text => format_text(&report.table),
            Format::Csv => format_csv(&report.table),
        });
    }
    if report.passed() {
        Ok(out)
    } else {
        Err(Failure::Verification(out))
    }
}

fn bounds(args: BoundsArgs) -> Result<String, Failure> {
    if args.sweep {
        let g = args.grid;
        return Ok(gap_csv(&gap_surface(g.m_range, g.p_range, g.n_range)?));
    }
    let (m, p, n) = args.point.get()?;
    let r = bounds_report(m, p, n)?;
    let opt = |x: &Option<mpir::Rational>| x.as_ref().map_or("n/a".to_string(), fmt_rational);
    let mut s = format!("M={m} P={p} N={n}\n");
    s += &format!("capacity 2P>=M  {}\n", opt(&r.capacity_high));
    s += &format!("capacity M/P    {}\n", opt(&r.capacity_int));
    s += &format!("upper bound     {}\n", fmt_rational(&r.upper));
    s += &format!("lower bound     {} [{:.12}]\n", fmt_rational(&r.lower_exact), r.lower);
    s += &format!("gap             {} [{:.12}]\n", fmt_rational(&r.gap_exact), r.gap);
    s += &format!("repetition      {}\n", fmt_rational(&r.repetition));
    s += &format!("delta           {}\n", fmt_rational(&r.delta));
    s += &format!("subsets         {}\n", r.beta);
    for pt in &r.corners.corners {
        let pt: Vec<String> = pt.iter().map(fmt_rational).collect();
        s += &format!("corner          {}\n", pt.join(", "));
    }
    Ok(s)
}

fn audit(args: AuditArgs) -> Result<String, Failure> {
    let Point { m, p, n } = args.point;
    let kind = args.scheme.unwrap_or_else(|| mpir::harness::default_scheme(m, p));
    let setup = SchemeSetup::new(kind, m, p, n, None)?;
    let structural = structural_privacy_check(&setup, args.seed)?;
    let stat = statistical_privacy_check(&setup, &all_subsets(&setup), args.samples, args.seed)?;
    let passed = structural.passed() && stat.passed();
    let out = match args.format {
        Format::Csv => {
            let mut s = structural.to_csv();
            s.extend(stat.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
            s
        }
        Format::Text => {
            let sp = structural.structural_pass.iter().filter(|&&b| b).count();
            format!(
                "scheme      {kind}\nparams      M={m} P={p} N={n}\nsubsets     {}\nstructural  {sp}/{} databases match\ntv max      {:.4} over {} samples\nstatus      {}\n",
                stat.subsets,
                structural.structural_pass.len(),
                stat.max_tv(),
                args.samples,
                if passed { "PASS" } else { "FAIL" }
            )
        }
    };
    if passed {
        Ok(out)
    } else {
        Err(Failure::Verification(out))
    }
}

fn table(args: TableArgs) -> Result<String, Failure> {
    let t = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            parse_text(&text)?
        }
        None => {
            let (m, p, n) = args.point.get()?;
            let kind = args.scheme.unwrap_or_else(|| mpir::harness::default_scheme(m, p));
            let setup = SchemeSetup::new(kind, m, p, n, args.q)?;
            let request = match &args.pset {
                Some(set) if set.contains(&0) => return Err(Failure::Usage("--pset is 1-based".into())),
                Some(set) => RetrievalRequest::new(set.iter().map(|m| m - 1).collect(), args.seed, &setup.params)?,
                None => RetrievalRequest::leading(&setup.params, args.seed),
            };
            setup.build(&request)?
        }
    };
    Ok(match args.format {
        Format::Text => format_text(&t),
        Format::Csv => format_csv(&t),
    })
}

fn verify(args: VerifyArgs) -> Result<String, Failure> {
    let opts = SuiteOptions {
        filter: args.filter,
        inject_fault: args.inject_fault,
        seeds: args.seeds,
        samples: args.samples,
    };
    let results = run_suite(&opts);
    if results.is_empty() {
        return Err(Failure::Usage("no criterion matches the filter".into()));
    }
    let out = suite_text(&results);
    if results.iter().all(|r| r.passed) {
        Ok(out)
    } else {
        Err(Failure::Verification(out))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => plan(a),
        Command::Run(a) => run(a),
        Command::Bounds(a) => bounds(a),
        Command::Audit(a) => audit(a),
        Command::Table(a) => table(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(out)) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
