//! `khintchine`: exact MD-system workflows from the command line.
//!
//! Exit codes: 0 success, 1 domain or verification failure, 2 I/O or parse
//! failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use khintchine::lemmas::{lemma_sweep, LemmaId};
use khintchine::norms::{
    khintchine_constant, luxemburg_norm, rademacher_pnorm, u_ratio, verify_khintchine, DEFAULT_TOLERANCE,
};
use khintchine::search::{estimate_a, pscan, Method};
use khintchine::square::{homogeneity, square_classical, square_cww};
use khintchine::suites::{run_suite, Suite};
use khintchine::transforms::{
    dyadize, procedure1, procedure2, r1_transform, r2_transform, rademacherize, SystemSummary, TransformReport,
};
use khintchine::{Error, MdSystem};

#[derive(Parser, Debug)]
#[command(name = "khintchine", version, about = "Sharp Khintchine-type constants for martingale-difference systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Exponent p.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Number of levels (n_max for `constants`).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Level k for r1 and r2.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Level m for proc1 and proc2.
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    trials: usize,
    /// Objective evaluations for `search`.
    #[arg(long, global = true, default_value_t = 100_000)]
    budget: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; for `transform` this receives the output system.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    /// Directory for violation artifacts.
    #[arg(long, global = true, default_value = "khintchine-violations")]
    artifacts: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    R1,
    R2,
    Proc1,
    Proc2,
    Dyadize,
    Rademacherize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the martingale-difference invariants of a system file.
    Validate { file: PathBuf },
    /// Norms, square functions and the ratio U of a system file.
    Norms { file: PathBuf },
    /// Apply a transform and certify it.
    Transform {
        #[arg(value_enum)]
        kind: Kind,
        file: PathBuf,
    },
    /// Table of rademacher_pnorm(n, p) for n = 1..=n_max.
    Constants,
    /// Run random systems through one of the bounds c1, c3, c4, cww, ot2.
    Verify { suite: String },
    /// Parameter sweeps of the lemma oracles (l3, l4, l6, l8 or all).
    Lemmas {
        #[arg(default_value = "all")]
        lemma: String,
    },
    /// Search Haar systems for large U.
    Search {
        #[arg(long, default_value = "nelder-mead")]
        method: String,
    },
    /// Scan p for values of rademacher_pnorm that decrease in n.
    Scan {
        #[arg(long, default_value_t = 2.0)]
        p_min: f64,
        #[arg(long, default_value_t = 3.0)]
        p_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Self::io(e.to_string()),
            _ => Self::domain(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Validated flags.
struct RunConfig {
    p: Option<f64>,
    n: Option<usize>,
    k: Option<usize>,
    m: Option<usize>,
    seed: u64,
    trials: usize,
    budget: usize,
    tolerance: f64,
    format: Format,
    output: Option<PathBuf>,
    artifacts: PathBuf,
}

impl RunConfig {
    fn from_common(c: Common) -> Result<Self, Failure> {
        if let Some(p) = c.p {
            if !(p.is_finite() && p > 0.0) {
                return Err(Failure::domain(format!("--p must be positive and finite, got {p}")));
            }
        }
        if !(c.tolerance.is_finite() && c.tolerance >= 0.0) {
            return Err(Failure::domain(format!("--tolerance must be nonnegative, got {}", c.tolerance)));
        }
        if c.trials == 0 {
            return Err(Failure::domain("--trials must be positive"));
        }
        Ok(Self {
            p: c.p,
            n: c.n,
            k: c.k,
            m: c.m,
            seed: c.seed,
            trials: c.trials,
            budget: c.budget,
            tolerance: c.tolerance,
            format: c.format,
            output: c.output,
            artifacts: c.artifacts,
        })
    }

    fn p_or(&self, default: f64) -> f64 {
        self.p.unwrap_or(default)
    }

    fn require_p(&self) -> Result<f64, Failure> {
        self.p.ok_or_else(|| Failure::domain("--p is required"))
    }

    /// Writes `text` to `-o` or standard output.
    fn emit(&self, text: &str) -> CmdResult {
        match &self.output {
            Some(path) => write_file(path, text),
            None => print_stdout(text),
        }
    }
}

/// Prints `text` with a trailing newline; a closed pipe ends output quietly.
fn print_stdout(text: &str) -> CmdResult {
    let mut out = std::io::stdout().lock();
    let newline = if text.ends_with('\n') { "" } else { "\n" };
    match out.write_all(text.as_bytes()).and_then(|()| out.write_all(newline.as_bytes())) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<MdSystem, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
    // any error while reading a file is a parse failure
    MdSystem::from_json(&text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

/// Writes a replayable system before a nonzero exit; returns its path.
fn write_artifact(cfg: &RunConfig, name: &str, d: &MdSystem) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&cfg.artifacts)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", cfg.artifacts.display())))?;
    let path = cfg.artifacts.join(format!("{name}.json"));
    write_file(&path, &d.to_json_pretty())?;
    eprintln!("violation witness written to {}", path.display());
    Ok(path)
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_validate(cfg: &RunConfig, file: &Path) -> CmdResult {
    let d = load(file)?;
    let report = d.validate();
    match cfg.format {
        Format::Json => cfg.emit(&pretty(&report))?,
        Format::Csv => cfg.emit(&csv_table(
            "kind,level,cell,detail",
            report.violations.iter().map(|v| {
                format!("{},{},{},\"{}\"", pretty(&v.kind).trim_matches('"'), v.level, v.cell, v.detail)
            }),
        ))?,
    }
    if report.valid {
        Ok(())
    } else {
        let first = &report.violations[0];
        Err(Failure::domain(format!(
            "invalid system: {} violation(s), first at level {} cell {}: {}",
            report.violations.len(),
            first.level,
            first.cell,
            first.detail
        )))
    }
}

fn cmd_norms(cfg: &RunConfig, file: &Path) -> CmdResult {
    let d = load(file)?;
    let report = d.validate();
    if !report.valid {
        return Err(Failure::domain("input failed validation; run `validate` for details"));
    }
    let p = cfg.p_or(4.0);
    let summary = SystemSummary::of(&d, p);
    let classical = square_classical(&d);
    let ratio = u_ratio(&d, p).ok();
    let ceiling = (p >= 3.0).then(|| rademacher_pnorm(d.n(), p));
    let sharp = (p >= 3.0 && ratio.is_some()).then(|| verify_khintchine(&d, p)).transpose()?;
    let luxemburg = luxemburg_norm(&d).ok();
    let doc = json!({
        "p": p,
        "summary": summary,
        "sup_cww": square_cww(&d).sup(),
        "sup_classical": classical.sup(),
        "homogeneity": khintchine::rational::format_rational(&homogeneity(&d)),
        "u_ratio": ratio.as_ref().map(|r| r.ratio),
        "rademacher_pnorm": ceiling,
        "khintchine_bound": sharp,
        "luxemburg": luxemburg,
    });
    match cfg.format {
        Format::Json => cfg.emit(&pretty(&doc)),
        Format::Csv => cfg.emit(&csv_table(
            "p,n,atoms,pnorm,sup_cww,sup_classical,u_ratio,rademacher_pnorm",
            [format!(
                "{p},{},{},{},{},{},{},{}",
                d.n(),
                d.atom_count(),
                summary.pnorm,
                summary.sup_cww,
                classical.sup(),
                opt(ratio.map(|r| r.ratio)),
                opt(ceiling)
            )],
        )),
    }
}

fn cmd_transform(cfg: &RunConfig, kind: Kind, file: &Path) -> CmdResult {
    let d = load(file)?;
    let p = cfg.p_or(4.0);
    let level = |flag: Option<usize>, name: &str| flag.ok_or_else(|| Failure::domain(format!("--{name} is required")));
    let (out, report): (MdSystem, TransformReport) = match kind {
        Kind::R1 => r1_transform(&d, level(cfg.k, "k")?, p)?,
        Kind::R2 => r2_transform(&d, level(cfg.k, "k")?, p)?,
        Kind::Proc1 => procedure1(&d, level(cfg.m, "m")?, p)?,
        Kind::Proc2 => procedure2(&d, level(cfg.m, "m")?, p)?,
        Kind::Dyadize => dyadize(&d, p)?,
        Kind::Rademacherize => rademacherize(&d, p)?,
    };
    match &cfg.output {
        Some(path) => {
            write_file(path, &out.to_json_pretty())?;
            print_stdout(&pretty(&report))?;
        }
        None => print_stdout(&pretty(&json!({ "report": report, "system": out })))?,
    }
    if report.passed() {
        Ok(())
    } else {
        write_artifact(cfg, &format!("transform-{kind:?}-input").to_lowercase(), &d)?;
        Err(Failure::domain(format!("certificates failed: {}", report.failures().join(", "))))
    }
}

fn cmd_constants(cfg: &RunConfig) -> CmdResult {
    let p = cfg.require_p()?;
    let n_max = cfg.n.unwrap_or(10);
    if n_max == 0 {
        return Err(Failure::domain("--n must be positive"));
    }
    let limit = khintchine_constant(p).ok();
    let rows: Vec<_> = (1..=n_max).map(|n| (n, rademacher_pnorm(n, p))).collect();
    match cfg.format {
        Format::Json => cfg.emit(&pretty(&json!({
            "p": p,
            "khintchine_constant": limit,
            "rows": rows.iter().map(|(n, v)| json!({"n": n, "rademacher_pnorm": v})).collect::<Vec<_>>(),
        }))),
        Format::Csv => cfg.emit(&csv_table(
            "p,n,rademacher_pnorm,khintchine_constant",
            rows.iter().map(|(n, v)| format!("{p},{n},{v},{}", opt(limit))),
        )),
    }
}

fn cmd_verify(cfg: &RunConfig, suite: &str) -> CmdResult {
    let suite: Suite = suite.parse()?;
    let p = cfg.p_or(4.0);
    let report = run_suite(suite, p, cfg.trials, cfg.seed, cfg.tolerance)?;
    let text = match cfg.format {
        Format::Json => report.lines.iter().fold(String::new(), |mut s, l| {
            let _ = writeln!(s, "{}", serde_json::to_string(l).expect("serializable"));
            s
        }),
        Format::Csv => csv_table(
            "suite,p,n,seed,trial,lambda,lhs,rhs,slack,holds",
            report.lines.iter().map(|l| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    l.suite,
                    l.p,
                    l.n,
                    l.seed,
                    l.trial,
                    opt(l.lambda),
                    l.lhs,
                    l.rhs,
                    l.slack,
                    l.holds
                )
            }),
        ),
    };
    cfg.emit(&text)?;
    for (trial, d) in &report.failures {
        write_artifact(cfg, &format!("{}-seed{}-trial{trial}", suite.name(), cfg.seed), d)?;
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::domain(format!("{} of {} trials violate {}", report.failures.len(), cfg.trials, suite.name())))
    }
}

fn cmd_lemmas(cfg: &RunConfig, which: &str) -> CmdResult {
    let lemmas = match which {
        "all" => vec![LemmaId::L3, LemmaId::L4, LemmaId::L6, LemmaId::L8],
        other => vec![other.parse()?],
    };
    let mut rows = Vec::new();
    for lemma in lemmas {
        rows.extend(lemma_sweep(lemma, cfg.trials, cfg.seed)?);
    }
    match cfg.format {
        Format::Json => cfg.emit(&pretty(&rows))?,
        Format::Csv => cfg.emit(&csv_table(
            "lemma,xi,p,r,n,g,holds,worst",
            rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    pretty(&r.lemma).trim_matches('"'),
                    r.xi,
                    r.p,
                    opt(r.r),
                    opt(r.n),
                    opt(r.g),
                    r.holds,
                    r.worst
                )
            }),
        ))?,
    }
    let failed = rows.iter().filter(|r| !r.holds).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::domain(format!("{failed} lemma sweep row(s) failed")))
    }
}

fn cmd_search(cfg: &RunConfig, method: &str) -> CmdResult {
    let method: Method = method.parse()?;
    let p = cfg.p_or(4.0);
    let n = cfg.n.unwrap_or(2);
    let r = estimate_a(p, n, cfg.budget, cfg.seed, method)?;
    match cfg.format {
        Format::Json => cfg.emit(&pretty(&r))?,
        Format::Csv => cfg.emit(&csv_table(
            "p,n,method,seed,budget,evaluations,best_value,ceiling,within_ceiling",
            [format!(
                "{p},{n},{},{},{},{},{},{},{}",
                method.name(),
                cfg.seed,
                cfg.budget,
                r.evaluations,
                r.best_value,
                opt(r.ceiling),
                r.within_ceiling
            )],
        ))?,
    }
    if r.within_ceiling {
        Ok(())
    } else {
        write_artifact(cfg, &format!("search-p{p}-n{n}-seed{}", cfg.seed), &r.witness)?;
        Err(Failure::domain("search result exceeds the ceiling"))
    }
}

fn cmd_scan(cfg: &RunConfig, p_min: f64, p_max: f64, step: f64, n_max: usize) -> CmdResult {
    let table = pscan(p_min, p_max, step, n_max)?;
    match cfg.format {
        Format::Json => cfg.emit(&pretty(&json!({ "rows": table.rows, "flags": table.flags() }))),
        Format::Csv => cfg.emit(&table.to_csv()),
    }
}

fn run(cli: Cli) -> CmdResult {
    let cfg = RunConfig::from_common(cli.common)?;
    match cli.command {
        Command::Validate { file } => cmd_validate(&cfg, &file),
        Command::Norms { file } => cmd_norms(&cfg, &file),
        Command::Transform { kind, file } => cmd_transform(&cfg, kind, &file),
        Command::Constants => cmd_constants(&cfg),
        Command::Verify { suite } => cmd_verify(&cfg, &suite),
        Command::Lemmas { lemma } => cmd_lemmas(&cfg, &lemma),
        Command::Search { method } => cmd_search(&cfg, &method),
        Command::Scan { p_min, p_max, step, n_max } => cmd_scan(&cfg, p_min, p_max, step, n_max),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
