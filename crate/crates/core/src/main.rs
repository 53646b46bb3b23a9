use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use compose_patterns::classify::classify_service;
use compose_patterns::model::ServiceSpec;
use compose_patterns::patterns::{PatternId, StrictnessFilter};
use compose_patterns::report::{
    render_report, scan_path, ReportFormat, ScanError, ScanOptions,
};
use compose_patterns::stats::{
    cliffs_delta, mann_whitney_u, mann_whitney_u_with_method, summarize, Alternative, Method,
};

const EXIT_USAGE: u8 = 1;
const EXIT_MISSING_ROOT: u8 = 2;
const EXIT_PATTERN_HIT: u8 = 3;

/// Rule tables can also come from this variable, colon separated; they are
/// applied before any --rules arguments.
const RULES_ENV: &str = "COMPOSE_PATTERNS_RULES";

#[derive(Parser)]
#[command(
    name = "compose-patterns",
    version,
    about = "Analyze Docker Compose files: service types, orchestration graphs, recurring patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory tree and report on every compose file found
    Scan(ScanArgs),
    /// Print only the frequent service-type itemsets for a tree
    Mine(MineArgs),
    /// Classify a single image reference
    Classify(ClassifyArgs),
    /// Compare two numeric samples (Mann-Whitney U, Cliff's delta)
    Stats(StatsArgs),
    /// Describe a pattern id, or list all of them
    Explain(ExplainArgs),
}

#[derive(Args)]
struct ScanArgs {
    /// Directory to scan
    root: PathBuf,
    /// Output format: json | text
    #[arg(long, default_value = "json")]
    format: String,
    /// Extra classification rule table (TSV); repeatable, extends the built-in table
    #[arg(long = "rules")]
    rules: Vec<PathBuf>,
    /// Minimum itemset support in (0, 1]
    #[arg(long = "min-support", default_value_t = 0.05)]
    min_support: f64,
    /// Keep findings of this tier: co | structural | both
    #[arg(long, default_value = "both")]
    strictness: String,
    /// Also accept any .yml/.yaml with a top-level services mapping
    #[arg(long)]
    loose: bool,
    /// Merge chain as comma-separated paths, base first; repeatable
    #[arg(long = "merge")]
    merge: Vec<String>,
    /// Count unclassified services in itemset mining
    #[arg(long = "include-unclassified")]
    include_unclassified: bool,
    /// Exit with status 3 when this pattern id appears anywhere
    #[arg(long = "fail-on-pattern")]
    fail_on_pattern: Option<String>,
    /// Only report these pattern ids (comma separated)
    #[arg(long = "patterns")]
    patterns: Option<String>,
    /// KEY=VALUE for variable interpolation, on top of the root .env; repeatable
    #[arg(long = "env")]
    env: Vec<String>,
    /// Do not follow extends targets whose filename fails the corpus filter
    #[arg(long = "no-follow-extends")]
    no_follow_extends: bool,
}

#[derive(Args)]
struct MineArgs {
    root: PathBuf,
    #[arg(long = "min-support", default_value_t = 0.05)]
    min_support: f64,
    #[arg(long)]
    loose: bool,
    #[arg(long = "include-unclassified")]
    include_unclassified: bool,
    /// Output format: json | text
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Image reference, e.g. registry.example.com/library/postgres:13
    image: String,
    /// Service name used for application disambiguation
    #[arg(long, default_value = "service")]
    name: String,
    #[arg(long = "rules")]
    rules: Vec<PathBuf>,
    /// Output format: json | text
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct StatsArgs {
    /// File with one number per line
    sample_a: PathBuf,
    /// File with one number per line
    sample_b: PathBuf,
    /// two-sided | greater | less
    #[arg(long, default_value = "two-sided")]
    alternative: String,
    /// Force the p-value method: exact | normal
    #[arg(long)]
    method: Option<String>,
    /// Output format: json | text
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct ExplainArgs {
    /// Pattern id such as SERVICE_INHERITANCE; omit to list all
    pattern: Option<String>,
}

struct CliError {
    code: u8,
    message: String,
}

fn usage_err(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Die quietly when the reader goes away (`scan | head`), like any pipeline
/// tool. Rust ignores SIGPIPE by default, which turns EPIPE into a panic.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Scan(args) => run_scan(args),
        Command::Mine(args) => run_mine(args),
        Command::Classify(args) => run_classify(args),
        Command::Stats(args) => run_stats(args),
        Command::Explain(args) => run_explain(args),
    }
}

fn rules_paths(cli_rules: &[PathBuf]) -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = std::env::var(RULES_ENV)
        .map(|v| {
            v.split(':')
                .filter(|s| !s.is_empty())
                .map(PathBuf::from)
                .collect()
        })
        .unwrap_or_default();
    paths.extend(cli_rules.iter().cloned());
    paths
}

fn parse_format(s: &str) -> Result<ReportFormat, CliError> {
    ReportFormat::parse(s).ok_or_else(|| usage_err(format!("unknown format {s:?}; use json or text")))
}

fn parse_env_pair(s: &str) -> Result<(String, String), CliError> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(usage_err(format!("--env expects KEY=VALUE, got {s:?}"))),
    }
}

fn map_scan_error(e: ScanError) -> CliError {
    let code = match &e {
        ScanError::RootNotFound(_) => EXIT_MISSING_ROOT,
        _ => EXIT_USAGE,
    };
    CliError {
        code,
        message: e.to_string(),
    }
}

fn run_scan(args: ScanArgs) -> Result<u8, CliError> {
    let format = parse_format(&args.format)?;
    let strictness = StrictnessFilter::parse(&args.strictness)
        .ok_or_else(|| usage_err(format!("unknown strictness {:?}; use co, structural or both", args.strictness)))?;
    let fail_on = args
        .fail_on_pattern
        .as_deref()
        .map(|s| s.parse::<PatternId>().map_err(|e| usage_err(e.to_string())))
        .transpose()?;
    let patterns_filter = args
        .patterns
        .as_deref()
        .map(|s| {
            s.split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse::<PatternId>().map_err(|e| usage_err(e.to_string())))
                .collect::<Result<BTreeSet<_>, _>>()
        })
        .transpose()?;
    let mut env_overrides = BTreeMap::new();
    for pair in &args.env {
        let (k, v) = parse_env_pair(pair)?;
        env_overrides.insert(k, v);
    }

    let mut opts = ScanOptions::new(args.root);
    opts.follow_extends_outside_filter = !args.no_follow_extends;
    opts.rules_paths = rules_paths(&args.rules);
    opts.min_support = args.min_support;
    opts.strictness = strictness;
    opts.loose = args.loose;
    opts.merge_chains = args
        .merge
        .iter()
        .map(|chain| chain.split(',').map(PathBuf::from).collect())
        .collect();
    opts.include_unclassified = args.include_unclassified;
    opts.env_overrides = env_overrides;
    opts.patterns_filter = patterns_filter;

    let report = scan_path(&opts).map_err(map_scan_error)?;
    print!("{}", render_report(&report, format));
    if let Some(pattern) = fail_on {
        let hit = report
            .files
            .iter()
            .any(|f| f.findings.iter().any(|x| x.pattern == pattern));
        if hit {
            return Ok(EXIT_PATTERN_HIT);
        }
    }
    Ok(0)
}

fn run_mine(args: MineArgs) -> Result<u8, CliError> {
    let format = parse_format(&args.format)?;
    let mut opts = ScanOptions::new(args.root);
    opts.min_support = args.min_support;
    opts.loose = args.loose;
    opts.include_unclassified = args.include_unclassified;
    let report = scan_path(&opts).map_err(map_scan_error)?;
    match format {
        ReportFormat::Json => {
            let mut out =
                serde_json::to_string_pretty(&report.itemsets).expect("itemsets serialize");
            out.push('\n');
            print!("{out}");
        }
        ReportFormat::Text => {
            println!("{:<10} {:>5}/{:<5} itemset", "support", "count", "total");
            for set in &report.itemsets {
                println!(
                    "{:<10} {:>5}/{:<5} {}",
                    set.support,
                    set.count,
                    set.total,
                    set.items.join(", ")
                );
            }
        }
    }
    Ok(0)
}

fn run_classify(args: ClassifyArgs) -> Result<u8, CliError> {
    let format = parse_format(&args.format)?;
    let mut rules = compose_patterns::classify::default_rules().to_vec();
    for path in rules_paths(&args.rules) {
        let text = fs::read_to_string(&path)
            .map_err(|e| usage_err(format!("rule table {path:?}: {e}")))?;
        let parsed = compose_patterns::classify::parse_rules(&text)
            .map_err(|e| usage_err(format!("rule table {path:?}: {e}")))?;
        rules.extend(parsed);
    }
    let mut service = ServiceSpec::new(&args.name);
    service.image = Some(args.image.clone());
    let classified = classify_service(&service, &rules, None);
    match format {
        ReportFormat::Json => {
            let mut out =
                serde_json::to_string_pretty(&classified).expect("classification serializes");
            out.push('\n');
            print!("{out}");
        }
        ReportFormat::Text => {
            println!("image: {}", args.image);
            println!("type: {}", classified.service_type.display_name());
            println!(
                "category: {}",
                json_name(&classified.category)
            );
            println!("confidence: {}", json_name(&classified.confidence));
            println!(
                "rule: {}",
                classified.matched_rule.as_deref().unwrap_or("-")
            );
        }
    }
    Ok(0)
}

/// Canonical serialized name of a unit enum value.
fn json_name<T: serde::Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::from("?"),
    }
}

fn read_sample(path: &PathBuf) -> Result<Vec<f64>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| usage_err(format!("sample {path:?}: {e}")))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| {
            usage_err(format!(
                "sample {path:?} line {}: not a number: {trimmed:?}",
                idx + 1
            ))
        })?;
        values.push(v);
    }
    Ok(values)
}

fn run_stats(args: StatsArgs) -> Result<u8, CliError> {
    let format = parse_format(&args.format)?;
    let alternative = Alternative::parse(&args.alternative).ok_or_else(|| {
        usage_err(format!(
            "unknown alternative {:?}; use two-sided, greater or less",
            args.alternative
        ))
    })?;
    let method = args
        .method
        .as_deref()
        .map(|s| match s {
            "exact" => Ok(Method::Exact),
            "normal" | "normal-approximation" => Ok(Method::NormalApproximation),
            other => Err(usage_err(format!(
                "unknown method {other:?}; use exact or normal"
            ))),
        })
        .transpose()?;
    let a = read_sample(&args.sample_a)?;
    let b = read_sample(&args.sample_b)?;
    let result = match method {
        Some(m) => mann_whitney_u_with_method(&a, &b, alternative, m),
        None => mann_whitney_u(&a, &b, alternative),
    }
    .map_err(|e| usage_err(e.to_string()))?;
    let effect = cliffs_delta(&a, &b).map_err(|e| usage_err(e.to_string()))?;
    let summary_a = summarize(&a).map_err(|e| usage_err(e.to_string()))?;
    let summary_b = summarize(&b).map_err(|e| usage_err(e.to_string()))?;

    match format {
        ReportFormat::Json => {
            let value = serde_json::json!({
                "n": a.len(),
                "m": b.len(),
                "test": result,
                "effect_size": effect,
                "summary_a": summary_a,
                "summary_b": summary_b,
            });
            let mut out = serde_json::to_string_pretty(&value).expect("stats serialize");
            out.push('\n');
            print!("{out}");
        }
        ReportFormat::Text => {
            println!("n = {}, m = {}", a.len(), b.len());
            println!("U = {}", result.u);
            println!(
                "p-value = {:.6} ({}, {})",
                result.p_value,
                json_name(&result.method),
                json_name(&result.alternative)
            );
            println!(
                "Cliff's delta = {:.6} ({})",
                effect.delta,
                json_name(&effect.magnitude)
            );
            for (label, s) in [("a", &summary_a), ("b", &summary_b)] {
                println!(
                    "{label}: min {} q1 {} median {} q3 {} max {}",
                    s.min, s.q1, s.median, s.q3, s.max
                );
            }
        }
    }
    Ok(0)
}

fn run_explain(args: ExplainArgs) -> Result<u8, CliError> {
    match args.pattern {
        None => {
            for p in PatternId::ALL {
                println!("{:<34} {}", p.name(), p.title());
            }
            Ok(0)
        }
        Some(raw) => {
            let pattern: PatternId = raw.parse().map_err(|e: compose_patterns::patterns::UnknownPattern| usage_err(e.to_string()))?;
            println!("{} ({})", pattern.title(), pattern.name());
            println!();
            println!("{}", compose_patterns::patterns::explain(pattern));
            Ok(0)
        }
    }
}
