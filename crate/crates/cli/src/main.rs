use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dyncircuit::analytic::{
    cond_step_moments, cov_limit, eb2_asymptotic, mean_rate, mean_y, second_moments,
};
use dyncircuit::degree::{
    degree_asymptotics, degree_moment_report, degree_pmf, DEFAULT_LOG_GAMMA_THRESHOLD,
};
use dyncircuit::martingale::martingale_matrices;
use dyncircuit::mc::{write_rows_csv, DEFAULT_DRAW_BUDGET};
use dyncircuit::oracle::{dp_color_counts, enumerate_histories, DEFAULT_HISTORY_BUDGET};
use dyncircuit::verify::{run_suite, Suite};
use dyncircuit::{
    clt_check, run_sim, Error, Exact, PairTable, RegimeSpec, Scalar, SimConfig, SimReport,
};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Preferential dynamic attachment circuits: simulation, exact laws and
/// closed-form moments.
#[derive(Parser)]
#[command(name = "dyncircuit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Output format for the machine-readable artifact.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMode {
    Histories,
    Dp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Fixed,
    Linear,
}

#[derive(Subcommand)]
enum Command {
    /// Grow independent circuits and report (Y0, Y1) statistics.
    Simulate {
        /// Parents per inserted node.
        #[arg(long)]
        m: u32,
        /// Age: number of inserted nodes.
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1000)]
        replicates: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra statistics, comma separated: `deg:J` tracks the degree of node J.
        #[arg(long, value_delimiter = ',')]
        stats: Vec<String>,
        /// Worker threads [default: WORKERS env var, else all cores].
        #[arg(long)]
        workers: Option<usize>,
        /// Refuse runs needing more parent draws than this.
        #[arg(long, default_value_t = DEFAULT_DRAW_BUDGET)]
        draw_budget: u128,
        #[command(flatten)]
        output: Output,
    },
    /// Exact law of (W, B): white and blue external-node counts.
    Exact {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = ExactMode::Dp)]
        mode: ExactMode,
        /// Leaf budget for history enumeration.
        #[arg(long, default_value_t = DEFAULT_HISTORY_BUDGET)]
        budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form moments of (Y0, Y1), optionally conditional on a state.
    Analytic {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u64,
        /// Condition one sample step on the state `W,B` at age n-1.
        #[arg(long, value_delimiter = ',')]
        state: Option<Vec<u64>>,
        /// Include the martingale normalising matrices at age n.
        #[arg(long)]
        martingale: bool,
        /// Significant digits for high-precision values.
        #[arg(long, default_value_t = 50)]
        digits: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Degree of node j at age n: moments, law, asymptotics.
    Degree {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        j: Option<u64>,
        #[arg(long)]
        n: u64,
        /// Emit the full law (exact rationals).
        #[arg(long)]
        pmf: bool,
        /// Ages above this use the log-gamma float path.
        #[arg(long, default_value_t = DEFAULT_LOG_GAMMA_THRESHOLD)]
        threshold: u64,
        /// Compare with the asymptotic regime for this label.
        #[arg(long, value_enum)]
        regime: Option<Regime>,
        /// Label fraction for `--regime linear`.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Check a simulation report against the normal limit.
    Clt {
        /// JSON report written by `simulate`.
        #[arg(long)]
        report: PathBuf,
        /// Override m (defaults to the report's).
        #[arg(long)]
        m: Option<u32>,
        #[command(flatten)]
        output: Output,
    },
    /// Run the exact cross-check suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 3)]
        max_m: u32,
        #[arg(long, default_value_t = 6)]
        max_n: u64,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Usage(String),
    Budget(String),
    Verify,
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            Error::InvalidParameter(_)
            | Error::Unsupported(_)
            | Error::Singular { .. }
            | Error::InconsistentState(_)
            | Error::InsufficientReplicates { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Run = Result<(), Failure>;

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json(output: &Output, v: &Value) -> Run {
    let mut w = sink(output.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| Failure::Other(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Flat `key,value` CSV for reports that are not tables.
fn emit_flat_csv(output: &Output, v: &Value) -> Run {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        match v {
            Value::Object(o) => {
                for (k, x) in o {
                    let p = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&p, x, rows);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, rows);
                }
            }
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            Value::Null => rows.push((prefix.to_string(), String::new())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let csv_err = |e: csv::Error| Failure::Other(e.to_string());
    let mut w = csv::Writer::from_writer(sink(output.out.as_deref())?);
    w.write_record(["key", "value"]).map_err(csv_err)?;
    for (k, x) in rows {
        w.write_record([k, x]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn emit(output: &Output, v: &Value) -> Run {
    match output.format {
        Format::Json => emit_json(output, v),
        Format::Csv => emit_flat_csv(output, v),
    }
}

fn emit_table<K: dyncircuit::dist::OutcomeKey>(
    output: &Output,
    meta: Value,
    t: &dyncircuit::DistTable<K, Exact>,
) -> Run {
    match output.format {
        Format::Json => {
            let mut v = meta;
            v["table"] = t.to_json_rows();
            emit_json(output, &v)
        }
        Format::Csv => Ok(t.write_csv(sink(output.out.as_deref())?)?),
    }
}

fn parse_stats(stats: &[String]) -> Result<Vec<u64>, Failure> {
    let mut nodes = Vec::new();
    for s in stats.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match s.strip_prefix("deg:").map(str::parse::<u64>) {
            Some(Ok(j)) => nodes.push(j),
            _ if s == "colors" => {}
            _ => {
                return Err(Failure::Usage(format!(
                    "unknown statistic {s:?}; expected colors or deg:J"
                )))
            }
        }
    }
    Ok(nodes)
}

fn workers_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("WORKERS") {
        Ok(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("WORKERS={s:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    m: u32,
    n: u64,
    replicates: u64,
    seed: u64,
    stats: &[String],
    workers: Option<usize>,
    draw_budget: u128,
    output: &Output,
) -> Run {
    let mut cfg = SimConfig::new(m, n, replicates, seed);
    cfg.degree_nodes = parse_stats(stats)?;
    if let Some(w) = workers.or(workers_from_env()?) {
        cfg.workers = w;
    }
    cfg.draw_budget = draw_budget;
    cfg.keep_rows = matches!(output.format, Format::Csv);
    let out = run_sim(&cfg)?;
    let r = &out.report;
    eprintln!(
        "m={m} n={n} replicates={}: mean (Y0, Y1) = ({:.6}, {:.6}) +- ({:.6}, {:.6})",
        r.replicates, r.mean[0], r.mean[1], r.std_err[0], r.std_err[1]
    );
    match output.format {
        Format::Json => emit_json(output, &r.to_json()),
        Format::Csv => Ok(write_rows_csv(
            sink(output.out.as_deref())?,
            &out.rows,
            &cfg.degree_nodes,
        )?),
    }
}

fn cmd_exact(m: u32, n: u64, mode: ExactMode, budget: u64, output: &Output) -> Run {
    let (table, name): (PairTable<Exact>, &str) = match mode {
        ExactMode::Histories => (enumerate_histories(m, n, budget)?, "histories"),
        ExactMode::Dp => (dp_color_counts(m, n)?, "dp"),
    };
    eprintln!("m={m} n={n}: {} outcomes ({name})", table.len());
    emit_table(output, json!({ "m": m, "n": n, "mode": name }), &table)
}

fn render_pair<T: Scalar>(x: &T) -> Value {
    json!({ "exact": x.render(), "decimal": dyncircuit::scalar::decimal12(x.as_f64()) })
}

fn note_or<T>(r: dyncircuit::Result<T>, f: impl FnOnce(T) -> Value) -> Result<Value, Failure> {
    match r {
        Ok(v) => Ok(f(v)),
        Err(e @ (Error::Unsupported(_) | Error::Singular { .. })) => {
            Ok(json!({ "unavailable": e.to_string() }))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_analytic(
    m: u32,
    n: u64,
    state: Option<&[u64]>,
    martingale: bool,
    digits: usize,
    output: &Output,
) -> Run {
    let mean = mean_y::<Exact>(m, n)?;
    let (r0, r1) = mean_rate::<Exact>(m);
    let mut v = json!({
        "m": m,
        "n": n,
        "mean": {
            "y0": render_pair(&mean.ey0),
            "y1": render_pair(&mean.ey1),
            "boundary": mean.boundary,
        },
        "mean_rate": [render_pair(&r0), render_pair(&r1)],
    });
    v["second_moments"] = if n == 0 {
        json!({ "unavailable": "defined for n >= 1" })
    } else {
        note_or(
            second_moments::<Exact>(m, n),
            |s| json!({ "w2": render_pair(&s.ew2), "b2": render_pair(&s.eb2), "wb": render_pair(&s.ewb) }),
        )?
    };
    v["b2_asymptotic"] = note_or(
        if m >= 2 {
            Ok(eb2_asymptotic::<Exact>(m))
        } else {
            Err(Error::Unsupported(
                "asymptotic coefficients need m >= 2".into(),
            ))
        },
        |(c2, c1)| json!({ "n2": render_pair(&c2), "n1": render_pair(&c1) }),
    )?;
    v["cov_limit"] = if m >= 2 {
        cov_limit::<Exact>(m)?.render()
    } else {
        json!({ "unavailable": "the covariance limit needs m >= 2" })
    };
    if let Some(s) = state {
        if s.len() != 2 {
            return Err(Failure::Usage("--state takes two values: W,B".into()));
        }
        v["step"] = note_or(cond_step_moments::<Exact>(m, n, s[0], s[1]), |c| {
            json!({
                "state": { "w": s[0], "b": s[1] },
                "w": render_pair(&c.ew),
                "b": render_pair(&c.eb),
                "w2": render_pair(&c.ew2),
                "b2": render_pair(&c.eb2),
                "wb": render_pair(&c.ewb),
            })
        })?;
    }
    if martingale {
        v["martingale"] = martingale_matrices(m, n)?.to_json(digits);
    }
    eprintln!(
        "m={m} n={n}: E[Y0] = {}, E[Y1] = {}",
        mean.ey0.render(),
        mean.ey1.render()
    );
    emit(output, &v)
}

#[allow(clippy::too_many_arguments)]
fn cmd_degree(
    m: u32,
    j: Option<u64>,
    n: u64,
    pmf: bool,
    threshold: u64,
    regime: Option<Regime>,
    theta: f64,
    output: &Output,
) -> Run {
    let spec = match regime {
        None => None,
        Some(Regime::Fixed) => {
            Some(RegimeSpec::FixedJ(j.ok_or_else(|| {
                Failure::Usage("--regime fixed needs --j".into())
            })?))
        }
        Some(Regime::Linear) => Some(RegimeSpec::LinearTheta(theta)),
    };
    let j = match (&spec, j) {
        (Some(s), None) => s.label_at(n),
        (_, Some(j)) => j,
        (None, None) => return Err(Failure::Usage("--j is required without --regime".into())),
    };
    if pmf {
        let t = degree_pmf::<Exact>(m, j, n)?;
        eprintln!("m={m} j={j} n={n}: {} degree values", t.len());
        return emit_table(output, json!({ "m": m, "j": j, "n": n }), &t);
    }
    let report = degree_moment_report(m, j, n, threshold)?;
    let mut v = report.to_json();
    if let Some(s) = spec {
        let a = degree_asymptotics(m, &s, n)?;
        v["asymptotics"] = serde_json::to_value(&a).map_err(|e| Failure::Other(e.to_string()))?;
        v["asymptotics"]["ratio"] = json!(a.ratio());
    }
    eprintln!(
        "m={m} j={j} n={n}: mean {:.12}, variance {:.12}",
        report.mean, report.variance
    );
    emit(output, &v)
}

fn cmd_clt(path: &Path, m: Option<u32>, output: &Output) -> Run {
    let text = std::fs::read_to_string(path)?;
    let report: SimReport = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: not a simulation report: {e}", path.display())))?;
    let m = m.unwrap_or(report.m);
    let c = clt_check(&report, m)?;
    let verdict = match c.pass {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "informational (age below the asymptotic regime)",
    };
    eprintln!(
        "m={m} n={}: max covariance rel err {:.4}, Mardia p (skew {:.4}, kurt {:.4}): {verdict}",
        c.n, c.max_cov_rel_err, c.mardia_skew_p, c.mardia_kurt_p
    );
    emit(
        output,
        &serde_json::to_value(&c).map_err(|e| Failure::Other(e.to_string()))?,
    )?;
    if c.pass == Some(false) {
        return Err(Failure::Verify);
    }
    Ok(())
}

fn cmd_verify(suite: Suite, max_m: u32, max_n: u64, output: &Output) -> Run {
    let r = run_suite(suite, max_m, max_n)?;
    for c in &r.checks {
        eprintln!(
            "{} {:<22} {:>7} cases  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.cases,
            c.note.as_deref().unwrap_or("")
        );
    }
    emit(
        output,
        &serde_json::to_value(&r).map_err(|e| Failure::Other(e.to_string()))?,
    )?;
    if !r.pass {
        return Err(Failure::Verify);
    }
    Ok(())
}

fn run(cli: Cli) -> Run {
    match cli.command {
        Command::Simulate {
            m,
            n,
            replicates,
            seed,
            stats,
            workers,
            draw_budget,
            output,
        } => cmd_simulate(
            m,
            n,
            replicates,
            seed,
            &stats,
            workers,
            draw_budget,
            &output,
        ),
        Command::Exact {
            m,
            n,
            mode,
            budget,
            output,
        } => cmd_exact(m, n, mode, budget, &output),
        Command::Analytic {
            m,
            n,
            state,
            martingale,
            digits,
            output,
        } => cmd_analytic(m, n, state.as_deref(), martingale, digits, &output),
        Command::Degree {
            m,
            j,
            n,
            pmf,
            threshold,
            regime,
            theta,
            output,
        } => cmd_degree(m, j, n, pmf, threshold, regime, theta, &output),
        Command::Clt { report, m, output } => cmd_clt(&report, m, &output),
        Command::Verify {
            suite,
            max_m,
            max_n,
            output,
        } => cmd_verify(suite, max_m, max_n, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_BUDGET)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
