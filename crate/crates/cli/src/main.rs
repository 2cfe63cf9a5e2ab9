//! `janardan` — Galton–Watson branching analysis for the perturbed-Poisson
//! offspring family.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 numerical
//! non-convergence. Every sampling subcommand takes `--seed` (default 42)
//! and identical invocations produce byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use janardan::branching::{
    classify, extinction_curve, extinction_probability, extinction_time_pmf, simulate_many,
    DEFAULT_POPULATION_CAP,
};
use janardan::estimation::{poisson_mle, repeated_moment_estimate, FrequencyTable};
use janardan::offspring::{OffspringModel, DEFAULT_TAIL_EPS};
use janardan::report;

/// Default RNG seed for `sample`, `simulate`, and the regenerated estimator
/// table; fixed so that repeated runs reproduce the same artifacts.
const DEFAULT_SEED: u64 = 42;

/// Environment variable naming the default output directory for `tables`.
const OUT_DIR_ENV: &str = "JANARDAN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "janardan",
    version,
    about = "Galton-Watson branching analysis for the perturbed-Poisson offspring family",
    after_help = "Exit codes: 0 success, 1 usage error, 2 domain error, 3 numerical \
                  non-convergence.\nSet JANARDAN_OUT_DIR to change the default output \
                  directory of `tables`."
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Decimal places for numbers in text output.
    #[arg(long, global = true, default_value_t = 7)]
    precision: u8,

    /// Write to this file (directory for `tables`) instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Base RNG seed for sampling and simulation.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Args)]
struct ModelArgs {
    /// Janardan rate parameter λ (use together with --mu).
    #[arg(long, requires = "mu", conflicts_with = "poisson", allow_negative_numbers = true)]
    lambda: Option<f64>,

    /// Janardan perturbation parameter μ, 0 < μ < λ.
    #[arg(long, requires = "lambda", conflicts_with = "poisson", allow_negative_numbers = true)]
    mu: Option<f64>,

    /// Use a Poisson offspring law with the given rate instead.
    #[arg(long, value_name = "LAMBDA", allow_negative_numbers = true)]
    poisson: Option<f64>,
}

impl ModelArgs {
    fn model(&self) -> Result<OffspringModel, CliError> {
        match (self.lambda, self.mu, self.poisson) {
            (Some(lambda), Some(mu), None) => Ok(OffspringModel::janardan(lambda, mu)?),
            (None, None, Some(lambda)) => Ok(OffspringModel::poisson(lambda)?),
            _ => Err(CliError::Usage(
                "specify an offspring law: --lambda L --mu M, or --poisson L".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the offspring pmf (classes, masses, cumulative masses).
    Dist {
        #[command(flatten)]
        model: ModelArgs,
        /// Largest class to print (default: cover all but a 1e-12 tail).
        #[arg(long, value_name = "K")]
        max_m: Option<u32>,
    },
    /// Report criticality: mean offspring count and, for Janardan laws with
    /// λ ≥ 1, the critical threshold g(λ).
    Classify {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Extinction probability (smallest root of pgf(s) = s in [0, 1]).
    Extinction {
        #[command(flatten)]
        model: ModelArgs,
        /// Root tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Per-generation extinction probabilities q_1..q_N.
    Curve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_name = "N")]
        generations: u32,
    },
    /// Extinction-time distribution Pr(T = n) for n = 1..N.
    ExtTime {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_name = "N")]
        generations: u32,
    },
    /// Simulate independent population traces and summarize extinction.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of independent traces.
        #[arg(long, value_name = "R")]
        traces: u64,
        /// Generation horizon per trace.
        #[arg(long, value_name = "G")]
        max_gen: u32,
        /// Stop a trace once a generation reaches this size.
        #[arg(long, default_value_t = DEFAULT_POPULATION_CAP)]
        pop_cap: u64,
    },
    /// Draw offspring observations (one integer per line).
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of observations.
        #[arg(short = 'n', long = "count", value_name = "N")]
        n: u64,
    },
    /// Repeated-moment estimation (λ̂, μ̂) from a data file, with the
    /// Poisson maximum-likelihood mean as comparator.
    Estimate {
        /// Input file: one observation per line, or `class,count` CSV with
        /// --from-freq.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Treat the input as a frequency table.
        #[arg(long)]
        from_freq: bool,
    },
    /// Write the canonical result tables (and figure) as files.
    Tables {
        /// Emit tables T1..T5 plus the figure.
        #[arg(long, conflicts_with = "id")]
        all: bool,
        /// Emit a single table by id (T1..T5).
        #[arg(long, value_name = "ID")]
        id: Option<String>,
        /// Emit the figure data (CSV/JSON) and its SVG rendering.
        #[arg(long)]
        figure: bool,
    },
}

enum CliError {
    Usage(String),
    Lib(janardan::Error),
    Io(std::io::Error),
}

impl From<janardan::Error> for CliError {
    fn from(e: janardan::Error) -> Self {
        Self::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Lib(e) => match e {
                janardan::Error::NonConvergence(_) | janardan::Error::InternalConsistency(_) => 3,
                _ => 2,
            },
            Self::Io(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Usage(m) => format!("usage error: {m}"),
            Self::Lib(e) => format!("{} error: {e}", e.category()),
            Self::Io(e) => format!("io error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let precision = usize::from(cli.precision.min(16));
    let output = match &cli.command {
        Command::Dist { model, max_m } => dist(&model.model()?, *max_m, cli.format, precision)?,
        Command::Classify { model } => classify_out(&model.model()?, cli.format, precision),
        Command::Extinction { model, tol } => {
            let q = extinction_probability(&model.model()?, *tol)?;
            match cli.format {
                Format::Text => format!("{q:.precision$}\n"),
                Format::Csv => format!("q\n{q:.16e}\n"),
                Format::Json => pretty(&json!({
                    "model": model.model()?.to_string(),
                    "tol": tol,
                    "q": q,
                })),
            }
        }
        Command::Curve { model, generations } => {
            let model = model.model()?;
            let curve = extinction_curve(&model, *generations)?;
            columns_out(
                cli.format,
                precision,
                &["generation", "q"],
                (1..=curve.q.len()).map(|g| (g as u64, vec![curve.q[g - 1]])),
                json!({ "model": model.to_string(), "limit": curve.limit }),
            )
        }
        Command::ExtTime { model, generations } => {
            let model = model.model()?;
            let dist = extinction_time_pmf(&model, *generations)?;
            columns_out(
                cli.format,
                precision,
                &["generation", "pt", "cumulative"],
                (1..=dist.pt.len()).map(|g| (g as u64, vec![dist.pt[g - 1], dist.cumulative[g - 1]])),
                json!({ "model": model.to_string() }),
            )
        }
        Command::Simulate {
            model,
            traces,
            max_gen,
            pop_cap,
        } => {
            let model = model.model()?;
            let summary = simulate_many(&model, cli.seed, *traces, *max_gen, *pop_cap)?;
            match cli.format {
                Format::Json => pretty(&json!({
                    "model": model.to_string(),
                    "seed": cli.seed,
                    "max_generations": max_gen,
                    "population_cap": pop_cap,
                    "traces": summary.traces,
                    "extinct": summary.extinct,
                    "truncated": summary.truncated,
                    "extinct_fraction": summary.extinct_fraction,
                    "extinct_by_generation": summary.extinct_by_generation,
                })),
                Format::Csv => {
                    let mut s = String::from("generation,extinct_by\n");
                    for (i, &count) in summary.extinct_by_generation.iter().enumerate() {
                        let _ = writeln!(s, "{},{count}", i + 1);
                    }
                    s
                }
                Format::Text => {
                    let mut s = String::new();
                    let _ = writeln!(s, "model: {model}");
                    let _ = writeln!(s, "seed: {}", cli.seed);
                    let _ = writeln!(s, "traces: {}", summary.traces);
                    let _ = writeln!(s, "extinct: {}", summary.extinct);
                    let _ = writeln!(s, "truncated: {}", summary.truncated);
                    let _ = writeln!(
                        s,
                        "extinct_fraction: {:.precision$}",
                        summary.extinct_fraction
                    );
                    s
                }
            }
        }
        Command::Sample { model, n } => {
            let model = model.model()?;
            let obs = model.draw_observations(*n, cli.seed)?;
            match cli.format {
                Format::Json => pretty(&json!({
                    "model": model.to_string(),
                    "seed": cli.seed,
                    "n": n,
                    "observations": obs,
                })),
                _ => {
                    let mut s = String::with_capacity(obs.len() * 2);
                    for x in obs {
                        let _ = writeln!(s, "{x}");
                    }
                    s
                }
            }
        }
        Command::Estimate { input, from_freq } => {
            let text = fs::read_to_string(input)?;
            let freq = if *from_freq {
                FrequencyTable::from_csv_text(&text)?
            } else {
                FrequencyTable::from_observation_text(&text)?
            };
            let est = repeated_moment_estimate(&freq)?;
            let mle = poisson_mle(&freq);
            match cli.format {
                Format::Json => pretty(&json!({
                    "n": freq.n(),
                    "sample_mean": est.sample_mean,
                    "zero_fraction": est.zero_fraction,
                    "lambda_hat": est.lambda_hat,
                    "mu_hat": est.mu_hat,
                    "admissible": est.admissible,
                    "poisson_mle": mle,
                })),
                Format::Csv => {
                    let mut s = String::from("key,value\n");
                    let _ = writeln!(s, "n,{}", freq.n());
                    let _ = writeln!(s, "sample_mean,{:.16e}", est.sample_mean);
                    let _ = writeln!(s, "zero_fraction,{:.16e}", est.zero_fraction);
                    let _ = writeln!(s, "lambda_hat,{:.16e}", est.lambda_hat);
                    let _ = writeln!(s, "mu_hat,{:.16e}", est.mu_hat);
                    let _ = writeln!(s, "admissible,{}", u8::from(est.admissible));
                    let _ = writeln!(s, "poisson_mle,{:.16e}", mle);
                    s
                }
                Format::Text => {
                    let mut s = String::new();
                    let _ = writeln!(s, "n: {}", freq.n());
                    let _ = writeln!(s, "sample_mean: {:.precision$}", est.sample_mean);
                    let _ = writeln!(s, "zero_fraction: {:.precision$}", est.zero_fraction);
                    let _ = writeln!(s, "lambda_hat: {:.precision$}", est.lambda_hat);
                    let _ = writeln!(s, "mu_hat: {:.precision$}", est.mu_hat);
                    let _ = writeln!(s, "admissible: {}", est.admissible);
                    let _ = writeln!(s, "poisson_mle: {:.precision$}", mle);
                    s
                }
            }
        }
        Command::Tables { all, id, figure } => {
            return tables(&cli, *all, id.as_deref(), *figure);
        }
    };
    emit(cli.out.as_deref(), &output)
}

fn dist(
    model: &OffspringModel,
    max_m: Option<u32>,
    format: Format,
    precision: usize,
) -> Result<String, CliError> {
    let (probs, cum, tail) = match max_m {
        Some(k) => {
            let mut probs = Vec::with_capacity(k as usize + 1);
            let mut cum = Vec::with_capacity(k as usize + 1);
            let mut total = 0.0_f64;
            for m in 0..=k {
                let p = model.pmf(m);
                total += p;
                probs.push(p);
                cum.push(total.min(1.0));
            }
            (probs, cum, (1.0 - total).max(0.0))
        }
        None => {
            let table = model.pmf_table(DEFAULT_TAIL_EPS)?;
            (table.probs().to_vec(), table.cum().to_vec(), table.tail_bound())
        }
    };
    Ok(match format {
        Format::Json => pretty(&json!({
            "model": model.to_string(),
            "pmf": probs,
            "cum": cum,
            "tail_bound": tail,
        })),
        Format::Csv => {
            let mut s = String::from("m,p,cum\n");
            for (m, (p, c)) in probs.iter().zip(&cum).enumerate() {
                let _ = writeln!(s, "{m},{p:.16e},{c:.16e}");
            }
            s
        }
        Format::Text => {
            let mut s = String::from("m  p  cum\n");
            for (m, (p, c)) in probs.iter().zip(&cum).enumerate() {
                let _ = writeln!(s, "{m}  {p:.precision$}  {c:.precision$}");
            }
            s
        }
    })
}

fn classify_out(model: &OffspringModel, format: Format, precision: usize) -> String {
    let crit = classify(model);
    match format {
        Format::Json => pretty(&json!({
            "model": model.to_string(),
            "class": crit.class.to_string(),
            "mean_offspring": crit.mean_offspring,
            "critical_mu": crit.threshold_mu,
        })),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            let _ = writeln!(s, "class,{}", crit.class);
            let _ = writeln!(s, "mean_offspring,{:.16e}", crit.mean_offspring);
            if let Some(t) = crit.threshold_mu {
                let _ = writeln!(s, "critical_mu,{t:.16e}");
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "model: {model}");
            let _ = writeln!(s, "class: {}", crit.class);
            let _ = writeln!(s, "mean_offspring: {:.precision$}", crit.mean_offspring);
            if let Some(t) = crit.threshold_mu {
                let _ = writeln!(s, "critical_mu: {t:.precision$}");
            }
            s
        }
    }
}

/// Renders a generation-indexed table of floats in the chosen format.
fn columns_out(
    format: Format,
    precision: usize,
    names: &[&str],
    rows: impl Iterator<Item = (u64, Vec<f64>)>,
    meta: Value,
) -> String {
    match format {
        Format::Json => {
            let rows: Vec<Value> = rows
                .map(|(g, vals)| {
                    let mut row = vec![json!(g)];
                    row.extend(vals.iter().map(|v| json!(v)));
                    Value::Array(row)
                })
                .collect();
            let mut obj = json!({ "columns": names, "rows": rows });
            if let (Value::Object(dst), Value::Object(src)) = (&mut obj, meta) {
                for (k, v) in src {
                    dst.insert(k, v);
                }
            }
            pretty(&obj)
        }
        Format::Csv => {
            let mut s = names.join(",");
            s.push('\n');
            for (g, vals) in rows {
                let _ = write!(s, "{g}");
                for v in vals {
                    let _ = write!(s, ",{v:.16e}");
                }
                s.push('\n');
            }
            s
        }
        Format::Text => {
            let mut s = names.join("  ");
            s.push('\n');
            for (g, vals) in rows {
                let _ = write!(s, "{g}");
                for v in vals {
                    let _ = write!(s, "  {v:.precision$}");
                }
                s.push('\n');
            }
            s
        }
    }
}

fn tables(cli: &Cli, all: bool, id: Option<&str>, figure: bool) -> Result<(), CliError> {
    if !(all || figure || id.is_some()) {
        return Err(CliError::Usage(
            "nothing to emit: pass --all, --id T1..T5, or --figure".into(),
        ));
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;

    let ids: Vec<report::TableId> = if all {
        vec![
            report::TableId::T1,
            report::TableId::T2,
            report::TableId::T3,
            report::TableId::T4,
            report::TableId::T5,
        ]
    } else {
        id.map(report::TableId::parse).transpose()?.into_iter().collect()
    };

    let mut written = Vec::new();
    for table_id in ids {
        let table = match table_id {
            report::TableId::T1 => report::default_table1()?,
            report::TableId::T2 => report::default_table2()?,
            report::TableId::T3 => report::default_table3()?,
            report::TableId::T4 => report::default_table4()?,
            report::TableId::T5 => report::default_table5(cli.seed)?,
        };
        let (ext, content) = match cli.format {
            Format::Csv => ("csv", report::to_csv(&table)),
            Format::Json => ("json", pretty(&report::to_json(&table))),
            Format::Text => ("txt", report::to_display(&table)),
        };
        let path = dir.join(format!("{}.{ext}", table_id.as_str()));
        fs::write(&path, content)?;
        written.push(path);
    }

    if all || figure {
        let fig = report::figure1(20)?;
        let (ext, content) = match cli.format {
            Format::Json => ("json", pretty(&report::figure_to_json(&fig))),
            _ => ("csv", report::figure_to_csv(&fig)),
        };
        let data_path = dir.join(format!("figure1.{ext}"));
        fs::write(&data_path, content)?;
        written.push(data_path);
        let svg_path = dir.join("figure1.svg");
        fs::write(&svg_path, report::figure_to_svg(&fig))?;
        written.push(svg_path);
    }

    let mut listing = String::new();
    for path in written {
        let _ = writeln!(listing, "wrote {}", path.display());
    }
    print!("{listing}");
    Ok(())
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}

fn emit(out: Option<&std::path::Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}
