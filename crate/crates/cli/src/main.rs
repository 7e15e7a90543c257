mod inputs;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use shadowtrace::acceptance;
use shadowtrace::approx::{approximate_by_positive_entropy_ergodic, ApproxReport};
use shadowtrace::chain::build_chain_graph;
use shadowtrace::entropy::entropy_estimate;
use shadowtrace::horseshoe::{build_certificate, find_loop_family, HorseshoeCertificate};
use shadowtrace::measure::{dstar, TestFunctionFamily, DEFAULT_DEPTH};
use shadowtrace::rational::{self, to_f64};
use shadowtrace::shadow::{has_shadowing_at_resolution, is_positively_shadowable_at};
use shadowtrace::space::symbolic::encode_word;
use shadowtrace::{Error, Rational, System};

use inputs::{load_system, parse_measure, parse_point, parse_range, parse_rational};

/// Exit status for a completed run whose check came out negative.
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_NOT_FOUND: u8 = 5;
const EXIT_INTERNAL: u8 = 10;

#[derive(Parser)]
#[command(name = "shadowtrace", version, about = "Shadowing, chain recurrence and entropy on finitely represented systems")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a named system and write it as a system file.
    Construct {
        /// fig1, example33, extension, fullshift or goldenmean.
        name: String,
        #[arg(long)]
        net: Option<usize>,
        /// Number of periodic layers (example33) or levels (extension).
        #[arg(long)]
        layers: Option<usize>,
        /// Base circle sample size (example33).
        #[arg(long)]
        base: Option<usize>,
        /// Alphabet size (fullshift).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chain-recurrent set and chain classes at resolution delta.
    Chain {
        #[arg(long)]
        system: String,
        #[arg(long, value_parser = parse_rational)]
        delta: Rational,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Positive shadowing test at a point, or the all-starts test.
    Shadow {
        #[arg(long)]
        system: String,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        #[arg(long, value_parser = parse_rational)]
        delta: Rational,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        two_sided: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a loop family at a point and emit a horseshoe certificate.
    Horseshoe {
        #[arg(long)]
        system: String,
        #[arg(long)]
        point: String,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        #[arg(long, value_parser = parse_rational)]
        delta: Rational,
        #[arg(long, default_value_t = 16)]
        n_max: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Longest coded word.
        #[arg(long, default_value_t = 8)]
        words: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximal separated-set counts and the entropy slope.
    Entropy {
        #[arg(long)]
        system: String,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        /// `A..B` or a comma list.
        #[arg(long)]
        n: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exact truncated d* between two measures.
    Dstar {
        #[arg(long)]
        system: String,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Approximate a measure by the empirical measure of a horseshoe point.
    Approx {
        #[arg(long)]
        system: String,
        #[arg(long)]
        mu: String,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a certificate or approximation report against a system.
    Verify {
        file: PathBuf,
        #[arg(long)]
        system: String,
    },
    /// Run the acceptance suite.
    Accept {
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => EXIT_CHECK_FAILED,
            CliError::Core(e) => match e {
                Error::Schema(_) | Error::Json(_) => EXIT_SCHEMA,
                Error::BudgetExceeded(_) => EXIT_BUDGET,
                Error::NotFound(_) | Error::Inapplicable(_) | Error::Unshadowed { .. } => EXIT_NOT_FOUND,
                Error::Io(_) => EXIT_INTERNAL,
                _ => EXIT_USAGE,
            },
        }
    }
}

type CliResult = Result<(), CliError>;

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            let mut so = std::io::stdout().lock();
            writeln!(so, "{text}")?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn dec(r: &Rational) -> String {
    format!("{:.12}", to_f64(r))
}

fn construct(name: &str, net: Option<usize>, layers: Option<usize>, base: Option<usize>, k: Option<usize>) -> String {
    match name {
        "fig1" => format!("fig1:{}", net.unwrap_or(360)),
        "example33" => format!("example33:{}:{}", layers.unwrap_or(12), base.unwrap_or(200)),
        "extension" => format!("extension:{}", layers.unwrap_or(4)),
        "fullshift" => format!("fullshift:{}", k.unwrap_or(2)),
        other => other.to_string(),
    }
}

#[derive(Serialize)]
struct ChainOutput {
    #[serde(with = "rational::serde_rat")]
    delta: Rational,
    radius: Option<usize>,
    nodes: usize,
    recurrent: Vec<String>,
    classes: Vec<Vec<String>>,
}

fn node_label(sys: &System, g: &shadowtrace::chain::ChainGraph, i: usize) -> String {
    match (sys, g.word(i)) {
        (_, Some(w)) => encode_word(w),
        (System::Net(n), None) => n.labels()[i].clone(),
        _ => i.to_string(),
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Construct { name, net, layers, base, k, out } => {
            let source = construct(&name, net, layers, base, k);
            let sys = load_system(&source)?;
            emit(out.as_ref(), &sys.to_json())?;
        }
        Command::Chain { system, delta, csv } => {
            let sys = load_system(&system)?;
            let g = build_chain_graph(&sys, &delta)?;
            let d = g.decompose();
            let label = |i: usize| node_label(&sys, &g, i);
            let o = ChainOutput {
                delta: d.delta.clone(),
                radius: d.radius,
                nodes: g.len(),
                recurrent: d.recurrent.iter().map(|&i| label(i)).collect(),
                classes: d.classes.iter().map(|c| c.iter().map(|&i| label(i)).collect()).collect(),
            };
            if let Some(p) = csv {
                let mut s = String::from("node,label,class\n");
                for (ci, c) in d.classes.iter().enumerate() {
                    for &i in c {
                        s.push_str(&format!("{i},{},{ci}\n", label(i)));
                    }
                }
                fs::write(p, s).map_err(Error::from)?;
            }
            emit(None, &json(&o)?)?;
        }
        Command::Shadow { system, eps, delta, horizon, point, two_sided, out } => {
            let sys = load_system(&system)?;
            let rep = match point {
                Some(p) => is_positively_shadowable_at(&sys, &parse_point(&sys, &p)?, &eps, &delta, horizon)?,
                None => has_shadowing_at_resolution(&sys, &delta, &eps, horizon, two_sided)?,
            };
            emit(out.as_ref(), &json(&rep)?)?;
        }
        Command::Horseshoe { system, point, eps, delta, n_max, k, words, out } => {
            let sys = load_system(&system)?;
            let x = parse_point(&sys, &point)?;
            let fam = find_loop_family(&sys, &x, &eps, &delta, n_max, k)?
                .ok_or_else(|| Error::NotFound(format!("no {k}-loop family at {point} within {n_max} steps")))?;
            let cert = build_certificate(&sys, &fam, words)?;
            emit(out.as_ref(), &cert.to_json()?)?;
        }
        Command::Entropy { system, eps, n, csv } => {
            let sys = load_system(&system)?;
            let ns = parse_range(&n)?;
            let est = entropy_estimate(&sys, &eps, &ns)?;
            if let Some(p) = csv {
                let mut s = String::from("n,epsilon,epsilon_decimal,count,log_count\n");
                for (n, c) in est.ns.iter().zip(&est.counts) {
                    s.push_str(&format!("{n},{},{},{c},{:.12}\n", rational::fmt(&eps), dec(&eps), (*c as f64).ln()));
                }
                fs::write(p, s).map_err(Error::from)?;
            }
            emit(None, &json(&est)?)?;
        }
        Command::Dstar { system, mu, nu, depth } => {
            let sys = load_system(&system)?;
            let (mu, nu) = (parse_measure(&sys, &mu)?, parse_measure(&sys, &nu)?);
            let fam = TestFunctionFamily::with_depth(&sys, depth)?;
            let d = dstar(&sys, &mu, &nu, &fam)?;
            #[derive(Serialize)]
            struct Out {
                #[serde(with = "rational::serde_rat")]
                value: Rational,
                value_decimal: String,
                #[serde(with = "rational::serde_rat")]
                tail_bound: Rational,
                depth: usize,
            }
            let o = Out { value_decimal: dec(&d.value), value: d.value, tail_bound: d.tail_bound, depth: d.depth };
            emit(None, &json(&o)?)?;
        }
        Command::Approx { system, mu, eps, out } => {
            let sys = load_system(&system)?;
            let mu = parse_measure(&sys, &mu)?;
            let rep = approximate_by_positive_entropy_ergodic(&sys, &mu, &eps)?;
            emit(out.as_ref(), &rep.to_json()?)?;
            if !rep.holds() {
                return Err(CliError::Failed(format!("stamped bound {} not met", rational::fmt(&rep.bound))));
            }
        }
        Command::Verify { file, system } => {
            let sys = load_system(&system)?;
            let text = fs::read_to_string(&file).map_err(Error::from)?;
            if let Ok(rep) = ApproxReport::from_json(&text) {
                if rep.system_hash != sys.hash() {
                    return Err(Error::Schema("report was produced for a different system".into()).into());
                }
                let ok = rep.recheck(&sys)?;
                emit(None, &format!("{{\"kind\": \"approximation\", \"pass\": {ok}}}"))?;
                if !ok {
                    return Err(CliError::Failed("approximation report does not re-verify".into()));
                }
                return Ok(());
            }
            let cert = HorseshoeCertificate::from_json(&text)?;
            if cert.system_hash != sys.hash() {
                return Err(Error::Schema("certificate was produced for a different system".into()).into());
            }
            let chk = cert.recheck(&sys)?;
            emit(None, &json(&chk)?)?;
            if !chk.passes() {
                let words: Vec<String> = chk.tracing_failures.iter().map(|w| encode_word(w)).collect();
                return Err(CliError::Failed(format!("certificate fails; untraced words [{}]", words.join(", "))));
            }
        }
        Command::Accept { only } => {
            let ids: Vec<u8> =
                if only.is_empty() { acceptance::CRITERIA.iter().map(|c| c.0).collect() } else { only };
            let mut failed = 0;
            for id in &ids {
                let o = acceptance::run(*id)?;
                println!("{}", o.line());
                failed += usize::from(!o.passed);
            }
            println!("{}/{} criteria passed", ids.len() - failed, ids.len());
            if failed > 0 {
                return Err(CliError::Failed(format!("{failed} criteria failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
