//! Command-line front end: reproduce the benchmark convergence table,
//! generate and evaluate instances, dump the calculus curves, and run the
//! numeric property suites.
//!
//! Exit codes: 0 success, 2 parse/config errors, 3 numeric failures,
//! 4 property-suite failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use auction_gap::worstcase::GeneratorConfig;
use auction_gap::{
    calc_q, calc_v, calc_v_prime, generate_worstcase, irregular_report, make_irregular,
    ratio_report, run_suites, Error, Instance, McConfig, RatioReport,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_PROPERTY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "auction-gap",
    version,
    about = "Revenue benchmarks for single-item auctions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate worst-case instances for each n and tabulate the benchmark
    /// ratios.
    Table {
        /// Agent counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,50,100,1000")]
        n: Vec<usize>,
        /// Monte-Carlo seed (defaults to AUCTION_GAP_SEED or 42).
        #[arg(long)]
        seed: Option<u64>,
        /// Monte-Carlo samples per reserve scan.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate one worst-case instance and write it as instance JSON.
    Gen {
        #[arg(long)]
        n: usize,
        /// Mass of the top agent.
        #[arg(long, default_value_t = 1e-6)]
        top_mass: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an instance file: all four benchmarks and their ratios.
    Eval {
        /// Instance JSON path.
        instance: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the calculus curves (p, V, V', Q) on a log-spaced grid, plus a
    /// gnuplot script next to the CSV when writing to a file.
    Vq {
        #[arg(long, default_value_t = 1.01)]
        p_min: f64,
        #[arg(long, default_value_t = 100.0)]
        p_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report on the irregular value-or-nothing family.
    Irregular {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numeric property suites; nonzero exit on any failure.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) | Error::Bisection { .. } => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("AUCTION_GAP_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(42)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Table {
            n,
            seed,
            samples,
            format,
            out,
        } => {
            let mc = McConfig {
                samples,
                seed: resolve_seed(seed),
                chunks: 64,
            };
            let mut reports = Vec::new();
            for &agents in &n {
                if agents < 2 {
                    return Err(Error::Config(format!("table needs n >= 2, got {agents}")));
                }
                let inst = generate_worstcase(&GeneratorConfig::new(agents))?;
                reports.push(ratio_report(&inst, &mc)?);
            }
            write_output(out.as_deref(), &render_reports(&reports, format))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { n, top_mass, out } => {
            let mut cfg = GeneratorConfig::new(n);
            cfg.top_mass = top_mass;
            let inst = generate_worstcase(&cfg)?;
            write_output(out.as_deref(), &(inst.to_json() + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            instance,
            seed,
            samples,
            format,
            out,
        } => {
            let text = fs::read_to_string(&instance)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", instance.display())))?;
            let inst = Instance::from_json(&text)?;
            if inst.metadata.is_some() {
                if let Ok(mass) = inst.tri_mass() {
                    if mass > 1.0 + 1e-9 {
                        eprintln!("warning: instance exceeds unit ex ante mass ({mass:.6}); the ex ante solver clips it");
                    }
                }
            }
            let mc = McConfig {
                samples,
                seed: resolve_seed(seed),
                chunks: 64,
            };
            let report = ratio_report(&inst, &mc)?;
            write_output(
                out.as_deref(),
                &render_reports(std::slice::from_ref(&report), format),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Vq {
            p_min,
            p_max,
            points,
            out,
        } => {
            if p_min <= 1.0 || p_min.is_nan() {
                return Err(Error::Domain(format!("p-min must exceed 1, got {p_min}")));
            }
            if p_max <= p_min || p_max.is_nan() {
                return Err(Error::Domain(format!("empty range: [{p_min}, {p_max}]")));
            }
            if points < 2 {
                return Err(Error::Config(format!(
                    "need at least 2 points, got {points}"
                )));
            }
            let mut csv = String::from("p,v,v_prime,q\n");
            let ratio = (p_max / p_min).ln();
            for i in 0..points {
                let p = p_min * (ratio * i as f64 / (points - 1) as f64).exp();
                let _ = writeln!(
                    csv,
                    "{p:.12},{:.12},{:.12},{:.12}",
                    calc_v(p)?,
                    calc_v_prime(p)?,
                    calc_q(p)?
                );
            }
            match out.as_deref() {
                Some(path) => {
                    write_output(Some(path), &csv)?;
                    let gp = path.with_extension("gp");
                    let csv_name = path
                        .file_name()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "vq.csv".into());
                    write_output(Some(&gp), &gnuplot_script(&csv_name))?;
                }
                None => {
                    write_output(None, &csv)?;
                    eprintln!("note: pass --out FILE to also emit the companion gnuplot script");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Irregular {
            n,
            h,
            seed,
            samples,
            out,
        } => {
            let inst = make_irregular(n, h)?;
            let mc = McConfig {
                samples,
                seed: resolve_seed(seed),
                chunks: 64,
            };
            let report = irregular_report(&inst, &mc)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Numeric(format!("report serialization: {e}")))?;
            write_output(out.as_deref(), &(json + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { seed, trials } => {
            if trials < 1 {
                return Err(Error::Config("trials must be at least 1".into()));
            }
            let suite = run_suites(resolve_seed(seed), trials);
            for c in &suite.checks {
                println!(
                    "{:<34} {:>7}/{:<7} {}",
                    c.name,
                    c.trials - c.failures,
                    c.trials,
                    if c.passed() { "ok" } else { "FAILED" }
                );
            }
            if suite.all_passed() {
                println!("all properties passed");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("property failures detected");
                Ok(ExitCode::from(EXIT_PROPERTY))
            }
        }
    }
}

fn render_reports(reports: &[RatioReport], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::from(RatioReport::csv_header());
            out.push('\n');
            for r in reports {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let mut out = serde_json::to_string_pretty(reports).expect("reports serialize");
            out.push('\n');
            out
        }
    }
}

fn gnuplot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale x\n\
         set xlabel 'p'\n\
         set key top right\n\
         plot '{csv_name}' using 1:2 with lines title 'V', \\\n\
         \x20    '{csv_name}' using 1:3 with lines title \"V'\", \\\n\
         \x20    '{csv_name}' using 1:4 with lines title 'Q'\n"
    )
}
