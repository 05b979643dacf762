use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sre_spread::circuit::{sample_rng, Circuit};
use sre_spread::cli::{config_hash, fits_json, parse_window, read_bundle, write_bundle, ConfigFile, Metadata};
use sre_spread::clifford::enumerate_full_group;
use sre_spread::experiment::{analyze, run_monte_carlo_with_threads};
use sre_spread::oracle::equivalence_suite;
use sre_spread::sre::{enumerate_allowed_two_qubit_spectra, enumerate_psd_two_qubit_spectra};
use sre_spread::Error;

const THREADS_ENV: &str = "SRE_SPREAD_THREADS";

#[derive(Parser)]
#[command(name = "sre-spread", version, about = "SRE spreading under brickwork random Clifford circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo and write an output bundle.
    Run(Box<RunArgs>),
    /// Enumerate the two-qubit Clifford group.
    EnumerateGroup {
        /// Print a generator word for every element.
        #[arg(long)]
        words: bool,
    },
    /// List the allowed two-qubit Pauli spectra and their SRE.
    EnumerateSpectra {
        /// Drop the coset condition and keep only positivity.
        #[arg(long)]
        psd_only: bool,
    },
    /// Compare the fast path against dense state-vector evolution.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        length: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 100)]
        circuits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Recompute the fits of a stored bundle.
    Analyze {
        bundle: PathBuf,
        /// Overwrite fits.json in the bundle instead of printing.
        #[arg(long)]
        write: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated T sites.
    #[arg(long, value_delimiter = ',')]
    magic_sites: Option<Vec<usize>>,
    /// full-clifford or restricted.
    #[arg(long)]
    circuit: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: $SRE_SPREAD_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    gamma_window: Option<String>,
    #[arg(long)]
    residual_window: Option<String>,
    #[arg(long)]
    alpha_window: Option<String>,
    #[arg(long)]
    beta_window: Option<String>,
    #[arg(long)]
    interior_margin: Option<usize>,
    #[arg(long)]
    bootstrap_resamples: Option<usize>,
    /// Cap on L·T·N.
    #[arg(long)]
    max_work: Option<f64>,
    /// Print the gate words of sample 0 and continue.
    #[arg(long)]
    dump_circuit: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::OddLength(_) | Error::SiteOutOfRange { .. } | Error::Parse(_) => 1,
        _ => 2,
    }
}

fn window(s: &Option<String>) -> Result<Option<(usize, usize)>, Error> {
    s.as_deref().map(parse_window).transpose()
}

fn run(args: RunArgs) -> Result<(), Error> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let flags = ConfigFile {
        length: args.length,
        depth: args.depth,
        samples: args.samples,
        seed: args.seed,
        magic_sites: args.magic_sites.clone(),
        circuit: args.circuit.clone(),
        out: args.out.clone(),
        threads: args.threads,
        gamma_window: window(&args.gamma_window)?,
        residual_window: window(&args.residual_window)?,
        alpha_window: window(&args.alpha_window)?,
        beta_window: window(&args.beta_window)?,
        interior_margin: args.interior_margin,
        bootstrap_resamples: args.bootstrap_resamples,
        max_work: args.max_work,
    };
    let merged = file.merge(flags);
    let config = merged.to_run_config()?;
    let out = merged.out.clone().ok_or_else(|| Error::Config("missing required key \"out\"".into()))?;
    let threads = merged
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    if args.dump_circuit {
        let c = Circuit::sample(config.schedule()?, &mut sample_rng(config.seed, 0));
        print!("{}", c.dump());
    }
    let start = Instant::now();
    let profile = run_monte_carlo_with_threads(&config, threads)?;
    let report = analyze(&profile);
    let meta = Metadata {
        seed: config.seed,
        config_sha256: config_hash(&config),
        config: config.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_bundle(&out, &profile, &report, &meta)?;
    match report.gamma {
        Some(g) => println!("gamma = {:.4} over t in [{}, {}]", g.gamma, g.window.0, g.window.1),
        None => println!("gamma fit unavailable"),
    }
    if let Some(b) = report.beta {
        println!("beta = {:.4} over t in [{}, {}]", b.beta, b.window.0, b.window.1);
    }
    println!("wrote {} ({} samples, {:.1} s)", out.display(), profile.stats.count, meta.wall_time_seconds);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::EnumerateGroup { words } => {
            let start = Instant::now();
            let g = enumerate_full_group();
            if words {
                for (k, w) in g.words.iter().enumerate() {
                    println!("{k}\t{w}");
                }
            }
            println!("{} distinct elements ({:.3} s)", g.gates.len(), start.elapsed().as_secs_f64());
            Ok(())
        }
        Command::EnumerateSpectra { psd_only } => {
            let classes =
                if psd_only { enumerate_psd_two_qubit_spectra() } else { enumerate_allowed_two_qubit_spectra() };
            println!("a\tb\tM2\tsupports");
            for c in &classes {
                println!("{}\t{}\t{:.16}\t{}", c.a, c.b, c.sre, c.supports);
            }
            println!("{} classes", classes.len());
            Ok(())
        }
        Command::OracleCheck { length, depth, circuits, seed, tol } => match equivalence_suite(length, depth, circuits, seed) {
            Ok(r) => {
                println!("max expectation error: {:e}", r.max_expectation_error);
                println!("max global SRE error:  {:e}", r.max_global_sre_error);
                println!("expectations checked:  {}", r.expectations_checked);
                if r.passed(tol) {
                    println!("PASS");
                    Ok(())
                } else {
                    println!("FAIL (tolerance {tol:e})");
                    return ExitCode::from(3);
                }
            }
            Err(e) => Err(e),
        },
        Command::Analyze { bundle, write } => read_bundle(&bundle).and_then(|profile| {
            let json = fits_json(&profile.config, &analyze(&profile));
            if write {
                std::fs::write(bundle.join("fits.json"), json).map_err(Error::from)
            } else {
                print!("{json}");
                Ok(())
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
