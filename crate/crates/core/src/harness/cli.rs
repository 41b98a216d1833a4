//! `cnc-scsg` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors and configuration
//! violations, 2 on runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{validate_config, ConfigFile};
use crate::error::{Error, Result};
use crate::optim::{IfoConvention, MethodKind};
use crate::problem::{generate_dataset, read_point};
use crate::spectral::{default_max_iter, lambda_min, DEFAULT_TOL};

use super::{run_experiment, sweep, write_trace, MethodSpec, RunSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Benchmark minibatch size used when no configuration file is given.
const DEFAULT_B: usize = 5;
/// Benchmark gradient threshold used when no configuration file is given.
const DEFAULT_EPS: f64 = 3e-2;

#[derive(Debug, Parser)]
#[command(name = "cnc-scsg", version, about = "Saddle-escaping SCSG optimizers and benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a two-class synthetic dataset as CSV.
    GenData {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment and write its trace.
    Run {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace CSV path; the summary goes next to it. Without it the CSV
        /// is printed to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seed range, possibly for several methods, in parallel.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        /// Inclusive range `a..b`.
        #[arg(long, value_parser = parse_seed_range)]
        seeds: Range<u64>,
        /// Comma-separated methods; defaults to the configured one.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<MethodKind>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a configuration file and list every violated row.
    ValidateConfig {
        config: PathBuf,
    },
    /// Print the spectral report of a stored iterate.
    Certify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// JSON array holding the point.
        #[arg(long)]
        point: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration; without it dataset I with the practical defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<MethodKind>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    probe_every: Option<usize>,
    #[arg(long)]
    ifo_convention: Option<IfoConvention>,
}

fn parse_seed_range(s: &str) -> std::result::Result<Range<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
    if b < a {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok(a..b + 1)
}

fn load_config(path: Option<&Path>) -> Result<(ConfigFile, Option<PathBuf>)> {
    match path {
        Some(path) => {
            let file = ConfigFile::load(path)?;
            Ok((file, path.parent().map(Path::to_path_buf)))
        }
        None => Ok((
            ConfigFile {
                b: Some(DEFAULT_B),
                eps: Some(DEFAULT_EPS),
                ..ConfigFile::default()
            },
            None,
        )),
    }
}

impl RunArgs {
    fn spec(&self, seed: Option<u64>) -> Result<RunSpec> {
        let (mut file, base) = load_config(self.config.as_deref())?;
        if let Some(m) = self.method {
            file.method = Some(m.name().to_string());
        }
        if let Some(e) = self.epochs {
            file.max_epochs = Some(e);
        }
        if let Some(p) = self.probe_every {
            file.probe_every = Some(p);
        }
        if let Some(s) = seed {
            file.seed = Some(s);
        }
        let mut spec = RunSpec::from_config(&file, base.as_deref())?;
        if let Some(c) = self.ifo_convention {
            spec.ifo_convention = c;
        }
        Ok(spec)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Inadmissible(_) | Error::NonPositiveC { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::GenData { n, d, seed, out } => {
            generate_dataset(n, d, seed)?.write_csv(&out)?;
            log::info!("wrote {n} samples to {}", out.display());
        }
        Command::Run { common, seed, out } => {
            let spec = common.spec(seed)?;
            let trace = run_experiment(&spec)?;
            match out {
                Some(path) => write_trace(&trace, &path)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout
                        .write_all(trace.to_csv().as_bytes())
                        .map_err(|e| Error::io("<stdout>", e))?;
                }
            }
            log::info!(
                "{}: {} epochs, reason {}, final |grad| {:e}",
                trace.summary.method,
                trace.rows.len(),
                trace.summary.reason.as_str(),
                trace.summary.final_grad_norm
            );
        }
        Command::Sweep {
            common,
            seeds,
            methods,
            out,
        } => {
            let base = common.spec(None)?;
            let methods: Vec<MethodSpec> = if methods.is_empty() {
                vec![base.method.clone()]
            } else {
                methods.into_iter().map(MethodSpec::Method).collect()
            };
            let mut specs = Vec::new();
            for method in &methods {
                for seed in seeds.clone() {
                    let mut spec = base.clone();
                    spec.method = method.clone();
                    spec.seed = seed;
                    specs.push(spec);
                }
            }
            let result = sweep(&specs, Some(&out))?;
            for m in &result.aggregate.methods {
                println!(
                    "{}: runs {}, converged {}, median escape epochs {}",
                    m.method,
                    m.runs,
                    m.converged,
                    m.median_escape().map_or("n/a".to_string(), |v| v.to_string())
                );
            }
        }
        Command::ValidateConfig { config } => {
            let file = ConfigFile::load(&config)?;
            let spec = RunSpec::from_config(&file, config.parent())?;
            return Ok(match validate_config(&spec.config, spec.constants.as_ref()) {
                Ok(_) => {
                    println!("ok");
                    EXIT_OK
                }
                Err(violations) => {
                    for v in &violations {
                        println!("{v}");
                    }
                    EXIT_CONFIG
                }
            });
        }
        Command::Certify {
            config,
            point,
            tol,
            max_iter,
            seed,
        } => {
            let (file, base) = load_config(config.as_deref())?;
            let spec = RunSpec::from_config(&file, base.as_deref())?;
            let p = spec.problem.build()?;
            let x = read_point(&point)?;
            let mut rng = crate::sampling::substream(seed, crate::sampling::Substream::Probe);
            let report = lambda_min(&p, x.view(), tol, max_iter.unwrap_or(default_max_iter(p.dim())), &mut rng)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
    }
    Ok(EXIT_OK)
}
