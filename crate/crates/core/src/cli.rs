//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, IsTerminal};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::config::{Overrides, PortfolioConfig, ValidatedConfig};
use crate::error::{Error, Result};
use crate::portfolio::{Portfolio, TimeMode};
use crate::problems::ProblemRegistry;
use crate::report::{self, format_real, Header, ReportWriter, RunResult};
use crate::rng::derive_seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "evoport",
    version,
    about = "Parameter-less EDA portfolio for bitstring problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the portfolio with the given PortParameters.txt.
    Run {
        config: PathBuf,
        /// Base seed; run k uses a stream derived from it.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of independent runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Stop after this many fitness evaluations.
        #[arg(long = "max-evals")]
        max_evals: Option<u64>,
        /// Stop once this fitness is reached.
        #[arg(long)]
        target: Option<f64>,
        /// Stop after this many sweeps.
        #[arg(long = "max-sweeps")]
        max_sweeps: Option<u64>,
        #[arg(long = "time-mode", value_parser = parse_time_mode)]
        time_mode: Option<TimeMode>,
        /// Directory for the PORTFOLIO_*_*.txt files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the problem catalog.
    ListProblems,
}

fn parse_time_mode(s: &str) -> std::result::Result<TimeMode, String> {
    TimeMode::parse(s).ok_or_else(|| format!("expected `workunit` or `wallclock`, got {s:?}"))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn interrupt_flag() -> Arc<AtomicBool> {
    static FLAG: OnceLock<Arc<AtomicBool>> = OnceLock::new();
    FLAG.get_or_init(|| {
        let flag = Arc::new(AtomicBool::new(false));
        let handler_flag = Arc::clone(&flag);
        // Another handler may already be installed by the host process.
        let _ = ctrlc::set_handler(move || handler_flag.store(true, Ordering::SeqCst));
        flag
    })
    .clone()
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::ListProblems => {
            for (id, name) in ProblemRegistry::new().entries() {
                println!("{id} {name}");
            }
            Ok(())
        }
        Command::Run {
            config,
            seed,
            runs,
            max_evals,
            target,
            max_sweeps,
            time_mode,
            out,
        } => {
            let overrides = Overrides {
                seed,
                runs,
                max_fitness_calls: max_evals,
                target_fitness: target,
                max_sweeps,
                time_mode,
                output_dir: out,
            };
            run_command(&config, &overrides).map(|_| ())
        }
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Loads, overrides and validates the configuration, then performs every run.
/// Returns the output files in run order.
pub fn run_command(config_path: &Path, overrides: &Overrides) -> Result<Vec<PathBuf>> {
    let mut config = PortfolioConfig::load(config_path)?;
    config.apply_overrides(overrides);
    let validated = config.validate(&ProblemRegistry::new())?;
    let c = validated.config();

    let unbounded = !validated.stop_condition().is_bounded();
    if unbounded && !std::io::stdin().is_terminal() {
        return Err(Error::Validation {
            key: "maxFitnessCalls",
            message:
                "no stop condition set and no terminal attached; set maxFitnessCalls, maxSweeps, \
                      targetFitness or maxWallSeconds"
                    .into(),
        });
    }
    if unbounded {
        println!("no stop condition set; running until interrupted (Ctrl-C)");
    }

    fs::create_dir_all(&c.output_dir).map_err(|e| Error::io(&c.output_dir, e))?;
    let mut paths = Vec::with_capacity(c.runs);
    for run in 0..c.runs {
        let path = report::output_file_name(&c.output_dir, c.problem_type, run);
        File::create(&path).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }

    let interrupt = interrupt_flag();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunResult>>>> =
        Mutex::new((0..c.runs).map(|_| None).collect());
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(c.runs);
    let echo_prefix = |run: usize| {
        if c.runs > 1 {
            format!("[run {run}] ")
        } else {
            String::new()
        }
    };
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let run = next.fetch_add(1, Ordering::SeqCst);
                if run >= c.runs {
                    break;
                }
                let outcome = execute_run(
                    &validated,
                    run,
                    &paths[run],
                    Some(echo_prefix(run)),
                    Some(interrupt.clone()),
                );
                results.lock().expect("results lock")[run] = Some(outcome);
            });
        }
    });

    for (run, outcome) in results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .enumerate()
    {
        let r = outcome.expect("every run executed")?;
        println!(
            "{}stop={} totalFitnessCalls={} file={} bestFitness={}",
            echo_prefix(run),
            r.stop_reason.as_str(),
            r.total_fitness_calls,
            paths[run].display(),
            r.best_fitness.map_or_else(|| "-".into(), format_real),
        );
    }
    Ok(paths)
}

/// Header fields for run `run`; a start timestamp is added only in wall-clock mode.
pub fn run_header(validated: &ValidatedConfig, run: usize) -> Header {
    let c = validated.config();
    let mut h: Header = vec![
        ("problemType".into(), c.problem_type.to_string()),
        ("problem".into(), validated.problem().name().to_string()),
        ("stringSize".into(), c.string_size.to_string()),
        ("trapK".into(), c.trap_k.to_string()),
        ("sigmaK".into(), format_real(c.sigma_k)),
        ("baseSeed".into(), c.seed.to_string()),
        ("run".into(), run.to_string()),
        ("seed".into(), run_seed(c.seed, run).to_string()),
        ("timeMode".into(), c.time_mode.as_str().to_string()),
        (
            "initialSlice".into(),
            validated.settings().initial_slice.to_string(),
        ),
    ];
    if c.time_mode == TimeMode::WallClock {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        h.push(("started".into(), now.to_string()));
    }
    h
}

pub fn run_seed(base: u64, run: usize) -> u64 {
    derive_seed(base, run as u64)
}

/// Performs run `run` and streams its report to `path`.
pub fn execute_run(
    validated: &ValidatedConfig,
    run: usize,
    path: &Path,
    echo: Option<String>,
    interrupt: Option<Arc<AtomicBool>>,
) -> Result<RunResult> {
    let c = validated.config();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = ReportWriter::new(BufWriter::new(file), echo);
    let io = |e| Error::io(path, e);
    writer.header(&run_header(validated, run)).map_err(io)?;
    let mut stop = validated.stop_condition();
    stop.interrupt = interrupt;
    let portfolio = Portfolio::new(
        &validated.settings(),
        validated.problem().clone(),
        run_seed(c.seed, run),
        stop,
    )?;
    let result = portfolio.run(|sweep| writer.sweep(sweep).map_err(io))?;
    writer
        .finish(&result, c.time_mode == TimeMode::WallClock)
        .map_err(io)?;
    Ok(result)
}
