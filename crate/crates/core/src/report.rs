//! Run logs: per-sweep records, the final result, and the `PORTFOLIO_*_*.txt` file format.
//!
//! A report file is UTF-8 text:
//!
//! ```text
//! # evoport v1
//! # problemType=15<TAB>problem=ConcatenatedTrapK<TAB>stringSize=30<TAB>...
//! sweep<TAB>engine<TAB>active<TAB>slice<TAB>generations<TAB>maxGenCost<TAB>fitnessCalls<TAB>bestFitness<TAB>bestAverage<TAB>populationSizes<TAB>events<TAB>bestIndividual
//! 0<TAB>UMDA<TAB>1<TAB>10000<TAB>...
//! ...
//! # stop<TAB>targetReached
//! # best<TAB>1111...
//! # result<TAB>bestFitness=30<TAB>totalFitnessCalls=...<TAB>sweeps=...<TAB>foundAtCalls=...
//! ```
//!
//! One record per engine that was active when the sweep started. `active` is
//! the status after the sweep's deactivation pass. Reals are written with six
//! significant digits; missing values, empty lists and empty event sets are
//! written as `-`. `populationSizes` and `events` are comma-separated.
//! `bestIndividual` is filled only when that engine improved its best
//! fitness during the sweep.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::engine::EngineKind;
use crate::error::{Error, Result};
use crate::population::Individual;

pub const FORMAT_TAG: &str = "# evoport v1";

pub const COLUMNS: [&str; 12] = [
    "sweep",
    "engine",
    "active",
    "slice",
    "generations",
    "maxGenCost",
    "fitnessCalls",
    "bestFitness",
    "bestAverage",
    "populationSizes",
    "events",
    "bestIndividual",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    Deactivated,
    Improved,
    Stopped,
}

impl Event {
    fn as_str(self) -> &'static str {
        match self {
            Event::Deactivated => "deactivated",
            Event::Improved => "improved",
            Event::Stopped => "stopped",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "deactivated" => Some(Event::Deactivated),
            "improved" => Some(Event::Improved),
            "stopped" => Some(Event::Stopped),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineRecord {
    pub engine: EngineKind,
    pub active: bool,
    /// Slice this engine's turn started with.
    pub slice: u64,
    pub generations: u64,
    /// Largest single-generation cost during this turn.
    pub max_gen_cost: u64,
    pub fitness_calls: u64,
    pub best_fitness: Option<f64>,
    pub best_average: Option<f64>,
    pub population_sizes: Vec<usize>,
    pub events: Vec<Event>,
    pub best_individual: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub sweep: u64,
    pub engines: Vec<EngineRecord>,
    /// False when a stop condition cut the sweep short.
    pub complete: bool,
}

impl SweepReport {
    pub fn deactivations(&self) -> Vec<EngineKind> {
        self.engines
            .iter()
            .filter(|r| r.events.contains(&Event::Deactivated))
            .map(|r| r.engine)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    MaxFitnessCalls,
    MaxSweeps,
    MaxWallTime,
    Interrupted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::TargetReached => "targetReached",
            StopReason::MaxFitnessCalls => "maxFitnessCalls",
            StopReason::MaxSweeps => "maxSweeps",
            StopReason::MaxWallTime => "maxWallTime",
            StopReason::Interrupted => "interrupted",
        }
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            StopReason::TargetReached,
            StopReason::MaxFitnessCalls,
            StopReason::MaxSweeps,
            StopReason::MaxWallTime,
            StopReason::Interrupted,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| Error::Report(format!("unknown stop reason {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineSummary {
    pub engine: EngineKind,
    pub active: bool,
    pub deactivated_at_sweep: Option<u64>,
    pub fitness_calls: u64,
    pub generations: u64,
    pub best_fitness: Option<f64>,
    pub best_average: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub best_individual: Option<Individual>,
    pub best_fitness: Option<f64>,
    pub total_fitness_calls: u64,
    /// Total fitness calls at the end of the generation that first found `best_fitness`.
    pub found_at_calls: Option<u64>,
    pub history: Vec<SweepReport>,
    pub engines: Vec<EngineSummary>,
    pub stop_reason: StopReason,
    pub wall_time: Duration,
}

/// `x` rounded to six significant digits, in shortest round-trip form.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), format_real)
}

fn dash_join<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn record_line(sweep: u64, r: &EngineRecord) -> String {
    let events: Vec<&str> = r.events.iter().map(|e| e.as_str()).collect();
    let fields = [
        sweep.to_string(),
        r.engine.name().to_string(),
        u8::from(r.active).to_string(),
        r.slice.to_string(),
        r.generations.to_string(),
        r.max_gen_cost.to_string(),
        r.fitness_calls.to_string(),
        opt_real(r.best_fitness),
        opt_real(r.best_average),
        dash_join(&r.population_sizes),
        dash_join(&events),
        r.best_individual.clone().unwrap_or_else(|| "-".to_string()),
    ];
    fields.join("\t")
}

/// Writes one record per engine of `report` to `sink`.
pub fn write_report_line<W: Write + ?Sized>(sink: &mut W, report: &SweepReport) -> io::Result<()> {
    for r in &report.engines {
        writeln!(sink, "{}", record_line(report.sweep, r))?;
    }
    Ok(())
}

/// `PORTFOLIO_<problemType>_<runIndex>.txt` inside `dir`; if taken, `.1`, `.2`, … are
/// inserted before the extension.
pub fn output_file_name(dir: &Path, problem_type: i32, run_index: usize) -> PathBuf {
    let stem = format!("PORTFOLIO_{problem_type}_{run_index}");
    let first = dir.join(format!("{stem}.txt"));
    if !first.exists() {
        return first;
    }
    (1..)
        .map(|k| dir.join(format!("{stem}.{k}.txt")))
        .find(|p| !p.exists())
        .expect("unbounded suffixes")
}

/// Header fields, written in order as `key=value` pairs.
pub type Header = Vec<(String, String)>;

/// Streams a run's report to a sink, optionally echoing records to stdout.
pub struct ReportWriter<W: Write> {
    sink: W,
    echo: Option<String>,
}

impl<W: Write> ReportWriter<W> {
    /// `echo` is a prefix for console lines; `None` disables the console mirror.
    pub fn new(sink: W, echo: Option<String>) -> Self {
        ReportWriter { sink, echo }
    }

    fn line(&mut self, text: &str) -> io::Result<()> {
        writeln!(self.sink, "{text}")?;
        if let Some(prefix) = &self.echo {
            // One println per line keeps parallel runs' output line-atomic.
            println!("{prefix}{text}");
        }
        Ok(())
    }

    pub fn header(&mut self, fields: &Header) -> io::Result<()> {
        self.line(FORMAT_TAG)?;
        let meta: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        self.line(&format!("# {}", meta.join("\t")))?;
        self.line(&COLUMNS.join("\t"))
    }

    pub fn sweep(&mut self, report: &SweepReport) -> io::Result<()> {
        for r in &report.engines {
            self.line(&record_line(report.sweep, r))?;
        }
        Ok(())
    }

    pub fn finish(&mut self, result: &RunResult, include_wall_time: bool) -> io::Result<()> {
        self.line(&format!("# stop\t{}", result.stop_reason.as_str()))?;
        let best = result
            .best_individual
            .as_ref()
            .map_or_else(|| "-".to_string(), ToString::to_string);
        self.line(&format!("# best\t{best}"))?;
        let mut summary = format!(
            "# result\tbestFitness={}\ttotalFitnessCalls={}\tsweeps={}\tfoundAtCalls={}",
            opt_real(result.best_fitness),
            result.total_fitness_calls,
            result.history.len(),
            result
                .found_at_calls
                .map_or_else(|| "-".to_string(), |c| c.to_string()),
        );
        if include_wall_time {
            let _ = write!(
                summary,
                "\twallSeconds={}",
                format_real(result.wall_time.as_secs_f64())
            );
        }
        self.line(&summary)?;
        self.sink.flush()
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// Contents of a report file.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReport {
    pub header: Header,
    pub history: Vec<SweepReport>,
    pub stop_reason: Option<StopReason>,
    pub best_fitness: Option<f64>,
    pub total_fitness_calls: Option<u64>,
    pub found_at_calls: Option<u64>,
    pub best_individual: Option<String>,
}

fn parse_field<T: FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Report(format!("line {line}: bad {what} {s:?}")))
}

fn parse_opt<T: FromStr>(s: &str, what: &str, line: usize) -> Result<Option<T>> {
    if s == "-" {
        Ok(None)
    } else {
        parse_field(s, what, line).map(Some)
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str, line: usize) -> Result<Vec<T>> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| parse_field(x, what, line)).collect()
}

pub fn parse_report(text: &str) -> Result<ParsedReport> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, FORMAT_TAG)) => {}
        _ => return Err(Error::Report("missing format tag".into())),
    }
    let header = match lines.next() {
        Some((_, l)) if l.starts_with("# ") => l[2..]
            .split('\t')
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Report(format!("bad header field {f:?}")))
            })
            .collect::<Result<Header>>()?,
        _ => return Err(Error::Report("missing header".into())),
    };
    match lines.next() {
        Some((_, l)) if l == COLUMNS.join("\t") => {}
        _ => return Err(Error::Report("missing column header".into())),
    }

    let mut parsed = ParsedReport {
        header,
        history: Vec::new(),
        stop_reason: None,
        best_fitness: None,
        total_fitness_calls: None,
        found_at_calls: None,
        best_individual: None,
    };
    for (no, line) in lines {
        if let Some(rest) = line.strip_prefix("# ") {
            let mut parts = rest.split('\t');
            match parts.next() {
                Some("stop") => {
                    parsed.stop_reason = Some(parts.next().unwrap_or_default().parse()?);
                }
                Some("result") => {
                    for kv in parts {
                        let (k, v) = kv
                            .split_once('=')
                            .ok_or_else(|| Error::Report(format!("line {no}: bad field {kv:?}")))?;
                        match k {
                            "bestFitness" => parsed.best_fitness = parse_opt(v, k, no)?,
                            "totalFitnessCalls" => {
                                parsed.total_fitness_calls = Some(parse_field(v, k, no)?)
                            }
                            "foundAtCalls" => parsed.found_at_calls = parse_opt(v, k, no)?,
                            _ => {}
                        }
                    }
                }
                Some("best") => {
                    parsed.best_individual =
                        parse_opt::<String>(parts.next().unwrap_or("-"), "best", no)?;
                }
                _ => return Err(Error::Report(format!("line {no}: unknown footer"))),
            }
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != COLUMNS.len() {
            return Err(Error::Report(format!(
                "line {no}: expected {} fields",
                COLUMNS.len()
            )));
        }
        let sweep: u64 = parse_field(f[0], "sweep", no)?;
        let engine = EngineKind::from_name(f[1])
            .ok_or_else(|| Error::Report(format!("line {no}: unknown engine {:?}", f[1])))?;
        let events = parse_list::<String>(f[10], "events", no)?
            .iter()
            .map(|e| {
                Event::parse(e)
                    .ok_or_else(|| Error::Report(format!("line {no}: unknown event {e:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let record = EngineRecord {
            engine,
            active: match f[2] {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::Report(format!(
                        "line {no}: bad active flag {other:?}"
                    )))
                }
            },
            slice: parse_field(f[3], "slice", no)?,
            generations: parse_field(f[4], "generations", no)?,
            max_gen_cost: parse_field(f[5], "maxGenCost", no)?,
            fitness_calls: parse_field(f[6], "fitnessCalls", no)?,
            best_fitness: parse_opt(f[7], "bestFitness", no)?,
            best_average: parse_opt(f[8], "bestAverage", no)?,
            population_sizes: parse_list(f[9], "populationSizes", no)?,
            best_individual: parse_opt(f[11], "bestIndividual", no)?,
            events,
        };
        let complete = !record.events.contains(&Event::Stopped);
        match parsed.history.last_mut() {
            Some(last) if last.sweep == sweep => {
                last.complete &= complete;
                last.engines.push(record);
            }
            _ => parsed.history.push(SweepReport {
                sweep,
                engines: vec![record],
                complete,
            }),
        }
    }
    Ok(parsed)
}

pub fn read_report(path: &Path) -> Result<ParsedReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&text)
}

/// `report` with every real rounded as it is when written.
pub fn quantized(report: &SweepReport) -> SweepReport {
    let q = |x: Option<f64>| x.map(|v| format_real(v).parse::<f64>().expect("formatted real"));
    SweepReport {
        engines: report
            .engines
            .iter()
            .map(|r| EngineRecord {
                best_fitness: q(r.best_fitness),
                best_average: q(r.best_average),
                ..r.clone()
            })
            .collect(),
        ..report.clone()
    }
}
