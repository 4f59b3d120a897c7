//! The five `key = value` parameter files.
//!
//! Grammar, per line:
//!
//! ```text
//! line  := ws* [ key ws* '=' ws* value ws* ] [ '#' comment ]
//! key   := [A-Za-z][A-Za-z0-9_]*
//! value := any non-empty text without '#'
//! ```
//!
//! Blank and comment-only lines are ignored. A key may appear at most once
//! per file, and only keys known to that file are accepted. Missing keys take
//! their defaults, so empty files give a runnable configuration. Values set on
//! the command line override the files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::ecga::EcgaParams;
use crate::error::{Error, Result};
use crate::hboa::{HboaParams, RtrWindow};
use crate::portfolio::{PortfolioSettings, StopCondition, TimeMode};
use crate::problems::{ProblemInstance, ProblemRegistry, ProblemSpec, DEFAULT_TRAP_K};
use crate::umda::UmdaParams;

pub const PORT_FILE: &str = "PortParameters.txt";
pub const PAR_FILE: &str = "ParParameters.txt";
pub const UMDA_FILE: &str = "UMDAParameters.txt";
pub const ECGA_FILE: &str = "ECGAParameters.txt";
pub const HBOA_FILE: &str = "HBOAParameters.txt";

pub const PORT_KEYS: &[&str] = &[
    "problemType",
    "stringSize",
    "sigmaK",
    "trapK",
    "nRuns",
    "seed",
    "timeMode",
    "initialSliceWork",
    "initialSliceMillis",
    "maxFitnessCalls",
    "maxSweeps",
    "targetFitness",
    "maxWallSeconds",
    "outputDir",
    "parFile",
    "umdaFile",
    "ecgaFile",
    "hboaFile",
];
pub const PAR_KEYS: &[&str] = &["initialPopSize", "runRatio"];
pub const UMDA_KEYS: &[&str] = &["tournamentSize", "eliteCount"];
pub const ECGA_KEYS: &[&str] = &["tournamentSize", "maxGroupSize", "eliteCount"];
pub const HBOA_KEYS: &[&str] = &["tournamentSize", "offspringFraction", "rtrWindow"];

/// Parsed contents of one file: key to (raw value, line number).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    path: String,
    entries: BTreeMap<String, (String, usize)>,
}

fn is_key(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn nearest<'a>(key: &str, known: &[&'a str]) -> Option<&'a str> {
    known
        .iter()
        .map(|k| {
            (
                strsim::levenshtein(&key.to_ascii_lowercase(), &k.to_ascii_lowercase()),
                *k,
            )
        })
        .min()
        .map(|(_, k)| k)
}

impl ConfigMap {
    /// Parses `text`; `path` only labels error messages.
    pub fn parse(text: &str, path: &str, known: &[&str]) -> Result<Self> {
        let err = |line: usize, message: String| Error::Config {
            path: path.to_string(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !is_key(key) {
                return Err(err(line, format!("invalid key {key:?}")));
            }
            if value.is_empty() {
                return Err(err(line, format!("{key}: missing value")));
            }
            if !known.contains(&key) {
                let hint = nearest(key, known)
                    .map_or_else(String::new, |k| format!("; did you mean `{k}`?"));
                return Err(err(line, format!("unknown key `{key}`{hint}")));
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(err(
                    line,
                    format!("duplicate key `{key}` (first set on line {first})"),
                ));
            }
            entries.insert(key.to_string(), (value.to_string(), line));
        }
        Ok(ConfigMap {
            path: path.to_string(),
            entries,
        })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Typed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get_with(key, |v| v.parse().ok())
    }

    fn get_with<T>(&self, key: &str, parse: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        let Some((value, line)) = self.entries.get(key) else {
            return Ok(None);
        };
        parse(value).map(Some).ok_or_else(|| Error::Config {
            path: self.path.clone(),
            line: *line,
            message: format!("{key}: cannot parse {value:?} as {}", type_label::<T>()),
        })
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn set_opt<T: FromStr>(&self, key: &str, slot: &mut Option<T>) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = Some(v);
        }
        Ok(())
    }
}

fn type_label<T>() -> &'static str {
    let name = std::any::type_name::<T>();
    if name.contains("f64") {
        "a real number"
    } else if name.contains("i32") {
        "an integer"
    } else if name.contains("u64") || name.contains("usize") || name.contains("u32") {
        "a non-negative integer"
    } else if name.contains("TimeMode") {
        "`workunit` or `wallclock`"
    } else if name.contains("RtrWindow") {
        "`auto` or a non-negative integer"
    } else {
        "a value"
    }
}

pub fn parse_config_file(path: &Path, known: &[&str]) -> Result<ConfigMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ConfigMap::parse(&text, &path.display().to_string(), known)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioConfig {
    pub problem_type: i32,
    pub string_size: usize,
    pub sigma_k: f64,
    pub trap_k: usize,
    pub runs: usize,
    pub seed: u64,
    pub time_mode: TimeMode,
    pub initial_slice_work: u64,
    pub initial_slice_millis: u64,
    pub max_fitness_calls: Option<u64>,
    pub max_sweeps: Option<u64>,
    pub target_fitness: Option<f64>,
    pub max_wall_seconds: Option<f64>,
    pub output_dir: PathBuf,
    pub par_file: PathBuf,
    pub umda_file: PathBuf,
    pub ecga_file: PathBuf,
    pub hboa_file: PathBuf,
    pub initial_pop_size: usize,
    pub run_ratio: u32,
    pub umda: UmdaParams,
    pub ecga: EcgaParams,
    pub hboa: HboaParams,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        PortfolioConfig {
            problem_type: 10,
            string_size: 50,
            sigma_k: 0.0,
            trap_k: DEFAULT_TRAP_K,
            runs: 1,
            seed: 1,
            time_mode: TimeMode::WorkUnit,
            initial_slice_work: 10_000,
            initial_slice_millis: 100,
            max_fitness_calls: None,
            max_sweeps: None,
            target_fitness: None,
            max_wall_seconds: None,
            output_dir: PathBuf::from("."),
            par_file: PathBuf::from(PAR_FILE),
            umda_file: PathBuf::from(UMDA_FILE),
            ecga_file: PathBuf::from(ECGA_FILE),
            hboa_file: PathBuf::from(HBOA_FILE),
            initial_pop_size: 16,
            run_ratio: 4,
            umda: UmdaParams::default(),
            ecga: EcgaParams::default(),
            hboa: HboaParams::default(),
        }
    }
}

impl FromStr for TimeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TimeMode::parse(s).ok_or_else(|| Error::invalid("timeMode", format!("unknown mode {s:?}")))
    }
}

impl FromStr for RtrWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(RtrWindow::Auto);
        }
        s.parse().map(RtrWindow::Fixed).map_err(|_| {
            Error::invalid(
                "rtrWindow",
                format!("expected `auto` or an integer, got {s:?}"),
            )
        })
    }
}

fn rtr_text(w: RtrWindow) -> String {
    match w {
        RtrWindow::Auto => "auto".into(),
        RtrWindow::Fixed(n) => n.to_string(),
    }
}

/// Text of all five files.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFiles {
    pub port: String,
    pub par: String,
    pub umda: String,
    pub ecga: String,
    pub hboa: String,
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

impl PortfolioConfig {
    fn apply_port(&mut self, m: &ConfigMap) -> Result<()> {
        m.set("problemType", &mut self.problem_type)?;
        m.set("stringSize", &mut self.string_size)?;
        m.set("sigmaK", &mut self.sigma_k)?;
        m.set("trapK", &mut self.trap_k)?;
        m.set("nRuns", &mut self.runs)?;
        m.set("seed", &mut self.seed)?;
        if let Some(mode) = m.get_with("timeMode", TimeMode::parse)? {
            self.time_mode = mode;
        }
        m.set("initialSliceWork", &mut self.initial_slice_work)?;
        m.set("initialSliceMillis", &mut self.initial_slice_millis)?;
        m.set_opt("maxFitnessCalls", &mut self.max_fitness_calls)?;
        m.set_opt("maxSweeps", &mut self.max_sweeps)?;
        m.set_opt("targetFitness", &mut self.target_fitness)?;
        m.set_opt("maxWallSeconds", &mut self.max_wall_seconds)?;
        m.set("outputDir", &mut self.output_dir)?;
        m.set("parFile", &mut self.par_file)?;
        m.set("umdaFile", &mut self.umda_file)?;
        m.set("ecgaFile", &mut self.ecga_file)?;
        m.set("hboaFile", &mut self.hboa_file)
    }

    fn apply_par(&mut self, m: &ConfigMap) -> Result<()> {
        m.set("initialPopSize", &mut self.initial_pop_size)?;
        m.set("runRatio", &mut self.run_ratio)
    }

    fn apply_umda(&mut self, m: &ConfigMap) -> Result<()> {
        m.set("tournamentSize", &mut self.umda.tournament_size)?;
        m.set("eliteCount", &mut self.umda.elite_count)
    }

    fn apply_ecga(&mut self, m: &ConfigMap) -> Result<()> {
        m.set("tournamentSize", &mut self.ecga.tournament_size)?;
        m.set("maxGroupSize", &mut self.ecga.max_group_size)?;
        m.set("eliteCount", &mut self.ecga.elite_count)
    }

    fn apply_hboa(&mut self, m: &ConfigMap) -> Result<()> {
        m.set("tournamentSize", &mut self.hboa.tournament_size)?;
        m.set("offspringFraction", &mut self.hboa.offspring_fraction)?;
        if let Some(w) = m.get_with("rtrWindow", |v| v.parse().ok())? {
            self.hboa.rtr_window = w;
        }
        Ok(())
    }

    /// Builds a configuration from file texts; empty texts mean all defaults.
    pub fn from_files(files: &ConfigFiles) -> Result<Self> {
        let mut c = PortfolioConfig::default();
        c.apply_port(&ConfigMap::parse(&files.port, PORT_FILE, PORT_KEYS)?)?;
        c.apply_par(&ConfigMap::parse(&files.par, PAR_FILE, PAR_KEYS)?)?;
        c.apply_umda(&ConfigMap::parse(&files.umda, UMDA_FILE, UMDA_KEYS)?)?;
        c.apply_ecga(&ConfigMap::parse(&files.ecga, ECGA_FILE, ECGA_KEYS)?)?;
        c.apply_hboa(&ConfigMap::parse(&files.hboa, HBOA_FILE, HBOA_KEYS)?)?;
        Ok(c)
    }

    /// Loads the portfolio file at `path` and the four algorithm files it names.
    ///
    /// Algorithm files are resolved relative to the portfolio file's directory.
    /// A missing algorithm file means defaults unless the portfolio file named
    /// it explicitly.
    pub fn load(path: &Path) -> Result<Self> {
        let port = parse_config_file(path, PORT_KEYS)?;
        let mut c = PortfolioConfig::default();
        c.apply_port(&port)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let parts: [(&str, PathBuf, &[&str]); 4] = [
            ("parFile", c.par_file.clone(), PAR_KEYS),
            ("umdaFile", c.umda_file.clone(), UMDA_KEYS),
            ("ecgaFile", c.ecga_file.clone(), ECGA_KEYS),
            ("hboaFile", c.hboa_file.clone(), HBOA_KEYS),
        ];
        for (key, file, known) in parts {
            let full = base.join(&file);
            if !full.exists() && !port.contains(key) {
                continue;
            }
            let m = parse_config_file(&full, known)?;
            match key {
                "parFile" => c.apply_par(&m)?,
                "umdaFile" => c.apply_umda(&m)?,
                "ecgaFile" => c.apply_ecga(&m)?,
                _ => c.apply_hboa(&m)?,
            }
        }
        Ok(c)
    }

    pub fn to_files(&self) -> ConfigFiles {
        let mut port = String::from("# Portfolio settings\n");
        kv(&mut port, "problemType", self.problem_type);
        kv(&mut port, "stringSize", self.string_size);
        kv(&mut port, "sigmaK", self.sigma_k);
        kv(&mut port, "trapK", self.trap_k);
        kv(&mut port, "nRuns", self.runs);
        kv(&mut port, "seed", self.seed);
        kv(&mut port, "timeMode", self.time_mode.as_str());
        kv(&mut port, "initialSliceWork", self.initial_slice_work);
        kv(&mut port, "initialSliceMillis", self.initial_slice_millis);
        if let Some(v) = self.max_fitness_calls {
            kv(&mut port, "maxFitnessCalls", v);
        }
        if let Some(v) = self.max_sweeps {
            kv(&mut port, "maxSweeps", v);
        }
        if let Some(v) = self.target_fitness {
            kv(&mut port, "targetFitness", v);
        }
        if let Some(v) = self.max_wall_seconds {
            kv(&mut port, "maxWallSeconds", v);
        }
        kv(&mut port, "outputDir", self.output_dir.display());
        kv(&mut port, "parFile", self.par_file.display());
        kv(&mut port, "umdaFile", self.umda_file.display());
        kv(&mut port, "ecgaFile", self.ecga_file.display());
        kv(&mut port, "hboaFile", self.hboa_file.display());

        let mut par = String::from("# Population sizing\n");
        kv(&mut par, "initialPopSize", self.initial_pop_size);
        kv(&mut par, "runRatio", self.run_ratio);

        let mut umda = String::new();
        kv(&mut umda, "tournamentSize", self.umda.tournament_size);
        kv(&mut umda, "eliteCount", self.umda.elite_count);

        let mut ecga = String::new();
        kv(&mut ecga, "tournamentSize", self.ecga.tournament_size);
        kv(&mut ecga, "maxGroupSize", self.ecga.max_group_size);
        kv(&mut ecga, "eliteCount", self.ecga.elite_count);

        let mut hboa = String::new();
        kv(&mut hboa, "tournamentSize", self.hboa.tournament_size);
        kv(&mut hboa, "offspringFraction", self.hboa.offspring_fraction);
        kv(&mut hboa, "rtrWindow", rtr_text(self.hboa.rtr_window));

        ConfigFiles {
            port,
            par,
            umda,
            ecga,
            hboa,
        }
    }

    /// Writes all five files into `dir`, returning the portfolio file's path.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf> {
        let files = self.to_files();
        let write = |name: &Path, text: &str| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        write(Path::new(PORT_FILE), &files.port)?;
        write(&self.par_file, &files.par)?;
        write(&self.umda_file, &files.umda)?;
        write(&self.ecga_file, &files.ecga)?;
        write(&self.hboa_file, &files.hboa)?;
        Ok(dir.join(PORT_FILE))
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.runs {
            self.runs = v;
        }
        if let Some(v) = o.max_fitness_calls {
            self.max_fitness_calls = Some(v);
        }
        if let Some(v) = o.target_fitness {
            self.target_fitness = Some(v);
        }
        if let Some(v) = o.max_sweeps {
            self.max_sweeps = Some(v);
        }
        if let Some(v) = o.time_mode {
            self.time_mode = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec::new(self.problem_type, self.string_size, self.sigma_k).with_trap_k(self.trap_k)
    }

    pub fn validate(self, registry: &ProblemRegistry) -> Result<ValidatedConfig> {
        let check = |ok: bool, key: &'static str, message: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation {
                    key,
                    message: message.to_string(),
                })
            }
        };
        check(self.string_size >= 1, "stringSize", "must be at least 1")?;
        check(
            self.sigma_k.is_finite() && self.sigma_k >= 0.0,
            "sigmaK",
            "must be a finite value >= 0",
        )?;
        check(self.trap_k >= 1, "trapK", "must be at least 1")?;
        check(self.runs >= 1, "nRuns", "must be at least 1")?;
        check(
            self.initial_slice_work >= 1,
            "initialSliceWork",
            "must be at least 1",
        )?;
        check(
            self.initial_slice_millis >= 1,
            "initialSliceMillis",
            "must be at least 1",
        )?;
        check(
            self.max_wall_seconds
                .is_none_or(|s| s.is_finite() && s >= 0.0),
            "maxWallSeconds",
            "must be a finite value >= 0",
        )?;
        check(
            self.initial_pop_size >= 2,
            "initialPopSize",
            "must be at least 2",
        )?;
        check(self.run_ratio >= 2, "runRatio", "must be at least 2")?;
        check(
            self.umda.tournament_size >= 1,
            "tournamentSize",
            "UMDA tournament size must be at least 1",
        )?;
        check(
            self.ecga.tournament_size >= 1,
            "tournamentSize",
            "ECGA tournament size must be at least 1",
        )?;
        check(
            self.hboa.tournament_size >= 1,
            "tournamentSize",
            "hBOA tournament size must be at least 1",
        )?;
        check(
            self.ecga.max_group_size >= 1,
            "maxGroupSize",
            "must be at least 1",
        )?;
        check(
            self.hboa.offspring_fraction > 0.0 && self.hboa.offspring_fraction <= 1.0,
            "offspringFraction",
            "must lie in (0, 1]",
        )?;
        check(
            self.hboa.rtr_window != RtrWindow::Fixed(0),
            "rtrWindow",
            "must be `auto` or at least 1",
        )?;
        let problem = registry.lookup_spec(&self.problem_spec())?;
        Ok(ValidatedConfig {
            config: self,
            problem,
        })
    }
}

/// Command-line values that take precedence over the files.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub max_fitness_calls: Option<u64>,
    pub target_fitness: Option<f64>,
    pub max_sweeps: Option<u64>,
    pub time_mode: Option<TimeMode>,
    pub output_dir: Option<PathBuf>,
}

/// A configuration whose problem has been resolved.
#[derive(Clone)]
pub struct ValidatedConfig {
    config: PortfolioConfig,
    problem: ProblemInstance,
}

impl ValidatedConfig {
    pub fn config(&self) -> &PortfolioConfig {
        &self.config
    }

    pub fn problem(&self) -> &ProblemInstance {
        &self.problem
    }

    pub fn settings(&self) -> PortfolioSettings {
        let c = &self.config;
        PortfolioSettings {
            initial_pop_size: c.initial_pop_size,
            run_ratio: c.run_ratio,
            umda: c.umda.clone(),
            ecga: c.ecga.clone(),
            hboa: c.hboa.clone(),
            mode: c.time_mode,
            initial_slice: match c.time_mode {
                TimeMode::WorkUnit => c.initial_slice_work,
                TimeMode::WallClock => c.initial_slice_millis.saturating_mul(1_000_000),
            },
        }
    }

    pub fn stop_condition(&self) -> StopCondition {
        let c = &self.config;
        StopCondition {
            max_fitness_calls: c.max_fitness_calls,
            max_sweeps: c.max_sweeps,
            target_fitness: c.target_fitness,
            max_wall_seconds: c.max_wall_seconds,
            interrupt: None,
        }
    }
}
