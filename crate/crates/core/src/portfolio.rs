//! The portfolio scheduler.
//!
//! Engines take turns in increasing complexity order. Each turn is given the
//! same slice `T` and runs whole generations until the turn's cost reaches
//! `T` (always at least one). After a sweep, `T` grows to cover the most
//! expensive single generation seen, and every engine whose best average
//! fitness is strictly below that of an active, more complex engine is
//! switched off for good.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::ecga::EcgaParams;
use crate::engine::{AlgorithmParams, Engine, EngineKind, GenCost};
use crate::error::{Error, Result};
use crate::hboa::HboaParams;
use crate::paramless::LevelLadder;
use crate::population::Individual;
use crate::problems::ProblemInstance;
use crate::report::{EngineRecord, EngineSummary, Event, RunResult, StopReason, SweepReport};
use crate::rng::RngStream;
use crate::umda::UmdaParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeMode {
    /// Deterministic work units.
    WorkUnit,
    /// Elapsed nanoseconds.
    WallClock,
}

impl TimeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeMode::WorkUnit => "workunit",
            TimeMode::WallClock => "wallclock",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "workunit" => Some(TimeMode::WorkUnit),
            "wallclock" => Some(TimeMode::WallClock),
            _ => None,
        }
    }

    pub fn cost(self, c: GenCost) -> u64 {
        match self {
            TimeMode::WorkUnit => c.work_units,
            TimeMode::WallClock => c.wall_nanos,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub slice: u64,
    pub initial_slice: u64,
    pub mode: TimeMode,
    pub sweep: u64,
}

#[derive(Clone, Debug, Default)]
pub struct StopCondition {
    pub max_fitness_calls: Option<u64>,
    pub max_sweeps: Option<u64>,
    pub target_fitness: Option<f64>,
    pub max_wall_seconds: Option<f64>,
    /// Set from outside (e.g. a signal handler) to end the run cleanly.
    pub interrupt: Option<Arc<AtomicBool>>,
}

impl StopCondition {
    pub fn is_bounded(&self) -> bool {
        self.max_fitness_calls.is_some()
            || self.max_sweeps.is_some()
            || self.target_fitness.is_some()
            || self.max_wall_seconds.is_some()
    }
}

/// Everything the scheduler needs besides the problem and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioSettings {
    pub initial_pop_size: usize,
    pub run_ratio: u32,
    pub umda: UmdaParams,
    pub ecga: EcgaParams,
    pub hboa: HboaParams,
    pub mode: TimeMode,
    /// `T0` in the units of `mode`.
    pub initial_slice: u64,
}

impl Default for PortfolioSettings {
    fn default() -> Self {
        PortfolioSettings {
            initial_pop_size: 16,
            run_ratio: 4,
            umda: UmdaParams::default(),
            ecga: EcgaParams::default(),
            hboa: HboaParams::default(),
            mode: TimeMode::WorkUnit,
            initial_slice: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PortfolioSlot {
    pub engine: Engine,
    pub active: bool,
    pub deactivated_at_sweep: Option<u64>,
    rng: RngStream,
}

impl PortfolioSlot {
    pub fn new(engine: Engine, rng: RngStream) -> Self {
        PortfolioSlot {
            engine,
            active: true,
            deactivated_at_sweep: None,
            rng,
        }
    }
}

/// Deactivates every active slot with a strictly better active slot of higher
/// rank. Returns the engines switched off, in rank order.
pub fn apply_deactivation(slots: &mut [PortfolioSlot], sweep: u64) -> Vec<EngineKind> {
    let doomed: Vec<usize> = (0..slots.len())
        .filter(|&i| {
            let si = &slots[i];
            si.active
                && slots.iter().any(|sj| {
                    sj.active
                        && sj.engine.complexity_rank() > si.engine.complexity_rank()
                        && matches!(
                            (sj.engine.best_average(), si.engine.best_average()),
                            (Some(bj), Some(bi)) if bj > bi
                        )
                })
        })
        .collect();
    doomed
        .into_iter()
        .map(|i| {
            slots[i].active = false;
            slots[i].deactivated_at_sweep = Some(sweep);
            slots[i].engine.kind()
        })
        .collect()
}

pub struct Portfolio {
    slots: Vec<PortfolioSlot>,
    schedule: Schedule,
    problem: ProblemInstance,
    stop: StopCondition,
    started: Instant,
    best: Option<Individual>,
    found_at_calls: Option<u64>,
    history: Vec<SweepReport>,
}

impl Portfolio {
    /// Three slots (UMDA, ECGA, hBOA), each with its own stream derived from `seed`.
    pub fn new(
        settings: &PortfolioSettings,
        problem: ProblemInstance,
        seed: u64,
        stop: StopCondition,
    ) -> Result<Self> {
        if settings.initial_slice == 0 {
            return Err(Error::invalid("initialSlice", "must be positive"));
        }
        let base = RngStream::new(seed);
        let slots = EngineKind::ALL
            .into_iter()
            .map(|kind| {
                let params = match kind {
                    EngineKind::Umda => AlgorithmParams::Umda(settings.umda.clone()),
                    EngineKind::Ecga => AlgorithmParams::Ecga(settings.ecga.clone()),
                    EngineKind::Hboa => AlgorithmParams::Hboa(settings.hboa.clone()),
                };
                let ladder = LevelLadder::new(
                    settings.initial_pop_size,
                    settings.run_ratio,
                    problem.string_size(),
                )?;
                Ok(PortfolioSlot::new(
                    Engine::new(params, ladder),
                    base.derive(u64::from(kind.rank())),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Portfolio {
            slots,
            schedule: Schedule {
                slice: settings.initial_slice,
                initial_slice: settings.initial_slice,
                mode: settings.mode,
                sweep: 0,
            },
            problem,
            stop,
            started: Instant::now(),
            best: None,
            found_at_calls: None,
            history: Vec::new(),
        })
    }

    pub fn slots(&self) -> &[PortfolioSlot] {
        &self.slots
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn history(&self) -> &[SweepReport] {
        &self.history
    }

    pub fn total_fitness_calls(&self) -> u64 {
        self.slots.iter().map(|s| s.engine.fitness_calls()).sum()
    }

    fn check_stop(&self, at_sweep_boundary: bool) -> Option<StopReason> {
        let s = &self.stop;
        if s.interrupt
            .as_ref()
            .is_some_and(|f| f.load(Ordering::Relaxed))
        {
            return Some(StopReason::Interrupted);
        }
        if let (Some(target), Some(best)) = (
            s.target_fitness,
            self.best.as_ref().and_then(Individual::fitness),
        ) {
            if best >= target {
                return Some(StopReason::TargetReached);
            }
        }
        if s.max_fitness_calls
            .is_some_and(|m| self.total_fitness_calls() >= m)
        {
            return Some(StopReason::MaxFitnessCalls);
        }
        if s.max_wall_seconds
            .is_some_and(|m| self.started.elapsed() >= Duration::from_secs_f64(m.max(0.0)))
        {
            return Some(StopReason::MaxWallTime);
        }
        if at_sweep_boundary && s.max_sweeps.is_some_and(|m| self.schedule.sweep >= m) {
            return Some(StopReason::MaxSweeps);
        }
        None
    }

    /// One pass over the active engines. Returns the sweep's record and the
    /// stop reason if a stop condition fired during it.
    pub fn run_sweep(&mut self) -> Result<(SweepReport, Option<StopReason>)> {
        let slice = self.schedule.slice;
        let sweep = self.schedule.sweep;
        let mode = self.schedule.mode;
        let mut records = Vec::new();
        let mut stop = None;
        let mut largest = 0u64;
        for i in 0..self.slots.len() {
            if !self.slots[i].active {
                continue;
            }
            let best_before = self.slots[i].engine.best_fitness();
            let mut spent = 0u64;
            let mut generations = 0u64;
            let mut max_gen_cost = 0u64;
            while stop.is_none() {
                let slot = &mut self.slots[i];
                let cost = mode.cost(
                    slot.engine
                        .run_one_generation(&self.problem, &mut slot.rng)?,
                );
                spent = spent.saturating_add(cost);
                generations += 1;
                max_gen_cost = max_gen_cost.max(cost);
                self.absorb_best(i);
                stop = self.check_stop(false);
                if spent >= slice {
                    break;
                }
            }
            largest = largest.max(max_gen_cost);
            let engine = &self.slots[i].engine;
            let improved = engine
                .best_fitness()
                .is_some_and(|b| best_before.is_none_or(|p| b > p));
            let mut events = Vec::new();
            if improved {
                events.push(Event::Improved);
            }
            records.push(EngineRecord {
                engine: engine.kind(),
                active: true,
                slice,
                generations,
                max_gen_cost,
                fitness_calls: engine.fitness_calls(),
                best_fitness: engine.best_fitness(),
                best_average: engine.best_average(),
                population_sizes: engine.ladder().live_sizes(),
                events,
                best_individual: improved
                    .then(|| engine.best_individual().map(ToString::to_string))
                    .flatten(),
            });
        }
        self.schedule.slice = self.schedule.slice.max(largest);
        if stop.is_none() {
            for kind in apply_deactivation(&mut self.slots, sweep) {
                if let Some(r) = records.iter_mut().find(|r| r.engine == kind) {
                    r.active = false;
                    r.events.push(Event::Deactivated);
                }
            }
        } else {
            records
                .iter_mut()
                .for_each(|r| r.events.push(Event::Stopped));
        }
        self.schedule.sweep += 1;
        let report = SweepReport {
            sweep,
            engines: records,
            complete: stop.is_none(),
        };
        self.history.push(report.clone());
        Ok((report, stop))
    }

    fn absorb_best(&mut self, slot: usize) {
        let Some(candidate) = self.slots[slot].engine.best_individual() else {
            return;
        };
        let f = candidate.fitness().unwrap_or(f64::NEG_INFINITY);
        if self
            .best
            .as_ref()
            .is_none_or(|b| f > b.fitness().unwrap_or(f64::NEG_INFINITY))
        {
            self.best = Some(candidate.clone());
            self.found_at_calls = Some(self.total_fitness_calls());
        }
    }

    /// Sweeps until a stop condition fires, handing each sweep to `observer`.
    pub fn run(
        mut self,
        mut observer: impl FnMut(&SweepReport) -> Result<()>,
    ) -> Result<RunResult> {
        let reason = loop {
            if let Some(r) = self.check_stop(true) {
                break r;
            }
            let (report, stop) = self.run_sweep()?;
            observer(&report)?;
            if let Some(r) = stop {
                break r;
            }
        };
        Ok(self.into_result(reason))
    }

    fn into_result(self, stop_reason: StopReason) -> RunResult {
        let total_fitness_calls = self.total_fitness_calls();
        let engines = self
            .slots
            .iter()
            .map(|s| EngineSummary {
                engine: s.engine.kind(),
                active: s.active,
                deactivated_at_sweep: s.deactivated_at_sweep,
                fitness_calls: s.engine.fitness_calls(),
                generations: s.engine.generations(),
                best_fitness: s.engine.best_fitness(),
                best_average: s.engine.best_average(),
            })
            .collect();
        RunResult {
            best_fitness: self.best.as_ref().and_then(Individual::fitness),
            best_individual: self.best,
            total_fitness_calls,
            found_at_calls: self.found_at_calls,
            history: self.history,
            engines,
            stop_reason,
            wall_time: self.started.elapsed(),
        }
    }
}

/// Runs the full portfolio on `problem` until `stop` fires.
pub fn run_portfolio(
    settings: &PortfolioSettings,
    problem: &ProblemInstance,
    seed: u64,
    stop: StopCondition,
) -> Result<RunResult> {
    Portfolio::new(settings, problem.clone(), seed, stop)?.run(|_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::lookup_problem;

    fn slots_with(avgs: [Option<f64>; 3]) -> Vec<PortfolioSlot> {
        let problem = lookup_problem(10, 6, 0.0).unwrap();
        let mut p = Portfolio::new(
            &PortfolioSettings::default(),
            problem.clone(),
            1,
            StopCondition::default(),
        )
        .unwrap();
        for s in &mut p.slots {
            s.engine.run_one_generation(&problem, &mut s.rng).unwrap();
        }
        let mut slots = p.slots;
        for (s, a) in slots.iter_mut().zip(avgs) {
            s.engine.set_best_average_for_test(a);
        }
        slots
    }

    #[test]
    fn ties_survive() {
        let mut slots = slots_with([Some(5.0), Some(5.0), Some(4.0)]);
        assert!(apply_deactivation(&mut slots, 0).is_empty());
    }

    #[test]
    fn dominated_simple_engine_goes() {
        let mut slots = slots_with([Some(4.0), Some(5.0), Some(3.0)]);
        assert_eq!(apply_deactivation(&mut slots, 7), vec![EngineKind::Umda]);
        assert!(!slots[0].active);
        assert_eq!(slots[0].deactivated_at_sweep, Some(7));
        // Permanent: nothing changes on a second pass.
        assert!(apply_deactivation(&mut slots, 8).is_empty());
        assert_eq!(slots[0].deactivated_at_sweep, Some(7));
    }

    #[test]
    fn most_complex_engine_never_goes() {
        let mut slots = slots_with([Some(9.0), Some(8.0), Some(1.0)]);
        apply_deactivation(&mut slots, 0);
        assert!(slots[2].active);
        assert!(slots[0].active && slots[1].active);
        let mut slots = slots_with([Some(1.0), Some(2.0), Some(3.0)]);
        assert_eq!(
            apply_deactivation(&mut slots, 0),
            vec![EngineKind::Umda, EngineKind::Ecga]
        );
        assert!(slots[2].active);
    }

    #[test]
    fn zero_sweeps_returns_immediately() {
        let problem = lookup_problem(10, 20, 0.0).unwrap();
        let stop = StopCondition {
            max_sweeps: Some(0),
            ..Default::default()
        };
        let r = run_portfolio(&PortfolioSettings::default(), &problem, 3, stop).unwrap();
        assert!(r.history.is_empty());
        assert_eq!(r.total_fitness_calls, 0);
        assert_eq!(r.stop_reason, StopReason::MaxSweeps);
    }

    #[test]
    fn interrupt_stops_cleanly() {
        let problem = lookup_problem(10, 20, 0.0).unwrap();
        let flag = Arc::new(AtomicBool::new(true));
        let stop = StopCondition {
            interrupt: Some(flag),
            ..Default::default()
        };
        let r = run_portfolio(&PortfolioSettings::default(), &problem, 3, stop).unwrap();
        assert_eq!(r.stop_reason, StopReason::Interrupted);
    }

    #[test]
    fn slice_grows_to_cover_largest_generation() {
        let problem = lookup_problem(15, 30, 0.0).unwrap();
        let settings = PortfolioSettings {
            initial_slice: 1,
            ..Default::default()
        };
        let stop = StopCondition {
            max_sweeps: Some(6),
            ..Default::default()
        };
        let mut p = Portfolio::new(&settings, problem, 5, stop).unwrap();
        let mut seen_max = 0;
        for sweep in 0..6 {
            let before = p.schedule().slice;
            let (report, _) = p.run_sweep().unwrap();
            for r in &report.engines {
                assert_eq!(r.slice, before);
                assert!(r.generations >= 1);
                if sweep == 0 {
                    // A one-unit slice lets every turn run exactly one generation.
                    assert_eq!(r.generations, 1);
                }
                seen_max = seen_max.max(r.max_gen_cost);
            }
            assert!(p.schedule().slice >= before);
            assert!(p.schedule().slice >= seen_max);
        }
    }
}
