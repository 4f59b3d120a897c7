//! The contract every parameter-less EDA offers the portfolio.

use std::fmt;
use std::time::Instant;

use crate::ecga::EcgaParams;
use crate::error::Result;
use crate::hboa::HboaParams;
use crate::paramless::LevelLadder;
use crate::population::{Individual, Population};
use crate::problems::ProblemInstance;
use crate::rng::RngStream;
use crate::umda::UmdaParams;
use crate::{ecga, hboa, umda};

/// The three engines, in increasing order of model complexity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    Umda,
    Ecga,
    Hboa,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Umda, EngineKind::Ecga, EngineKind::Hboa];

    pub fn rank(self) -> u32 {
        match self {
            EngineKind::Umda => 0,
            EngineKind::Ecga => 1,
            EngineKind::Hboa => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Umda => "UMDA",
            EngineKind::Ecga => "ECGA",
            EngineKind::Hboa => "HBOA",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cost of one generation.
///
/// `work_units` counts fitness evaluations, model-metric evaluations and
/// sampled individuals; it is fully determined by the seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenCost {
    pub wall_nanos: u64,
    pub work_units: u64,
}

/// Algorithm-specific settings.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmParams {
    Umda(UmdaParams),
    Ecga(EcgaParams),
    Hboa(HboaParams),
}

impl AlgorithmParams {
    pub fn kind(&self) -> EngineKind {
        match self {
            AlgorithmParams::Umda(_) => EngineKind::Umda,
            AlgorithmParams::Ecga(_) => EngineKind::Ecga,
            AlgorithmParams::Hboa(_) => EngineKind::Hboa,
        }
    }
}

/// Evaluation and accounting handle passed into a single generation.
pub struct GenContext<'a> {
    problem: &'a ProblemInstance,
    pub rng: &'a mut RngStream,
    evaluations: u64,
    work_units: u64,
    best: Option<Individual>,
}

impl<'a> GenContext<'a> {
    pub fn new(problem: &'a ProblemInstance, rng: &'a mut RngStream) -> Self {
        GenContext {
            problem,
            rng,
            evaluations: 0,
            work_units: 0,
            best: None,
        }
    }

    pub fn string_size(&self) -> usize {
        self.problem.string_size()
    }

    pub fn evaluate(&mut self, ind: &mut Individual) -> Result<f64> {
        let f = self.problem.compute_fitness(ind, self.rng)?;
        self.evaluations += 1;
        self.work_units += 1;
        if self
            .best
            .as_ref()
            .is_none_or(|b| f > b.fitness().unwrap_or(f64::NEG_INFINITY))
        {
            self.best = Some(ind.clone());
        }
        Ok(f)
    }

    pub fn evaluate_all(&mut self, pop: &mut Population) -> Result<()> {
        for m in pop.members_mut() {
            self.evaluate(m)?;
        }
        Ok(())
    }

    /// Adds model-building or sampling work.
    pub fn charge(&mut self, units: u64) {
        self.work_units += units;
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn work_units(&self) -> u64 {
        self.work_units
    }
}

/// One parameter-less engine: an algorithm running inside a population ladder.
#[derive(Clone, Debug)]
pub struct Engine {
    params: AlgorithmParams,
    ladder: LevelLadder,
    fitness_calls: u64,
    generations: u64,
    best_individual: Option<Individual>,
    best_average: Option<f64>,
    last_gen_cost: GenCost,
}

impl Engine {
    pub fn new(params: AlgorithmParams, ladder: LevelLadder) -> Self {
        Engine {
            params,
            ladder,
            fitness_calls: 0,
            generations: 0,
            best_individual: None,
            best_average: None,
            last_gen_cost: GenCost::default(),
        }
    }

    pub fn kind(&self) -> EngineKind {
        self.params.kind()
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn complexity_rank(&self) -> u32 {
        self.kind().rank()
    }

    pub fn params(&self) -> &AlgorithmParams {
        &self.params
    }

    pub fn ladder(&self) -> &LevelLadder {
        &self.ladder
    }

    pub fn fitness_calls(&self) -> u64 {
        self.fitness_calls
    }

    pub fn generations(&self) -> u64 {
        self.generations
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best_individual.as_ref().and_then(Individual::fitness)
    }

    pub fn best_individual(&self) -> Option<&Individual> {
        self.best_individual.as_ref()
    }

    pub fn best_average(&self) -> Option<f64> {
        self.best_average
    }

    pub fn last_gen_cost(&self) -> GenCost {
        self.last_gen_cost
    }

    #[cfg(test)]
    pub(crate) fn set_best_average_for_test(&mut self, avg: Option<f64>) {
        self.best_average = avg;
    }

    /// Runs one generation on whichever ladder level the counter selects.
    ///
    /// A level's first generation also evaluates its initial population.
    /// Afterwards the level's average is recorded and dominated or converged
    /// levels are eliminated.
    pub fn run_one_generation(
        &mut self,
        problem: &ProblemInstance,
        rng: &mut RngStream,
    ) -> Result<GenCost> {
        let started = Instant::now();
        let index = self.ladder.next_level_to_run(rng)?;
        let mut ctx = GenContext::new(problem, rng);
        let level = self.ladder.level_mut(index);
        let mut pop = std::mem::take(&mut level.pop);
        if pop.iter().any(|m| !m.is_evaluated()) {
            ctx.evaluate_all(&mut pop)?;
        }
        match &self.params {
            AlgorithmParams::Umda(p) => umda::generation(p, &mut pop, &mut ctx)?,
            AlgorithmParams::Ecga(p) => ecga::generation(p, &mut pop, &mut ctx)?,
            AlgorithmParams::Hboa(p) => hboa::generation(p, &mut pop, &mut ctx)?,
        }
        let avg = pop.average_fitness()?;
        self.ladder.level_mut(index).pop = pop;
        self.ladder.record_generation(index, avg);
        self.ladder.eliminate_dominated();

        self.fitness_calls += ctx.evaluations();
        self.generations += 1;
        let work_units = ctx.work_units();
        if let Some(best) = ctx.best.take() {
            if self
                .best_fitness()
                .is_none_or(|b| best.fitness().unwrap_or(f64::NEG_INFINITY) > b)
            {
                self.best_individual = Some(best);
            }
        }
        self.best_average = self.ladder.best_average().ok();
        let cost = GenCost {
            wall_nanos: u64::try_from(started.elapsed().as_nanos()).unwrap_or(u64::MAX),
            work_units,
        };
        self.last_gen_cost = cost;
        Ok(cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::lookup_problem;

    #[test]
    fn complexity_ranks_follow_roster_order() {
        assert_eq!(EngineKind::Umda.rank(), 0);
        assert_eq!(EngineKind::Ecga.rank(), 1);
        assert_eq!(EngineKind::Hboa.rank(), 2);
        assert_eq!(EngineKind::from_name("ECGA"), Some(EngineKind::Ecga));
    }

    #[test]
    fn context_tracks_best_and_work() {
        let problem = lookup_problem(10, 4, 0.0).unwrap();
        let mut rng = RngStream::new(3);
        let mut ctx = GenContext::new(&problem, &mut rng);
        let mut a: Individual = "1100".parse().unwrap();
        let mut b: Individual = "1110".parse().unwrap();
        ctx.evaluate(&mut a).unwrap();
        ctx.evaluate(&mut b).unwrap();
        ctx.charge(5);
        assert_eq!(ctx.evaluations(), 2);
        assert_eq!(ctx.work_units(), 7);
        assert_eq!(ctx.best.as_ref().unwrap().to_string(), "1110");
    }
}
