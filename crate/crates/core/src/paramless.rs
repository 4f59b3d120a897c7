//! Parameter-less population sizing.
//!
//! An engine never picks a population size. It keeps a ladder of populations
//! whose sizes double from one level to the next and interleaves their
//! generations with a base-`m` counter: level `i` runs `m` times for every
//! run of level `i + 1`. Smaller levels are dropped once a larger one does at
//! least as well on average, or once they converge.

use rand::Rng;

use crate::error::{Error, Result};
use crate::population::Population;

/// One rung of the ladder.
#[derive(Clone, Debug)]
pub struct PopulationLevel {
    pub index: usize,
    pub size: usize,
    pub pop: Population,
    pub generations: u64,
    pub last_avg_fitness: Option<f64>,
    pub alive: bool,
}

impl PopulationLevel {
    /// True until the initial population has been evaluated.
    pub fn is_fresh(&self) -> bool {
        self.pop.iter().any(|m| !m.is_evaluated())
    }
}

#[derive(Clone, Debug)]
pub struct LevelLadder {
    levels: Vec<PopulationLevel>,
    /// Runs of each level since the next level last ran.
    counter: Vec<u32>,
    initial_size: usize,
    run_ratio: u32,
    string_size: usize,
    best_average: Option<f64>,
}

impl LevelLadder {
    pub fn new(initial_size: usize, run_ratio: u32, string_size: usize) -> Result<Self> {
        if initial_size == 0 {
            return Err(Error::invalid("initialPopSize", "must be at least 1"));
        }
        if run_ratio < 2 {
            return Err(Error::invalid(
                "runRatio",
                format!("must be at least 2, got {run_ratio}"),
            ));
        }
        if string_size == 0 {
            return Err(Error::ZeroStringSize);
        }
        Ok(LevelLadder {
            levels: Vec::new(),
            counter: Vec::new(),
            initial_size,
            run_ratio,
            string_size,
            best_average: None,
        })
    }

    pub fn levels(&self) -> &[PopulationLevel] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> &PopulationLevel {
        &self.levels[index]
    }

    pub fn level_mut(&mut self, index: usize) -> &mut PopulationLevel {
        &mut self.levels[index]
    }

    pub fn initial_size(&self) -> usize {
        self.initial_size
    }

    pub fn run_ratio(&self) -> u32 {
        self.run_ratio
    }

    /// Size of level `index`: `N0 * 2^index`.
    pub fn size_of(&self, index: usize) -> usize {
        self.initial_size << index
    }

    /// Sizes of live levels in ascending order.
    pub fn live_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .filter(|l| l.alive)
            .map(|l| l.size)
            .collect()
    }

    /// Advances the counter and returns the index of the level to run next.
    ///
    /// The highest level whose lower neighbour has used up its `m` runs is
    /// selected, or level 0 if there is none. Dead levels count as saturated
    /// counter digits, so the smallest live level plays the role of level 0.
    /// Selecting an index past the end of the ladder creates a fresh, randomly
    /// initialized level there.
    pub fn next_level_to_run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let m = self.run_ratio;
        let saturated = |j: usize| !self.levels[j].alive || self.counter[j] >= m;
        let i = (1..=self.levels.len())
            .rev()
            .find(|&i| saturated(i - 1))
            .unwrap_or(0);
        if i == self.levels.len() {
            let size = self.size_of(i);
            self.levels.push(PopulationLevel {
                index: i,
                size,
                pop: Population::random(size, self.string_size, rng)?,
                generations: 0,
                last_avg_fitness: None,
                alive: true,
            });
            self.counter.push(0);
        }
        for digit in &mut self.counter[..i] {
            *digit = 0;
        }
        self.counter[i] += 1;
        Ok(i)
    }

    /// Records a completed generation on `index` with the population's average fitness.
    pub fn record_generation(&mut self, index: usize, avg: f64) {
        let level = &mut self.levels[index];
        level.generations += 1;
        level.last_avg_fitness = Some(avg);
        self.best_average = Some(self.best_average.map_or(avg, |b| b.max(avg)));
    }

    /// Kills every live level dominated by a larger live level (ties favour the
    /// larger) and every live level whose population has converged. Returns the
    /// killed indices in ascending order.
    pub fn eliminate_dominated(&mut self) -> Vec<usize> {
        let mut killed = Vec::new();
        // Best average among live larger levels, scanning from the top.
        let mut best_above: Option<f64> = None;
        for level in self.levels.iter_mut().rev() {
            if !level.alive {
                continue;
            }
            let avg = level.last_avg_fitness;
            let dominated = matches!((avg, best_above), (Some(a), Some(b)) if b >= a);
            let converged = level.generations > 0 && level.pop.is_converged();
            if let Some(a) = avg {
                best_above = Some(best_above.map_or(a, |b| b.max(a)));
            }
            if dominated || converged {
                level.alive = false;
                level.pop = Population::default();
                killed.push(level.index);
            }
        }
        killed.reverse();
        killed
    }

    /// Running maximum of every level's average fitness over the whole run.
    pub fn best_average(&self) -> Result<f64> {
        self.best_average.ok_or(Error::NoGenerations)
    }
}
