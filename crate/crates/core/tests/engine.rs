mod common;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use evoport::ecga::EcgaParams;
use evoport::hboa::HboaParams;
use evoport::paramless::LevelLadder;
use evoport::umda::UmdaParams;
use evoport::{AlgorithmParams, Engine, Individual, Problem, ProblemRegistry, RngStream};
use proptest::prelude::*;

/// OneMax that counts its own calls.
struct Counted {
    calls: Arc<AtomicU64>,
}

impl Problem for Counted {
    fn name(&self) -> &str {
        "CountedOneMax"
    }

    fn compute_fitness(&self, ind: &Individual) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        ind.ones() as f64
    }
}

fn counted_problem(len: usize) -> (evoport::ProblemInstance, Arc<AtomicU64>) {
    let calls = Arc::new(AtomicU64::new(0));
    let shared = Arc::clone(&calls);
    let mut reg = ProblemRegistry::new();
    reg.register(99, move |_| {
        Ok(Arc::new(Counted {
            calls: Arc::clone(&shared),
        }) as Arc<dyn Problem>)
    })
    .unwrap();
    (reg.lookup(99, len, 0.0).unwrap(), calls)
}

fn engine(params: AlgorithmParams, len: usize) -> Engine {
    Engine::new(params, LevelLadder::new(16, 4, len).unwrap())
}

#[test]
fn fresh_umda_generation_counts_initial_and_offspring_evaluations() {
    let (problem, calls) = counted_problem(8);
    let mut e = engine(AlgorithmParams::Umda(UmdaParams::default()), 8);
    let mut rng = RngStream::new(1);
    e.run_one_generation(&problem, &mut rng).unwrap();
    assert_eq!(calls.load(Ordering::Relaxed), 16 + 16);
    assert_eq!(e.fitness_calls(), 32);
    assert_eq!(e.generations(), 1);
}

#[test]
fn hboa_generation_evaluates_half_population_of_offspring() {
    let (problem, calls) = counted_problem(8);
    let mut e = engine(AlgorithmParams::Hboa(HboaParams::default()), 8);
    let mut rng = RngStream::new(2);
    e.run_one_generation(&problem, &mut rng).unwrap();
    assert_eq!(calls.load(Ordering::Relaxed), 16 + 8);
    assert_eq!(e.fitness_calls(), 24);
}

#[test]
fn identical_seeds_give_identical_work() {
    let (problem, _) = counted_problem(12);
    for params in [
        AlgorithmParams::Umda(UmdaParams::default()),
        AlgorithmParams::Ecga(EcgaParams::default()),
        AlgorithmParams::Hboa(HboaParams::default()),
    ] {
        let mut a = engine(params.clone(), 12);
        let mut b = engine(params, 12);
        let ca = a
            .run_one_generation(&problem, &mut RngStream::new(5))
            .unwrap();
        let cb = b
            .run_one_generation(&problem, &mut RngStream::new(5))
            .unwrap();
        assert_eq!(ca.work_units, cb.work_units);
        assert!(ca.work_units >= a.fitness_calls());
    }
}

fn recomputed_best_average(history: &[Vec<(usize, f64)>]) -> f64 {
    history
        .iter()
        .flatten()
        .map(|&(_, a)| a)
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn best_average_tracks_every_level_average(seed in any::<u64>(), kind in 0usize..3, gens in 1usize..30) {
        let problem = evoport::lookup_problem(15, 20, 0.0).unwrap();
        let params = match kind {
            0 => AlgorithmParams::Umda(UmdaParams::default()),
            1 => AlgorithmParams::Ecga(EcgaParams::default()),
            _ => AlgorithmParams::Hboa(HboaParams::default()),
        };
        let mut e = engine(params, 20);
        let mut rng = RngStream::new(seed);
        let mut history = Vec::new();
        let mut prev_calls = 0;
        for _ in 0..gens {
            e.run_one_generation(&problem, &mut rng).unwrap();
            history.push(
                e.ladder()
                    .levels()
                    .iter()
                    .filter_map(|l| l.last_avg_fitness.map(|a| (l.index, a)))
                    .collect::<Vec<_>>(),
            );
            prop_assert_eq!(e.best_average(), Some(recomputed_best_average(&history)));
            prop_assert!(e.fitness_calls() > prev_calls);
            prev_calls = e.fitness_calls();
            for l in e.ladder().levels() {
                prop_assert_eq!(l.size, 16 << l.index);
                prop_assert!(!l.alive || l.pop.len() == l.size);
            }
            let best = e.best_individual().unwrap();
            prop_assert_eq!(Some(problem.base_fitness(best).unwrap()), e.best_fitness());
        }
    }
}
