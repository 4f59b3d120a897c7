//! Univariate Marginal Distribution Algorithm.

use rand::Rng;

use crate::engine::GenContext;
use crate::error::{Error, Result};
use crate::population::{Individual, Population};

#[derive(Clone, Debug, PartialEq)]
pub struct UmdaParams {
    pub tournament_size: usize,
    /// Best parents carried into the next generation.
    pub elite_count: usize,
}

impl Default for UmdaParams {
    fn default() -> Self {
        UmdaParams {
            tournament_size: 2,
            elite_count: 1,
        }
    }
}

/// Per-locus probability of a one.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalModel {
    pub p: Vec<f64>,
}

/// Member of `contestants` with maximal fitness; lowest member index on ties.
pub fn tournament_winner(pop: &Population, contestants: &[usize]) -> Result<usize> {
    let mut winner: Option<(usize, f64)> = None;
    for &c in contestants {
        let f = pop
            .get(c)
            .fitness()
            .ok_or(Error::Unevaluated { index: c })?;
        winner = match winner {
            Some((w, wf)) if wf > f || (wf == f && w < c) => Some((w, wf)),
            _ => Some((c, f)),
        };
    }
    winner.map(|(w, _)| w).ok_or(Error::EmptyPopulation)
}

/// `count` winners of independent `s`-ary tournaments. Contestants are drawn
/// uniformly with replacement.
pub fn select_tournament<R: Rng + ?Sized>(
    pop: &Population,
    s: usize,
    count: usize,
    rng: &mut R,
) -> Result<Population> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if s < 1 {
        return Err(Error::invalid("tournamentSize", "must be at least 1"));
    }
    let n = pop.len();
    let mut contestants = vec![0; s];
    let mut winners = Vec::with_capacity(count);
    for _ in 0..count {
        for c in contestants.iter_mut() {
            *c = rng.random_range(0..n);
        }
        winners.push(pop.get(tournament_winner(pop, &contestants)?).clone());
    }
    Population::new(winners)
}

pub fn build_marginals(selected: &Population) -> Result<MarginalModel> {
    if selected.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut ones = vec![0usize; selected.string_size()];
    for m in selected.iter() {
        for (count, &b) in ones.iter_mut().zip(m.bits()) {
            *count += usize::from(b);
        }
    }
    let n = selected.len() as f64;
    Ok(MarginalModel {
        p: ones.into_iter().map(|c| c as f64 / n).collect(),
    })
}

pub fn sample_marginals<R: Rng + ?Sized>(
    model: &MarginalModel,
    count: usize,
    rng: &mut R,
) -> Population {
    let members = (0..count)
        .map(|_| {
            let bits = model
                .p
                .iter()
                .map(|&p| u8::from(rng.random::<f64>() < p))
                .collect();
            Individual::from_bits_unchecked(bits)
        })
        .collect();
    Population::new(members).expect("equal-length samples")
}

/// Selection, marginal estimation, full resampling, elitist replacement.
pub(crate) fn generation(
    params: &UmdaParams,
    pop: &mut Population,
    ctx: &mut GenContext<'_>,
) -> Result<()> {
    let n = pop.len();
    let selected = select_tournament(pop, params.tournament_size, n, ctx.rng)?;
    let model = build_marginals(&selected)?;
    let mut offspring = sample_marginals(&model, n, ctx.rng);
    ctx.charge(n as u64);
    ctx.evaluate_all(&mut offspring)?;
    offspring.keep_elites(pop, params.elite_count)?;
    *pop = offspring;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn pop_with(fits: &[f64]) -> Population {
        let members = fits
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let mut ind = Individual::new(vec![(i % 2) as u8, 1]).unwrap();
                ind.set_fitness(f);
                ind
            })
            .collect();
        Population::new(members).unwrap()
    }

    fn pop_bits(rows: &[&str]) -> Population {
        Population::new(rows.iter().map(|r| r.parse().unwrap()).collect()).unwrap()
    }

    #[test]
    fn forced_binary_tournament() {
        let pop = pop_with(&[1.0, 9.0]);
        assert_eq!(tournament_winner(&pop, &[0, 1]).unwrap(), 1);
        assert_eq!(tournament_winner(&pop, &[1, 0]).unwrap(), 1);
    }

    #[test]
    fn full_tournament_returns_best() {
        let pop = pop_with(&[3.0, 8.0, 8.0, 2.0]);
        let all: Vec<usize> = (0..4).collect();
        assert_eq!(tournament_winner(&pop, &all).unwrap(), 1);
    }

    #[test]
    fn binary_tournament_frequencies() {
        // With iid contestants, rank r of 4 wins with probability (2r - 1) / 16.
        let pop = pop_with(&[1.0, 2.0, 3.0, 4.0]);
        let mut rng = RngStream::new(5);
        let mut hits = [0usize; 4];
        let trials = 100_000;
        let mut contestants = [0usize; 2];
        for _ in 0..trials {
            for c in contestants.iter_mut() {
                *c = rng.random_range(0..4);
            }
            hits[tournament_winner(&pop, &contestants).unwrap()] += 1;
        }
        for (r, &h) in hits.iter().enumerate() {
            let expected = (2 * r + 1) as f64 / 16.0;
            assert!((h as f64 / trials as f64 - expected).abs() < 0.01);
        }
        let sel = select_tournament(&pop, 2, 10, &mut rng).unwrap();
        assert_eq!(sel.len(), 10);
    }

    #[test]
    fn selection_rejects_empty() {
        assert!(select_tournament(&Population::default(), 2, 3, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn marginals_are_column_frequencies() {
        let m = build_marginals(&pop_bits(&["00", "01"])).unwrap();
        assert_eq!(m.p, vec![0.0, 0.5]);
        let m = build_marginals(&pop_bits(&["111", "111"])).unwrap();
        assert_eq!(m.p, vec![1.0; 3]);
        assert!(build_marginals(&Population::default()).is_err());
    }

    #[test]
    fn marginals_match_recount() {
        let mut rng = RngStream::new(2);
        let pop = Population::random(37, 11, &mut rng).unwrap();
        let m = build_marginals(&pop).unwrap();
        for col in 0..11 {
            let ones = (0..37).filter(|&r| pop.get(r).allele(col) == 1).count();
            assert_eq!(m.p[col], ones as f64 / 37.0);
        }
    }

    #[test]
    fn degenerate_model_sampling() {
        let model = MarginalModel { p: vec![1.0, 0.0] };
        let pop = sample_marginals(&model, 50, &mut RngStream::new(1));
        assert!(pop.iter().all(|m| m.to_string() == "10"));
        assert!(pop.is_converged());
    }

    #[test]
    fn uniform_model_sampling() {
        let model = MarginalModel { p: vec![0.5; 8] };
        let pop = sample_marginals(&model, 10_000, &mut RngStream::new(9));
        let rebuilt = build_marginals(&pop).unwrap();
        assert!(rebuilt.p.iter().all(|&p| (p - 0.5).abs() < 0.05));
        let again = sample_marginals(&model, 10_000, &mut RngStream::new(9));
        assert_eq!(pop, again);
    }

    #[test]
    fn resampling_recovers_model() {
        let model = MarginalModel {
            p: vec![0.1, 0.25, 0.5, 0.8, 0.95],
        };
        let pop = sample_marginals(&model, 100_000, &mut RngStream::new(4));
        let rebuilt = build_marginals(&pop).unwrap();
        for (a, b) in rebuilt.p.iter().zip(&model.p) {
            assert!((a - b).abs() < 0.02);
        }
    }
}
