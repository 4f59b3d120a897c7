//! Extended Compact GA: marginal product models chosen by minimum description length.
//!
//! A model is a partition of the loci into groups; each group carries the
//! joint frequency table of its configurations in the selected set. The
//! combined complexity of a model with `N` selected individuals is
//!
//! ```text
//! log2(N + 1) * sum_g (2^|g| - 1)  +  N * sum_g H(g)
//! ```
//!
//! where `H(g)` is the empirical entropy of group `g` in bits. Model search
//! starts from singletons and greedily applies the pairwise merge that lowers
//! this score the most.

use rand::Rng;

use crate::engine::GenContext;
use crate::error::{Error, Result};
use crate::population::{Individual, Population};
use crate::umda::select_tournament;

/// Score differences smaller than this are treated as no change.
pub const MERGE_EPSILON: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct EcgaParams {
    pub tournament_size: usize,
    pub max_group_size: usize,
    pub elite_count: usize,
}

impl Default for EcgaParams {
    fn default() -> Self {
        EcgaParams {
            tournament_size: 8,
            max_group_size: 12,
            elite_count: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpmModel {
    /// Loci of each group, ascending.
    pub groups: Vec<Vec<usize>>,
    /// Configuration counts per group. Bit `j` of a configuration index is the
    /// allele at `groups[g][j]`.
    pub tables: Vec<Vec<u64>>,
    /// Number of individuals the tables were counted from.
    pub n: usize,
}

/// A model together with the number of metric evaluations its search took.
#[derive(Clone, Debug)]
pub struct ModelBuild<M> {
    pub model: M,
    pub metric_evaluations: u64,
}

fn config_index(ind: &Individual, group: &[usize]) -> usize {
    group.iter().enumerate().fold(0, |acc, (j, &locus)| {
        acc | (usize::from(ind.allele(locus)) << j)
    })
}

pub fn group_table(selected: &Population, group: &[usize]) -> Vec<u64> {
    let mut table = vec![0u64; 1 << group.len()];
    for m in selected.iter() {
        table[config_index(m, group)] += 1;
    }
    table
}

/// `N * H` in bits for one table: `sum_x c_x * log2(N / c_x)`.
fn compressed_cost(table: &[u64], n: usize) -> f64 {
    let n = n as f64;
    table
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c * (n / c).log2()
        })
        .sum()
}

fn model_cost(group_len: usize, n: usize) -> f64 {
    ((n + 1) as f64).log2() * ((1u64 << group_len) - 1) as f64
}

fn group_cost(table: &[u64], group_len: usize, n: usize) -> f64 {
    model_cost(group_len, n) + compressed_cost(table, n)
}

pub fn combined_complexity(model: &MpmModel) -> Result<f64> {
    if model.n == 0 {
        return Err(Error::InconsistentModel("no individuals".into()));
    }
    if model.groups.len() != model.tables.len() {
        return Err(Error::InconsistentModel(
            "one table per group required".into(),
        ));
    }
    let mut total = 0.0;
    for (g, (group, table)) in model.groups.iter().zip(&model.tables).enumerate() {
        if table.len() != 1 << group.len() {
            return Err(Error::InconsistentModel(format!(
                "group {g} table has wrong size"
            )));
        }
        let sum: u64 = table.iter().sum();
        if sum != model.n as u64 {
            return Err(Error::InconsistentModel(format!(
                "group {g} counts sum to {sum}, expected {}",
                model.n
            )));
        }
        total += group_cost(table, group.len(), model.n);
    }
    Ok(total)
}

/// Builds the model of `selected` for a given partition.
pub fn model_for_partition(selected: &Population, groups: Vec<Vec<usize>>) -> MpmModel {
    let tables = groups.iter().map(|g| group_table(selected, g)).collect();
    MpmModel {
        groups,
        tables,
        n: selected.len(),
    }
}

fn merged(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut g: Vec<usize> = a.iter().chain(b).copied().collect();
    g.sort_unstable();
    g
}

/// Greedy merge search from the all-singleton partition.
///
/// Every round scores all pairwise merges and applies the one with the
/// largest decrease; ties go to the lexicographically smallest pair of group
/// slots. Slots keep the order of their smallest locus. Merges that would
/// exceed `max_group_size` loci are not considered.
pub fn greedy_mpm_search(
    selected: &Population,
    max_group_size: usize,
) -> Result<ModelBuild<MpmModel>> {
    if selected.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let n = selected.len();
    let ell = selected.string_size();
    let mut groups: Vec<Option<Vec<usize>>> = (0..ell).map(|i| Some(vec![i])).collect();
    let mut tables: Vec<Vec<u64>> = (0..ell).map(|i| group_table(selected, &[i])).collect();
    let mut costs: Vec<f64> = tables.iter().map(|t| group_cost(t, 1, n)).collect();
    let mut evaluations = 0u64;

    // delta[a][b] for a < b: change in complexity from merging slots a and b.
    let mut delta: Vec<Vec<Option<f64>>> = vec![vec![None; ell]; ell];
    let mut score_pair =
        |a: usize, b: usize, groups: &[Option<Vec<usize>>], costs: &[f64]| -> Option<f64> {
            let (ga, gb) = (groups[a].as_ref()?, groups[b].as_ref()?);
            if ga.len() + gb.len() > max_group_size {
                return None;
            }
            let g = merged(ga, gb);
            let t = group_table(selected, &g);
            evaluations += 1;
            Some(group_cost(&t, g.len(), n) - costs[a] - costs[b])
        };
    for a in 0..ell {
        for b in a + 1..ell {
            delta[a][b] = score_pair(a, b, &groups, &costs);
        }
    }

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (a, row) in delta.iter().enumerate() {
            for (b, d) in row.iter().enumerate().skip(a + 1) {
                if let Some(d) = *d {
                    if d < -MERGE_EPSILON && best.is_none_or(|(_, _, bd)| d < bd) {
                        best = Some((a, b, d));
                    }
                }
            }
        }
        let Some((a, b, _)) = best else { break };

        let g = merged(groups[a].as_ref().unwrap(), groups[b].as_ref().unwrap());
        tables[a] = group_table(selected, &g);
        costs[a] = group_cost(&tables[a], g.len(), n);
        groups[a] = Some(g);
        groups[b] = None;
        tables[b] = Vec::new();
        for row in delta.iter_mut() {
            row[b] = None;
        }
        delta[b].iter_mut().for_each(|d| *d = None);
        for other in 0..ell {
            if other == a || groups[other].is_none() {
                continue;
            }
            let (lo, hi) = if other < a { (other, a) } else { (a, other) };
            delta[lo][hi] = score_pair(lo, hi, &groups, &costs);
        }
    }

    let (groups, tables): (Vec<_>, Vec<_>) = groups
        .into_iter()
        .zip(tables)
        .filter_map(|(g, t)| g.map(|g| (g, t)))
        .unzip();
    Ok(ModelBuild {
        model: MpmModel { groups, tables, n },
        metric_evaluations: evaluations,
    })
}

/// Samples each group's configuration independently from its empirical distribution.
pub fn sample_mpm<R: Rng + ?Sized>(model: &MpmModel, count: usize, rng: &mut R) -> Population {
    let ell: usize = model.groups.iter().map(Vec::len).sum();
    let cumulative: Vec<Vec<u64>> = model
        .tables
        .iter()
        .map(|t| {
            t.iter()
                .scan(0u64, |acc, &c| {
                    *acc += c;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let total = model.n as u64;
    let members = (0..count)
        .map(|_| {
            let mut bits = vec![0u8; ell];
            for (group, cum) in model.groups.iter().zip(&cumulative) {
                let r = rng.random_range(0..total);
                let config = cum.partition_point(|&c| c <= r);
                for (j, &locus) in group.iter().enumerate() {
                    bits[locus] = ((config >> j) & 1) as u8;
                }
            }
            Individual::from_bits_unchecked(bits)
        })
        .collect();
    Population::new(members).expect("equal-length samples")
}

pub(crate) fn generation(
    params: &EcgaParams,
    pop: &mut Population,
    ctx: &mut GenContext<'_>,
) -> Result<()> {
    let n = pop.len();
    let selected = select_tournament(pop, params.tournament_size, n, ctx.rng)?;
    let build = greedy_mpm_search(&selected, params.max_group_size)?;
    ctx.charge(build.metric_evaluations);
    let mut offspring = sample_mpm(&build.model, n, ctx.rng);
    ctx.charge(n as u64);
    ctx.evaluate_all(&mut offspring)?;
    offspring.keep_elites(pop, params.elite_count)?;
    *pop = offspring;
    Ok(())
}
