//! Independent oracles and checkers shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use rand::Rng;

use evoport::config::ValidatedConfig;
use evoport::report::{Event, RunResult};
use evoport::{EngineKind, Individual, Population, PortfolioConfig, ProblemRegistry, RngStream};

pub const TOL: f64 = 1e-9;

/// Random population of `n` strings of `len` bits.
pub fn random_population(n: usize, len: usize, rng: &mut RngStream) -> Population {
    Population::new(
        (0..n)
            .map(|_| Individual::new((0..len).map(|_| rng.random_range(0..2u8)).collect()).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Random set partition of `0..len`, groups sorted by minimum element.
pub fn random_partition(len: usize, rng: &mut RngStream) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for locus in 0..len {
        let pick = rng.random_range(0..=groups.len());
        if pick == groups.len() {
            groups.push(vec![locus]);
        } else {
            groups[pick].push(locus);
        }
    }
    groups
}

/// Every set partition of `0..len`.
pub fn all_partitions(len: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(locus: usize, len: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if locus == len {
            out.push(cur.clone());
            return;
        }
        for g in 0..cur.len() {
            cur[g].push(locus);
            go(locus + 1, len, cur, out);
            cur[g].pop();
        }
        cur.push(vec![locus]);
        go(locus + 1, len, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, len, &mut Vec::new(), &mut out);
    out
}

/// Model plus population complexity computed from scratch with string keys.
pub fn brute_complexity(pop: &Population, groups: &[Vec<usize>]) -> f64 {
    let n = pop.len() as f64;
    let mut model = 0.0;
    let mut compressed = 0.0;
    for g in groups {
        model += (n + 1.0).log2() * (2f64.powi(g.len() as i32) - 1.0);
        let mut counts: HashMap<String, usize> = HashMap::new();
        for m in pop.iter() {
            let key: String = g.iter().map(|&i| char::from(b'0' + m.allele(i))).collect();
            *counts.entry(key).or_default() += 1;
        }
        let entropy: f64 = counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum();
        compressed += n * entropy;
    }
    model + compressed
}

fn factorial(k: usize) -> BigUint {
    (1..=k as u64).fold(BigUint::from(1u32), |acc, x| acc * x)
}

/// log2 of an arbitrary-precision integer, to double precision.
pub fn big_log2(x: &BigUint) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).iter_u64_digits().next().unwrap_or(0);
    shift as f64 + (top as f64).log2()
}

/// Split gain from exact factorials:
/// log2(Π_children a!b!/(a+b+1)! · (p0+p1+1)!/(p0!p1!)) − log2(n)/2.
pub fn exact_split_gain(parent: (usize, usize), children: [(usize, usize); 2], n: usize) -> f64 {
    let mut num = factorial(parent.0 + parent.1 + 1);
    let mut den = factorial(parent.0) * factorial(parent.1);
    for (a, b) in children {
        num *= factorial(a) * factorial(b);
        den *= factorial(a + b + 1);
    }
    big_log2(&num) - big_log2(&den) - 0.5 * (n as f64).log2()
}

/// Checks the scheduler invariants on a finished run; returns the first violation.
pub fn check_scheduler_invariants(r: &RunResult) -> Result<(), String> {
    let mut prev_slice = 0u64;
    let mut prev_max_cost = 0u64;
    let mut deactivated: Vec<EngineKind> = Vec::new();
    let mut last_calls: HashMap<EngineKind, u64> = HashMap::new();
    for s in &r.history {
        let Some(first) = s.engines.first() else {
            return Err(format!("sweep {} has no records", s.sweep));
        };
        let slice = first.slice;
        if slice < prev_slice {
            return Err(format!("slice decreased at sweep {}", s.sweep));
        }
        if slice < prev_max_cost {
            return Err(format!(
                "slice at sweep {} below previous largest generation",
                s.sweep
            ));
        }
        prev_slice = slice;
        prev_max_cost = s.engines.iter().map(|e| e.max_gen_cost).max().unwrap_or(0);
        let mut ran_out = false;
        for e in &s.engines {
            if e.slice != slice {
                return Err(format!("unequal slices in sweep {}", s.sweep));
            }
            if deactivated.contains(&e.engine) {
                return Err(format!(
                    "{} ran after deactivation (sweep {})",
                    e.engine, s.sweep
                ));
            }
            if e.generations == 0 {
                // Only the tail of a sweep cut short by a stop condition may be empty.
                if s.complete {
                    return Err(format!(
                        "{} ran no generation in sweep {}",
                        e.engine, s.sweep
                    ));
                }
                ran_out = true;
            } else if ran_out {
                return Err(format!(
                    "engine ran after a stopped turn in sweep {}",
                    s.sweep
                ));
            }
            let prev = last_calls.insert(e.engine, e.fitness_calls).unwrap_or(0);
            if e.fitness_calls < prev {
                return Err(format!("{} fitness calls decreased", e.engine));
            }
            if e.events.contains(&Event::Deactivated) {
                if e.engine == EngineKind::Hboa {
                    return Err("the most complex engine was deactivated".into());
                }
                deactivated.push(e.engine);
            }
        }
        if s.engines.iter().all(|e| e.engine != EngineKind::Hboa) {
            return Err(format!("HBOA missing from sweep {}", s.sweep));
        }
    }
    let mut sum = 0;
    for e in &r.engines {
        sum += e.fitness_calls;
        if last_calls.get(&e.engine).copied().unwrap_or(0) != e.fitness_calls {
            return Err(format!(
                "{} accrued calls outside its logged turns",
                e.engine
            ));
        }
        if e.engine == EngineKind::Hboa && !e.active {
            return Err("HBOA inactive at the end".into());
        }
        if e.active == deactivated.contains(&e.engine) {
            return Err(format!(
                "{} activation status disagrees with its events",
                e.engine
            ));
        }
    }
    if sum != r.total_fitness_calls {
        return Err(format!(
            "conservation: {} != {}",
            sum, r.total_fitness_calls
        ));
    }
    Ok(())
}

/// A validated configuration built from a `PortParameters.txt` text.
pub fn validated(port: &str) -> ValidatedConfig {
    let files = evoport::config::ConfigFiles {
        port: port.to_string(),
        ..Default::default()
    };
    PortfolioConfig::from_files(&files)
        .unwrap()
        .validate(&ProblemRegistry::new())
        .unwrap()
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
}

/// Configuration of the golden Trap-5 run.
pub const GOLDEN_CONFIG: &str =
    "problemType = 15\nstringSize = 30\nseed = 42\ntargetFitness = 30\nmaxFitnessCalls = 2000000\n";
pub const GOLDEN_FILE: &str = "PORTFOLIO_15_0.txt";
