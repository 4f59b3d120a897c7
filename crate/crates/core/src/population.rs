//! Bitstring individuals and populations shared by every engine.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// A fixed-length string of binary alleles with a cached fitness value.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    bits: Vec<u8>,
    fitness: Option<f64>,
}

impl Individual {
    /// Builds an unevaluated individual. Every entry must be 0 or 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::ZeroStringSize);
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidAllele(char::from(b'0'.wrapping_add(b))));
        }
        Ok(Individual {
            bits,
            fitness: None,
        })
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Individual {
            bits,
            fitness: None,
        }
    }

    /// Each allele is an independent fair coin flip.
    pub fn random<R: Rng + ?Sized>(string_size: usize, rng: &mut R) -> Result<Self> {
        if string_size == 0 {
            return Err(Error::ZeroStringSize);
        }
        let bits = (0..string_size)
            .map(|_| u8::from(rng.random::<bool>()))
            .collect();
        Ok(Individual {
            bits,
            fitness: None,
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Allele at `locus`, 0 or 1.
    pub fn allele(&self, locus: usize) -> u8 {
        self.bits[locus]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Cached fitness, `None` until evaluated.
    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.is_some()
    }

    pub fn set_fitness(&mut self, fitness: f64) {
        self.fitness = Some(fitness);
    }

    pub fn complement(&self) -> Individual {
        Individual {
            bits: self.bits.iter().map(|&b| b ^ 1).collect(),
            fitness: None,
        }
    }

    pub fn hamming(&self, other: &Individual) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    fn evaluated_fitness(&self) -> f64 {
        self.fitness.expect("fitness read before evaluation")
    }
}

impl fmt::Display for Individual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Individual {
    type Err = Error;

    /// Parses a string of `0`/`1`; whitespace is ignored so blocks can be spaced.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidAllele(other)),
            })
            .collect::<Result<Vec<u8>>>()?;
        Individual::new(bits)
    }
}

/// A set of equal-length individuals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        if let Some(first) = members.first() {
            let expected = first.len();
            if let Some(bad) = members.iter().find(|m| m.len() != expected) {
                return Err(Error::LengthMismatch {
                    expected,
                    actual: bad.len(),
                });
            }
        }
        Ok(Population { members })
    }

    pub fn random<R: Rng + ?Sized>(size: usize, string_size: usize, rng: &mut R) -> Result<Self> {
        let members = (0..size)
            .map(|_| Individual::random(string_size, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Population { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Length of every member's bitstring, 0 for an empty population.
    pub fn string_size(&self) -> usize {
        self.members.first().map_or(0, Individual::len)
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [Individual] {
        &mut self.members
    }

    pub fn get(&self, index: usize) -> &Individual {
        &self.members[index]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Individual> {
        self.members.iter()
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub(crate) fn replace(&mut self, index: usize, ind: Individual) {
        self.members[index] = ind;
    }

    fn check_evaluated(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        match self.members.iter().position(|m| !m.is_evaluated()) {
            Some(index) => Err(Error::Unevaluated { index }),
            None => Ok(()),
        }
    }

    pub fn average_fitness(&self) -> Result<f64> {
        self.check_evaluated()?;
        let sum: f64 = self.members.iter().map(Individual::evaluated_fitness).sum();
        Ok(sum / self.members.len() as f64)
    }

    /// Index of a maximal-fitness member; the lowest index wins ties.
    pub fn best_index(&self) -> Result<usize> {
        self.check_evaluated()?;
        Ok(self.argbest(|f, best| f > best))
    }

    /// Index of a minimal-fitness member; the lowest index wins ties.
    pub fn worst_index(&self) -> Result<usize> {
        self.check_evaluated()?;
        Ok(self.argbest(|f, worst| f < worst))
    }

    fn argbest(&self, better: impl Fn(f64, f64) -> bool) -> usize {
        let mut best = 0;
        let mut best_fit = self.members[0].evaluated_fitness();
        for (i, m) in self.members.iter().enumerate().skip(1) {
            let f = m.evaluated_fitness();
            if better(f, best_fit) {
                best = i;
                best_fit = f;
            }
        }
        best
    }

    pub fn best_of(&self) -> Result<&Individual> {
        Ok(&self.members[self.best_index()?])
    }

    /// True when every member carries the same bitstring.
    pub fn is_converged(&self) -> bool {
        match self.members.split_first() {
            Some((first, rest)) => rest.iter().all(|m| m.bits == first.bits),
            None => false,
        }
    }

    /// Replaces the worst `count` members with the best `count` of `parents`.
    pub(crate) fn keep_elites(&mut self, parents: &Population, count: usize) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        parents.check_evaluated()?;
        self.check_evaluated()?;
        let count = count.min(parents.len()).min(self.len());
        let mut parent_order: Vec<usize> = (0..parents.len()).collect();
        parent_order.sort_by(|&a, &b| {
            let (fa, fb) = (
                parents.members[a].evaluated_fitness(),
                parents.members[b].evaluated_fitness(),
            );
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let mut own_order: Vec<usize> = (0..self.len()).collect();
        own_order.sort_by(|&a, &b| {
            let (fa, fb) = (
                self.members[a].evaluated_fitness(),
                self.members[b].evaluated_fitness(),
            );
            fa.total_cmp(&fb).then(a.cmp(&b))
        });
        for (&slot, &elite) in own_order.iter().zip(&parent_order).take(count) {
            self.members[slot] = parents.members[elite].clone();
        }
        Ok(())
    }
}

impl From<Vec<Individual>> for Population {
    fn from(members: Vec<Individual>) -> Self {
        Population::new(members).expect("members of unequal length")
    }
}
