//! Benchmark catalog, Gaussian fitness noise, and the problem registry.
//!
//! Built-in problems come in a ZERO family (IDs 0..=6, optimum at all zeros)
//! and a ONE family (IDs 10..=16, optimum at all ones), plus two hierarchical
//! traps (21, 22). Every block function is written over the *unitation of the
//! target allele*: the number of ones for the ONE family, the number of zeros
//! for the ZERO family. That makes `one(x) == zero(!x)` hold exactly.
//!
//! New problems implement [`Problem`] and are added at runtime with
//! [`ProblemRegistry::register`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::population::Individual;

/// Fitness function over a bitstring. Larger is better.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    /// Noiseless fitness. Alleles are read with [`Individual::allele`].
    fn compute_fitness(&self, ind: &Individual) -> f64;
}

/// Which allele a block function rewards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Zero,
    One,
}

impl Polarity {
    fn target(self) -> u8 {
        match self {
            Polarity::Zero => 0,
            Polarity::One => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HierarchicalVariant {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Max,
    Quadratic,
    Deceptive3,
    Bipolar6,
    Overlapping3,
    TrapK,
    Uniform6,
}

/// Default block size for the concatenated trap.
pub const DEFAULT_TRAP_K: usize = 5;

/// IDs and names of every built-in problem.
pub const CATALOG: [(i32, &str); 16] = [
    (0, "ZeroMax"),
    (1, "ZeroQuadratic"),
    (2, "Zero3Deceptive"),
    (3, "Zero3DeceptiveBipolar"),
    (4, "Zero3DeceptiveOverlapping"),
    (5, "ZeroConcatenatedTrapK"),
    (6, "ZeroUniform6Blocks"),
    (10, "OneMax"),
    (11, "Quadratic"),
    (12, "3Deceptive"),
    (13, "3DeceptiveBipolar"),
    (14, "3DeceptiveOverlapping"),
    (15, "ConcatenatedTrapK"),
    (16, "Uniform6Blocks"),
    (21, "HierarchicalTrapOne"),
    (22, "HierarchicalTrapTwo"),
];

pub fn is_builtin(problem_type: i32) -> bool {
    CATALOG.iter().any(|&(id, _)| id == problem_type)
}

fn family_of(problem_type: i32) -> Option<(Family, Polarity)> {
    let polarity = match problem_type {
        0..=6 => Polarity::Zero,
        10..=16 => Polarity::One,
        _ => return None,
    };
    let family = match problem_type % 10 {
        0 => Family::Max,
        1 => Family::Quadratic,
        2 => Family::Deceptive3,
        3 => Family::Bipolar6,
        4 => Family::Overlapping3,
        5 => Family::TrapK,
        _ => Family::Uniform6,
    };
    Some((family, polarity))
}

/// Everything needed to instantiate a problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub problem_type: i32,
    pub string_size: usize,
    /// Trap block size `k`; only the concatenated traps read it.
    pub trap_k: usize,
    /// Standard deviation of additive Gaussian noise, 0 for noiseless.
    pub sigma_k: f64,
}

impl ProblemSpec {
    pub fn new(problem_type: i32, string_size: usize, sigma_k: f64) -> Self {
        ProblemSpec {
            problem_type,
            string_size,
            trap_k: DEFAULT_TRAP_K,
            sigma_k,
        }
    }

    pub fn with_trap_k(mut self, k: usize) -> Self {
        self.trap_k = k;
        self
    }
}

pub type ProblemFactory = dyn Fn(&ProblemSpec) -> Result<Arc<dyn Problem>> + Send + Sync;

/// A problem bound to its spec, ready to evaluate individuals.
#[derive(Clone)]
pub struct ProblemInstance {
    spec: ProblemSpec,
    problem: Arc<dyn Problem>,
    noise: Option<Normal<f64>>,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.problem.name())
            .field("spec", &self.spec)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(spec: ProblemSpec, problem: Arc<dyn Problem>) -> Result<Self> {
        if spec.string_size == 0 {
            return Err(Error::ZeroStringSize);
        }
        if !(spec.sigma_k >= 0.0 && spec.sigma_k.is_finite()) {
            return Err(Error::invalid(
                "sigmaK",
                format!("must be finite and >= 0, got {}", spec.sigma_k),
            ));
        }
        let noise = if spec.sigma_k > 0.0 {
            Some(
                Normal::new(0.0, spec.sigma_k)
                    .map_err(|e| Error::invalid("sigmaK", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(ProblemInstance {
            spec,
            problem,
            noise,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        self.problem.name()
    }

    pub fn string_size(&self) -> usize {
        self.spec.string_size
    }

    /// Noiseless fitness without touching the individual's cache.
    pub fn base_fitness(&self, ind: &Individual) -> Result<f64> {
        self.check_len(ind)?;
        Ok(self.problem.compute_fitness(ind))
    }

    /// Base fitness plus, when `sigma_k > 0`, one fresh N(0, sigma_k^2) draw.
    /// Caches the value on `ind`.
    pub fn compute_fitness<R: Rng + ?Sized>(
        &self,
        ind: &mut Individual,
        rng: &mut R,
    ) -> Result<f64> {
        let mut f = self.base_fitness(ind)?;
        if let Some(noise) = &self.noise {
            f += noise.sample(rng);
        }
        ind.set_fitness(f);
        Ok(f)
    }

    fn check_len(&self, ind: &Individual) -> Result<()> {
        if ind.len() != self.spec.string_size {
            return Err(Error::LengthMismatch {
                expected: self.spec.string_size,
                actual: ind.len(),
            });
        }
        Ok(())
    }
}

/// Maps numeric problem IDs to instances. Built-ins are always present.
#[derive(Clone, Default)]
pub struct ProblemRegistry {
    plugins: BTreeMap<i32, Arc<ProblemFactory>>,
}

impl ProblemRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, problem_type: i32, factory: F) -> Result<()>
    where
        F: Fn(&ProblemSpec) -> Result<Arc<dyn Problem>> + Send + Sync + 'static,
    {
        if is_builtin(problem_type) || self.plugins.contains_key(&problem_type) {
            return Err(Error::DuplicateProblemId(problem_type));
        }
        self.plugins.insert(problem_type, Arc::new(factory));
        Ok(())
    }

    pub fn contains(&self, problem_type: i32) -> bool {
        is_builtin(problem_type) || self.plugins.contains_key(&problem_type)
    }

    /// Registered IDs with names; plugin names are reported as `Plugin<id>`.
    pub fn entries(&self) -> Vec<(i32, String)> {
        let mut out: Vec<(i32, String)> =
            CATALOG.iter().map(|&(id, n)| (id, n.to_string())).collect();
        out.extend(self.plugins.keys().map(|&id| (id, format!("Plugin{id}"))));
        out
    }

    /// Looks up `problem_type` with the default trap size.
    pub fn lookup(
        &self,
        problem_type: i32,
        string_size: usize,
        sigma_k: f64,
    ) -> Result<ProblemInstance> {
        self.lookup_spec(&ProblemSpec::new(problem_type, string_size, sigma_k))
    }

    pub fn lookup_spec(&self, spec: &ProblemSpec) -> Result<ProblemInstance> {
        let problem: Arc<dyn Problem> =
            if let Some((family, polarity)) = family_of(spec.problem_type) {
                Arc::new(BlockProblem::new(spec, family, polarity)?)
            } else if spec.problem_type == 21 || spec.problem_type == 22 {
                let variant = if spec.problem_type == 21 {
                    HierarchicalVariant::One
                } else {
                    HierarchicalVariant::Two
                };
                Arc::new(HierarchicalTrap::new(spec.string_size, variant)?)
            } else if let Some(factory) = self.plugins.get(&spec.problem_type) {
                factory(spec)?
            } else {
                return Err(Error::UnknownProblem(spec.problem_type));
            };
        ProblemInstance::new(spec.clone(), problem)
    }
}

pub fn lookup_problem(
    problem_type: i32,
    string_size: usize,
    sigma_k: f64,
) -> Result<ProblemInstance> {
    ProblemRegistry::new().lookup(problem_type, string_size, sigma_k)
}

// ---------------------------------------------------------------------------
// Block payoffs

/// Deceptive 3-bit payoff over unitation: 0 -> 0.9, 1 -> 0.8, 2 -> 0.0, 3 -> 1.0.
pub fn block_deceptive3(u: usize) -> Result<f64> {
    match u {
        0 => Ok(0.9),
        1 => Ok(0.8),
        2 => Ok(0.0),
        3 => Ok(1.0),
        _ => Err(Error::UnitationOutOfRange { u, max: 3 }),
    }
}

/// Trap of order `k`: `k` at full unitation, otherwise `k - 1 - u`.
pub fn block_trap_k(u: usize, k: usize) -> Result<f64> {
    if u > k {
        return Err(Error::UnitationOutOfRange { u, max: k });
    }
    Ok(if u == k { k as f64 } else { (k - 1 - u) as f64 })
}

/// Two-bit payoff for the ONE polarity; the ZERO polarity swaps alleles.
pub fn block_quadratic(b0: u8, b1: u8, polarity: Polarity) -> f64 {
    let t = polarity.target();
    quadratic_by_unitation(usize::from(b0 == t) + usize::from(b1 == t))
}

fn quadratic_by_unitation(u: usize) -> f64 {
    match u {
        2 => 1.0,
        0 => 0.9,
        _ => 0.0,
    }
}

/// Bipolar 6-bit block: the deceptive payoff of `|u - 3|`.
pub fn block_bipolar6(u: usize) -> Result<f64> {
    if u > 6 {
        return Err(Error::UnitationOutOfRange { u, max: 6 });
    }
    block_deceptive3(u.abs_diff(3))
}

fn target_count(bits: &[u8], target: u8) -> usize {
    bits.iter().filter(|&&b| b == target).count()
}

/// Stride-2 windows of three bits; neighbouring blocks share one bit.
pub fn overlapping_deceptive3(bits: &[u8], polarity: Polarity) -> Result<f64> {
    let n = bits.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::IncompatibleSize {
            problem: 14,
            size: n,
            constraint: "must be odd and at least 3".into(),
        });
    }
    let t = polarity.target();
    let mut total = 0.0;
    let mut start = 0;
    while start + 3 <= n {
        total += block_deceptive3(target_count(&bits[start..start + 3], t))?;
        start += 2;
    }
    Ok(total)
}

/// Number of 6-bit blocks made entirely of the target allele.
pub fn uniform_blocks6(bits: &[u8], polarity: Polarity) -> Result<f64> {
    if bits.is_empty() || bits.len() % 6 != 0 {
        return Err(Error::IncompatibleSize {
            problem: 16,
            size: bits.len(),
            constraint: "must be a positive multiple of 6".into(),
        });
    }
    let t = polarity.target();
    Ok(bits.chunks(6).filter(|c| c.iter().all(|&b| b == t)).count() as f64)
}

struct BlockProblem {
    name: String,
    family: Family,
    polarity: Polarity,
    k: usize,
}

impl BlockProblem {
    fn new(spec: &ProblemSpec, family: Family, polarity: Polarity) -> Result<Self> {
        let n = spec.string_size;
        let incompatible = |constraint: String| Error::IncompatibleSize {
            problem: spec.problem_type,
            size: n,
            constraint,
        };
        if n == 0 {
            return Err(Error::ZeroStringSize);
        }
        let block = match family {
            Family::Max => 1,
            Family::Quadratic => 2,
            Family::Deceptive3 => 3,
            Family::Bipolar6 | Family::Uniform6 => 6,
            Family::Overlapping3 => {
                if n < 3 || n % 2 == 0 {
                    return Err(incompatible("must be odd and at least 3".into()));
                }
                1
            }
            Family::TrapK => {
                if spec.trap_k < 2 {
                    return Err(Error::invalid(
                        "trapK",
                        format!("must be at least 2, got {}", spec.trap_k),
                    ));
                }
                spec.trap_k
            }
        };
        if n % block != 0 {
            return Err(incompatible(format!("must be a multiple of {block}")));
        }
        let name = CATALOG
            .iter()
            .find(|&&(id, _)| id == spec.problem_type)
            .map(|&(_, n)| n.to_string())
            .unwrap_or_default();
        Ok(BlockProblem {
            name,
            family,
            polarity,
            k: spec.trap_k,
        })
    }

    fn blocks(bits: &[u8], size: usize, t: u8) -> impl Iterator<Item = usize> + '_ {
        bits.chunks(size).map(move |c| target_count(c, t))
    }
}

impl Problem for BlockProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn compute_fitness(&self, ind: &Individual) -> f64 {
        let bits = ind.bits();
        let t = self.polarity.target();
        // Sizes were validated at construction, so the block payoffs are in range.
        match self.family {
            Family::Max => target_count(bits, t) as f64,
            Family::Quadratic => Self::blocks(bits, 2, t).map(quadratic_by_unitation).sum(),
            Family::Deceptive3 => Self::blocks(bits, 3, t)
                .map(|u| block_deceptive3(u).unwrap())
                .sum(),
            Family::Bipolar6 => Self::blocks(bits, 6, t)
                .map(|u| block_bipolar6(u).unwrap())
                .sum(),
            Family::Overlapping3 => overlapping_deceptive3(bits, self.polarity).unwrap(),
            Family::TrapK => Self::blocks(bits, self.k, t)
                .map(|u| block_trap_k(u, self.k).unwrap())
                .sum(),
            Family::Uniform6 => uniform_blocks6(bits, self.polarity).unwrap(),
        }
    }
}

// ---------------------------------------------------------------------------
// Hierarchical traps

/// Payoffs of the 3-bit trap used at one level of a hierarchical trap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapPayoff {
    pub high: f64,
    pub low: f64,
}

impl TrapPayoff {
    /// `high` at unitation 3; otherwise decreasing linearly from `low` at 0 to 0 at 2.
    pub fn value(self, u: usize) -> f64 {
        if u == 3 {
            self.high
        } else {
            self.low - u as f64 * self.low / 2.0
        }
    }
}

/// Base-3 hierarchical trap over `3^levels` bits.
///
/// Triplets at each level are interpreted upward: `000 -> 0`, `111 -> 1`,
/// anything else is null. A triplet whose three inputs are non-null
/// contributes `3^level * trap(u)`; a triplet with a null input contributes
/// nothing and is null itself.
#[derive(Clone, Debug)]
pub struct HierarchicalTrap {
    levels: usize,
    variant: HierarchicalVariant,
}

impl HierarchicalTrap {
    pub fn new(string_size: usize, variant: HierarchicalVariant) -> Result<Self> {
        let problem = match variant {
            HierarchicalVariant::One => 21,
            HierarchicalVariant::Two => 22,
        };
        let mut levels = 0;
        let mut n = string_size;
        while n > 1 && n % 3 == 0 {
            n /= 3;
            levels += 1;
        }
        if n != 1 || levels < 2 {
            return Err(Error::IncompatibleSize {
                problem,
                size: string_size,
                constraint: "must be a power of 3 and at least 9".into(),
            });
        }
        Ok(HierarchicalTrap { levels, variant })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Trap payoffs used at `level` (0 is the bottom).
    pub fn payoff(&self, level: usize) -> TrapPayoff {
        let top = level + 1 == self.levels;
        match (self.variant, top) {
            (_, true) => TrapPayoff {
                high: 1.0,
                low: 0.9,
            },
            (HierarchicalVariant::One, false) => TrapPayoff {
                high: 1.0,
                low: 1.0,
            },
            (HierarchicalVariant::Two, false) => TrapPayoff {
                high: 1.0,
                low: 0.9 + 0.1 / self.levels as f64,
            },
        }
    }

    pub fn evaluate(&self, bits: &[u8]) -> f64 {
        // Symbols: Some(0), Some(1), or None for null.
        let mut symbols: Vec<Option<u8>> = bits.iter().map(|&b| Some(b)).collect();
        let mut total = 0.0;
        let mut scale = 1.0;
        for level in 0..self.levels {
            let payoff = self.payoff(level);
            let next: Vec<Option<u8>> = symbols
                .chunks(3)
                .map(|t| match (t[0], t[1], t[2]) {
                    (Some(a), Some(b), Some(c)) => {
                        let u = usize::from(a) + usize::from(b) + usize::from(c);
                        total += scale * payoff.value(u);
                        match u {
                            0 => Some(0),
                            3 => Some(1),
                            _ => None,
                        }
                    }
                    _ => None,
                })
                .collect();
            symbols = next;
            scale *= 3.0;
        }
        total
    }
}

impl Problem for HierarchicalTrap {
    fn name(&self) -> &str {
        match self.variant {
            HierarchicalVariant::One => "HierarchicalTrapOne",
            HierarchicalVariant::Two => "HierarchicalTrapTwo",
        }
    }

    fn compute_fitness(&self, ind: &Individual) -> f64 {
        self.evaluate(ind.bits())
    }
}
