//! Hierarchical BOA: Bayesian networks with decision-tree local structure,
//! built greedily under a Bayesian-Dirichlet score, sampled ancestrally and
//! merged back with restricted tournament replacement.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::Rng;

use crate::engine::GenContext;
use crate::error::{Error, Result};
use crate::population::{Individual, Population};
use crate::umda::select_tournament;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RtrWindow {
    /// `min(stringSize, N / 20)`, at least 1.
    Auto,
    Fixed(usize),
}

impl RtrWindow {
    pub fn resolve(self, string_size: usize, pop_size: usize) -> usize {
        match self {
            RtrWindow::Auto => string_size.min(pop_size / 20).max(1),
            RtrWindow::Fixed(w) => w.min(pop_size).max(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HboaParams {
    pub tournament_size: usize,
    /// Offspring per generation as a fraction of the population size.
    pub offspring_fraction: f64,
    pub rtr_window: RtrWindow,
}

impl Default for HboaParams {
    fn default() -> Self {
        HboaParams {
            tournament_size: 2,
            offspring_fraction: 0.5,
            rtr_window: RtrWindow::Auto,
        }
    }
}

/// `log2(k!)` for `k` up to a fixed bound, by cumulative sums.
#[derive(Clone, Debug)]
pub struct LogFactorial {
    table: Vec<f64>,
}

impl LogFactorial {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=max {
            acc += (k as f64).log2();
            table.push(acc);
        }
        LogFactorial { table }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// Score of a leaf with counts `(n0, n1)` under a uniform Dirichlet prior:
    /// `log2( Γ(2) / Γ(n0 + n1 + 2) * Γ(n0 + 1) * Γ(n1 + 1) )`.
    pub fn leaf_score(&self, n0: usize, n1: usize) -> f64 {
        self.get(n0) + self.get(n1) - self.get(n0 + n1 + 1)
    }
}

/// Penalty for one extra leaf in a network learned from `n` individuals.
pub fn leaf_penalty(n: usize) -> f64 {
    0.5 * (n as f64).log2()
}

/// Gain of replacing a leaf with counts `parent` by two leaves with counts
/// `children`, in a network learned from `n` individuals.
pub fn split_gain_from_counts(
    lf: &LogFactorial,
    parent: (usize, usize),
    children: [(usize, usize); 2],
    n: usize,
) -> f64 {
    lf.leaf_score(children[0].0, children[0].1) + lf.leaf_score(children[1].0, children[1].1)
        - lf.leaf_score(parent.0, parent.1)
        - leaf_penalty(n)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Split { locus: usize, children: [usize; 2] },
    Leaf { counts: [usize; 2] },
}

/// Decision tree for one variable. Node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    fn leaf(counts: [usize; 2]) -> Self {
        DecisionTree {
            nodes: vec![Node::Leaf { counts }],
        }
    }

    /// Leaf reached by `bits`.
    pub fn leaf_for(&self, bits: &[u8]) -> usize {
        let mut node = 0;
        while let Node::Split { locus, children } = &self.nodes[node] {
            node = children[usize::from(bits[*locus])];
        }
        node
    }

    pub fn leaf_counts(&self, leaf: usize) -> [usize; 2] {
        match &self.nodes[leaf] {
            Node::Leaf { counts } => *counts,
            Node::Split { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (usize, [usize; 2])> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Leaf { counts } => Some((i, *counts)),
            Node::Split { .. } => None,
        })
    }

    /// Loci tested anywhere in the tree.
    pub fn parents(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { locus, .. } => Some(*locus),
                Node::Leaf { .. } => None,
            })
            .collect();
        p.sort_unstable();
        p.dedup();
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTreeModel {
    pub trees: Vec<DecisionTree>,
    /// Number of selected individuals the counts came from.
    pub n: usize,
}

impl DecisionTreeModel {
    /// Variables ordered parents-first; ties go to the lowest locus.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let ell = self.trees.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); ell];
        let mut indegree = vec![0usize; ell];
        for (i, tree) in self.trees.iter().enumerate() {
            for p in tree.parents() {
                if p >= ell {
                    return Err(Error::CyclicNetwork);
                }
                children[p].push(i);
                indegree[i] += 1;
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..ell)
            .filter(|&i| indegree[i] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(ell);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if order.len() != ell {
            return Err(Error::CyclicNetwork);
        }
        Ok(order)
    }
}

struct LeafState {
    node: usize,
    members: Vec<u32>,
    /// Loci already tested on the path from the root.
    path: Vec<usize>,
    /// Gain for each candidate locus; `None` when not a valid candidate.
    gains: Vec<Option<f64>>,
}

/// Incremental greedy construction of a [`DecisionTreeModel`].
pub struct NetworkBuilder<'a> {
    selected: &'a Population,
    lf: LogFactorial,
    trees: Vec<DecisionTree>,
    leaves: Vec<Vec<LeafState>>,
    /// `reach[a][b]`: a directed path `a -> ... -> b` exists (a is an ancestor of b).
    reach: Vec<Vec<bool>>,
    metric_evaluations: u64,
}

impl<'a> NetworkBuilder<'a> {
    pub fn new(selected: &'a Population) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let ell = selected.string_size();
        let n = selected.len();
        let mut trees = Vec::with_capacity(ell);
        let mut leaves = Vec::with_capacity(ell);
        for i in 0..ell {
            let ones = selected.iter().filter(|m| m.allele(i) == 1).count();
            trees.push(DecisionTree::leaf([n - ones, ones]));
            leaves.push(vec![LeafState {
                node: 0,
                members: (0..n as u32).collect(),
                path: Vec::new(),
                gains: Vec::new(),
            }]);
        }
        Ok(NetworkBuilder {
            selected,
            lf: LogFactorial::new(n + 1),
            trees,
            leaves,
            reach: vec![vec![false; ell]; ell],
            metric_evaluations: 0,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn metric_evaluations(&self) -> u64 {
        self.metric_evaluations
    }

    /// Whether adding edge `candidate -> tree` keeps the network acyclic.
    fn acyclic_with(&self, tree: usize, candidate: usize) -> bool {
        candidate != tree && !self.reach[tree][candidate]
    }

    /// Counts `[x_candidate][x_tree]` over the members of a leaf.
    fn split_counts(&self, tree: usize, members: &[u32], candidate: usize) -> [[usize; 2]; 2] {
        let mut c = [[0usize; 2]; 2];
        for &m in members {
            let ind = self.selected.get(m as usize);
            c[usize::from(ind.allele(candidate))][usize::from(ind.allele(tree))] += 1;
        }
        c
    }

    /// Gain of splitting leaf `leaf` (a node id) of tree `tree` on `candidate`.
    pub fn split_gain(&self, tree: usize, leaf: usize, candidate: usize) -> Result<f64> {
        let invalid = |reason| Error::InvalidSplit {
            tree,
            candidate,
            reason,
        };
        if candidate >= self.trees.len() {
            return Err(invalid("locus out of range"));
        }
        let state = self.leaves[tree]
            .iter()
            .find(|l| l.node == leaf)
            .ok_or_else(|| invalid("node is not a leaf"))?;
        if state.path.contains(&candidate) {
            return Err(invalid("already tested on this path"));
        }
        if !self.acyclic_with(tree, candidate) {
            return Err(invalid("would create a cycle"));
        }
        Ok(self.gain_for(tree, &state.members, candidate))
    }

    fn gain_for(&self, tree: usize, members: &[u32], candidate: usize) -> f64 {
        let c = self.split_counts(tree, members, candidate);
        let parent = (c[0][0] + c[1][0], c[0][1] + c[1][1]);
        split_gain_from_counts(
            &self.lf,
            parent,
            [(c[0][0], c[0][1]), (c[1][0], c[1][1])],
            self.selected.len(),
        )
    }

    fn fill_gains(&mut self, tree: usize, slot: usize) {
        let ell = self.trees.len();
        let mut gains = vec![None; ell];
        let state = &self.leaves[tree][slot];
        let mut evaluated = 0;
        for (j, g) in gains.iter_mut().enumerate() {
            if j != tree && !state.path.contains(&j) && self.acyclic_with(tree, j) {
                *g = Some(self.gain_for(tree, &state.members, j));
                evaluated += 1;
            }
        }
        self.metric_evaluations += evaluated;
        self.leaves[tree][slot].gains = gains;
    }

    /// Best valid split with positive gain: `(tree, leaf slot, locus, gain)`.
    fn best_split(&mut self) -> Option<(usize, usize, usize, f64)> {
        let mut best: Option<(usize, usize, usize, f64)> = None;
        for tree in 0..self.trees.len() {
            for slot in 0..self.leaves[tree].len() {
                for j in 0..self.trees.len() {
                    let Some(g) = self.leaves[tree][slot].gains[j] else {
                        continue;
                    };
                    if !self.acyclic_with(tree, j) {
                        // Edges are only ever added, so this stays invalid.
                        self.leaves[tree][slot].gains[j] = None;
                        continue;
                    }
                    if g > 0.0 && best.is_none_or(|(_, _, _, bg)| g > bg) {
                        best = Some((tree, slot, j, g));
                    }
                }
            }
        }
        best
    }

    fn add_edge(&mut self, from: usize, to: usize) {
        let ell = self.trees.len();
        let sources: Vec<usize> = (0..ell)
            .filter(|&a| a == from || self.reach[a][from])
            .collect();
        let targets: Vec<usize> = (0..ell).filter(|&b| b == to || self.reach[to][b]).collect();
        for &a in &sources {
            for &b in &targets {
                self.reach[a][b] = true;
            }
        }
    }

    fn apply_split(&mut self, tree: usize, slot: usize, locus: usize) {
        let state = self.leaves[tree].remove(slot);
        let mut parts: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
        for &m in &state.members {
            parts[usize::from(self.selected.get(m as usize).allele(locus))].push(m);
        }
        let nodes = &mut self.trees[tree].nodes;
        let base = nodes.len();
        for part in &parts {
            let ones = part
                .iter()
                .filter(|&&m| self.selected.get(m as usize).allele(tree) == 1)
                .count();
            nodes.push(Node::Leaf {
                counts: [part.len() - ones, ones],
            });
        }
        nodes[state.node] = Node::Split {
            locus,
            children: [base, base + 1],
        };
        self.add_edge(locus, tree);
        let mut path = state.path;
        path.push(locus);
        for (k, members) in parts.into_iter().enumerate() {
            self.leaves[tree].push(LeafState {
                node: base + k,
                members,
                path: path.clone(),
                gains: Vec::new(),
            });
            let slot = self.leaves[tree].len() - 1;
            self.fill_gains(tree, slot);
        }
    }

    /// Applies maximal positive-gain splits until none remain.
    pub fn build(mut self) -> ModelBuild {
        for tree in 0..self.trees.len() {
            self.fill_gains(tree, 0);
        }
        while let Some((tree, slot, locus, _)) = self.best_split() {
            self.apply_split(tree, slot, locus);
        }
        ModelBuild {
            model: DecisionTreeModel {
                trees: self.trees,
                n: self.selected.len(),
            },
            metric_evaluations: self.metric_evaluations,
        }
    }
}

pub type ModelBuild = crate::ecga::ModelBuild<DecisionTreeModel>;

pub fn build_network(selected: &Population) -> Result<ModelBuild> {
    Ok(NetworkBuilder::new(selected)?.build())
}

/// Ancestral sampling with Laplace-corrected leaf probabilities `(n1 + 1) / (n0 + n1 + 2)`.
pub fn sample_network<R: Rng + ?Sized>(
    model: &DecisionTreeModel,
    count: usize,
    rng: &mut R,
) -> Result<Population> {
    let order = model.topological_order()?;
    let ell = model.trees.len();
    let members = (0..count)
        .map(|_| {
            let mut bits = vec![0u8; ell];
            for &v in &order {
                let tree = &model.trees[v];
                let [n0, n1] = tree.leaf_counts(tree.leaf_for(&bits));
                let p = (n1 + 1) as f64 / (n0 + n1 + 2) as f64;
                bits[v] = u8::from(rng.random::<f64>() < p);
            }
            Individual::from_bits_unchecked(bits)
        })
        .collect();
    Population::new(members)
}

/// Restricted tournament replacement. Each offspring competes with the
/// Hamming-nearest of `window` distinct random members (lowest index on ties)
/// and replaces it when at least as fit. Returns the number of replacements.
pub fn rtr_replace<R: Rng + ?Sized>(
    pop: &mut Population,
    offspring: Vec<Individual>,
    window: usize,
    rng: &mut R,
) -> Result<usize> {
    if window > pop.len() {
        return Err(Error::WindowTooLarge {
            window,
            size: pop.len(),
        });
    }
    if window == 0 {
        return Err(Error::invalid("rtrWindow", "must be at least 1"));
    }
    let mut replaced = 0;
    for child in offspring {
        let child_fit = child.fitness().ok_or(Error::Unevaluated { index: 0 })?;
        let mut nearest: Option<(usize, usize)> = None;
        for idx in sample(rng, pop.len(), window) {
            let d = pop.get(idx).hamming(&child);
            if nearest.is_none_or(|(bi, bd)| d < bd || (d == bd && idx < bi)) {
                nearest = Some((idx, d));
            }
        }
        let (target, _) = nearest.expect("window is non-empty");
        let target_fit = pop
            .get(target)
            .fitness()
            .ok_or(Error::Unevaluated { index: target })?;
        if child_fit >= target_fit {
            pop.replace(target, child);
            replaced += 1;
        }
    }
    Ok(replaced)
}

pub(crate) fn generation(
    params: &HboaParams,
    pop: &mut Population,
    ctx: &mut GenContext<'_>,
) -> Result<()> {
    let n = pop.len();
    let selected = select_tournament(pop, params.tournament_size, n, ctx.rng)?;
    let build = build_network(&selected)?;
    ctx.charge(build.metric_evaluations);
    let count = ((n as f64 * params.offspring_fraction).floor() as usize).max(1);
    let mut offspring = sample_network(&build.model, count, ctx.rng)?;
    ctx.charge(count as u64);
    ctx.evaluate_all(&mut offspring)?;
    let window = params.rtr_window.resolve(ctx.string_size(), n);
    rtr_replace(pop, offspring.into_members(), window, ctx.rng)?;
    Ok(())
}
