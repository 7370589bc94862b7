//! Truncated state spaces: hyper-rectangles `H(b)` and constraint-shaped
//! subsets grown by breadth-first search.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::ReactionNetwork;

/// Per-species copy-number caps `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct FidelityBound(pub Vec<i64>);

impl FidelityBound {
    pub fn new(b: Vec<i64>) -> Result<Self> {
        if b.is_empty() || b.iter().any(|&v| v < 0) {
            return Err(Error::config(format!("invalid fidelity bound {b:?}")));
        }
        Ok(FidelityBound(b))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().zip(&self.0).all(|(&v, &b)| v >= 0 && v <= b)
    }

    /// Number of states in `H(b)`, or `None` on overflow.
    pub fn rectangle_size(&self) -> Option<u64> {
        self.0
            .iter()
            .try_fold(1u64, |acc, &b| acc.checked_mul(b as u64 + 1))
    }

    /// Elementwise `self <= other`.
    pub fn le(&self, other: &FidelityBound) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// Linear shape function `w . x <= threshold`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub weights: Vec<i64>,
    pub threshold: i64,
}

impl LinearConstraint {
    pub fn eval(&self, x: &[i64]) -> i64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }

    pub fn satisfied(&self, x: &[i64]) -> bool {
        self.eval(x) <= self.threshold
    }
}

/// Enumerated states with an exact inverse index.
#[derive(Debug, Clone)]
pub struct TruncatedStateSpace {
    n_species: usize,
    states: Vec<i64>,
    index: HashMap<u64, usize>,
    radix: Vec<u64>,
    bound: FidelityBound,
    constraints: Vec<LinearConstraint>,
}

impl TruncatedStateSpace {
    fn empty(bound: FidelityBound, constraints: Vec<LinearConstraint>) -> Result<Self> {
        if bound.rectangle_size().is_none() {
            return Err(Error::config(format!("bound {:?} overflows the state key", bound.0)));
        }
        let n = bound.len();
        let mut radix = vec![1u64; n];
        for i in (0..n.saturating_sub(1)).rev() {
            radix[i] = radix[i + 1] * (bound.0[i + 1] as u64 + 1);
        }
        Ok(TruncatedStateSpace {
            n_species: n,
            states: Vec::new(),
            index: HashMap::new(),
            radix,
            bound,
            constraints,
        })
    }

    fn key(&self, x: &[i64]) -> u64 {
        x.iter().zip(&self.radix).map(|(&v, &r)| v as u64 * r).sum()
    }

    fn push(&mut self, x: &[i64]) -> usize {
        let id = self.len();
        self.index.insert(self.key(x), id);
        self.states.extend_from_slice(x);
        id
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.n_species.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn num_species(&self) -> usize {
        self.n_species
    }

    pub fn bound(&self) -> &FidelityBound {
        &self.bound
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn state(&self, i: usize) -> &[i64] {
        &self.states[i * self.n_species..(i + 1) * self.n_species]
    }

    pub fn states(&self) -> impl Iterator<Item = &[i64]> {
        self.states.chunks_exact(self.n_species)
    }

    /// Flat copy of all states, `len() * num_species()` integers.
    pub fn as_flat(&self) -> &[i64] {
        &self.states
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.n_species || !self.bound.contains(x) {
            return None;
        }
        self.index.get(&self.key(x)).copied()
    }

    fn admits(&self, x: &[i64]) -> bool {
        self.bound.contains(x) && self.constraints.iter().all(|c| c.satisfied(x))
    }

    /// Appends every state reachable from the current set that satisfies
    /// the bound and the constraints.
    fn explore(&mut self, net: &ReactionNetwork, max_states: usize) -> Result<()> {
        let mut queue: VecDeque<usize> = (0..self.len()).collect();
        let mut y = vec![0i64; self.n_species];
        while let Some(i) = queue.pop_front() {
            for r in &net.reactions {
                let x = self.state(i);
                if !r.can_fire(x) {
                    continue;
                }
                for ((yk, xk), nu) in y.iter_mut().zip(x).zip(&r.net_stoich) {
                    *yk = xk + nu;
                }
                if !self.admits(&y) || self.index_of(&y).is_some() {
                    continue;
                }
                if self.len() >= max_states {
                    return Err(Error::Capacity {
                        states: self.len() + 1,
                        limit: max_states,
                        theta: Vec::new(),
                    });
                }
                let id = self.push(&y);
                queue.push_back(id);
            }
        }
        Ok(())
    }
}

/// All states of `H(b)` in lexicographic order (last species fastest).
pub fn build_rectangle_space(b: &FidelityBound, max_states: usize) -> Result<TruncatedStateSpace> {
    let size = b
        .rectangle_size()
        .filter(|&s| s <= max_states as u64)
        .ok_or_else(|| Error::Capacity {
            states: b.rectangle_size().map_or(usize::MAX, |s| s as usize),
            limit: max_states,
            theta: Vec::new(),
        })? as usize;
    let n = b.len();
    let constraints = (0..n)
        .map(|i| {
            let mut w = vec![0; n];
            w[i] = 1;
            LinearConstraint {
                weights: w,
                threshold: b.0[i],
            }
        })
        .collect();
    let mut space = TruncatedStateSpace::empty(b.clone(), constraints)?;
    space.states.reserve(size * n);
    let mut x = vec![0i64; n];
    for _ in 0..size {
        space.push(&x);
        for k in (0..n).rev() {
            if x[k] < b.0[k] {
                x[k] += 1;
                break;
            }
            x[k] = 0;
        }
    }
    Ok(space)
}

/// Builds the constraint-shaped set `{x in H(b) reachable from seeds | w_i.x <= c_i}`.
pub fn constrained_space(
    net: &ReactionNetwork,
    bound: &FidelityBound,
    seeds: &[Vec<i64>],
    constraints: Vec<LinearConstraint>,
    max_states: usize,
) -> Result<TruncatedStateSpace> {
    if bound.len() != net.num_species() {
        return Err(Error::config(format!(
            "bound has {} entries, network has {} species",
            bound.len(),
            net.num_species()
        )));
    }
    let mut space = TruncatedStateSpace::empty(bound.clone(), constraints)?;
    for s in seeds {
        if !bound.contains(s) {
            return Err(Error::config(format!(
                "seed state {s:?} lies outside the bound {:?}",
                bound.0
            )));
        }
        if space.index_of(s).is_none() {
            space.push(s);
        }
    }
    space.explore(net, max_states)?;
    Ok(space)
}

/// Default adaptive family: one constraint per species plus the total count,
/// with thresholds covering the seeds and one reaction step from them.
pub fn default_constraints(net: &ReactionNetwork, seeds: &[Vec<i64>]) -> Vec<LinearConstraint> {
    let n = net.num_species();
    let mut reach: Vec<Vec<i64>> = seeds.to_vec();
    for s in seeds {
        for r in &net.reactions {
            if r.can_fire(s) {
                reach.push(s.iter().zip(&r.net_stoich).map(|(a, b)| a + b).collect());
            }
        }
    }
    let mut constraints = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut w = vec![0; n];
        w[i] = 1;
        let c = reach.iter().map(|x| x[i]).max().unwrap_or(0).max(1);
        constraints.push(LinearConstraint {
            weights: w,
            threshold: c,
        });
    }
    let total = reach.iter().map(|x| x.iter().sum::<i64>()).max().unwrap_or(0).max(1);
    constraints.push(LinearConstraint {
        weights: vec![1; n],
        threshold: total,
    });
    constraints
}

/// Relaxes every threshold by `growth_factor` (rounded up, at least +1) and
/// appends the newly reachable states. Existing ordinals are preserved.
pub fn expand_state_set(
    space: &TruncatedStateSpace,
    growth_factor: f64,
    net: &ReactionNetwork,
    max_states: usize,
) -> Result<TruncatedStateSpace> {
    if !(growth_factor > 1.0) {
        return Err(Error::Contract(format!(
            "growth factor must exceed 1, got {growth_factor}"
        )));
    }
    let mut out = space.clone();
    for c in &mut out.constraints {
        let scaled = (c.threshold as f64 * growth_factor).ceil() as i64;
        c.threshold = scaled.max(c.threshold + 1);
    }
    out.explore(net, max_states)?;
    Ok(out)
}

/// True when no constraint excludes any state of `H(b)`.
pub fn constraints_cover_bound(space: &TruncatedStateSpace) -> bool {
    let b = &space.bound().0;
    space.constraints().iter().all(|c| {
        let max_f: i64 = c
            .weights
            .iter()
            .zip(b)
            .map(|(&w, &bi)| if w > 0 { w * bi } else { 0 })
            .sum();
        max_f <= c.threshold
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PropensityExpr, Reaction};

    fn births(n: usize) -> ReactionNetwork {
        let reactions = (0..n)
            .map(|i| {
                let mut p = vec![0; n];
                p[i] = 1;
                Reaction::new(format!("b{i}"), vec![0; n], p, PropensityExpr::MassAction { rate: 0 }).unwrap()
            })
            .collect();
        ReactionNetwork::new(
            "births",
            (0..n).map(|i| format!("S{i}")).collect(),
            vec!["k".into()],
            reactions,
            vec![(vec![0; n], 1.0)],
            (0..n).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rectangle_enumeration() {
        let s = build_rectangle_space(&FidelityBound::new(vec![2]).unwrap(), 100).unwrap();
        assert_eq!(s.len(), 3);
        let s = build_rectangle_space(&FidelityBound::new(vec![1, 1]).unwrap(), 100).unwrap();
        let states: Vec<Vec<i64>> = s.states().map(|x| x.to_vec()).collect();
        assert_eq!(states, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        for (i, x) in s.states().enumerate() {
            assert_eq!(s.index_of(x), Some(i));
        }
    }

    #[test]
    fn repressilator_top_level_size() {
        let b = FidelityBound::new(vec![50, 100, 100]).unwrap();
        assert_eq!(b.rectangle_size(), Some(520_251));
        let s = build_rectangle_space(&b, 1_000_000).unwrap();
        assert_eq!(s.len(), 51 * 101 * 101);
        assert_eq!(s.index_of(&[50, 100, 100]), Some(520_250));
        assert!(matches!(build_rectangle_space(&b, 1000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn one_dimensional_expansion() {
        let net = births(1);
        let b = FidelityBound::new(vec![10]).unwrap();
        let c = vec![LinearConstraint { weights: vec![1], threshold: 4 }];
        let s = constrained_space(&net, &b, &[vec![0]], c, 1000).unwrap();
        assert_eq!(s.len(), 5);
        let e = expand_state_set(&s, 2.0, &net, 1000).unwrap();
        assert_eq!(e.len(), 9);
        assert_eq!(e.state(8), &[8]);
        for i in 0..5 {
            assert_eq!(e.state(i), s.state(i));
        }
    }

    #[test]
    fn total_count_expansion_matches_lattice() {
        let net = births(2);
        let b = FidelityBound::new(vec![5, 4]).unwrap();
        let c = vec![LinearConstraint { weights: vec![1, 1], threshold: 3 }];
        let s = constrained_space(&net, &b, &[vec![0, 0]], c, 1000).unwrap();
        let e = expand_state_set(&s, 2.0, &net, 1000).unwrap();
        // brute-force lattice enumeration
        let mut expected = Vec::new();
        for x in 0..=5 {
            for y in 0..=4 {
                if x + y <= 6 {
                    expected.push((x, y));
                }
            }
        }
        assert_eq!(e.len(), expected.len());
        for (x, y) in expected {
            assert!(e.index_of(&[x, y]).is_some());
        }
    }

    #[test]
    fn covering_constraints_are_a_fixed_point() {
        let net = births(2);
        let b = FidelityBound::new(vec![3, 3]).unwrap();
        let rect = build_rectangle_space(&b, 100).unwrap();
        assert!(constraints_cover_bound(&rect));
        let e = expand_state_set(&rect, 1.5, &net, 100).unwrap();
        assert_eq!(e.as_flat(), rect.as_flat());
    }

    #[test]
    fn capacity_error_on_expansion() {
        let net = births(2);
        let b = FidelityBound::new(vec![100, 100]).unwrap();
        let c = vec![LinearConstraint { weights: vec![1, 1], threshold: 2 }];
        let s = constrained_space(&net, &b, &[vec![0, 0]], c, 50).unwrap();
        assert!(expand_state_set(&s, 10.0, &net, 50).unwrap_err().is_capacity());
    }
}
