//! Pseudo-Boolean search over the attack indicators `b`.
//!
//! The store holds one cardinality budget `sum b_i <= k` plus learned
//! at-least-one and all-zero constraints. Search is a complete depth-first
//! DPLL with counting propagation. A node is pruned once a greedy packing of
//! pairwise disjoint unsatisfied at-least-one constraints needs more ones than
//! the budget has left.
//!
//! Branching: take the most recently added unsatisfied at-least-one
//! constraint and decide its first free member, in the order the constraint
//! lists them, trying 1 before 0. Variables no constraint asks for stay 0.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn empty(p: usize) -> Self {
        Bits {
            words: vec![0; p.div_ceil(64).max(1)],
        }
    }

    fn full(p: usize) -> Self {
        let mut b = Bits::empty(p);
        for i in 0..p {
            b.set(i);
        }
        b
    }

    fn from_indices(p: usize, idx: &[usize]) -> Self {
        let mut b = Bits::empty(p);
        for &i in idx {
            b.set(i);
        }
        b
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    #[inline]
    fn intersects(&self, other: &Bits) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// Popcount of `self & !mask`, stopping once it exceeds 1.
    #[inline]
    fn count_without_upto2(&self, mask: &Bits) -> u32 {
        let mut c = 0;
        for (a, b) in self.words.iter().zip(&mask.words) {
            c += (a & !b).count_ones();
            if c > 1 {
                return c;
            }
        }
        c
    }

    /// Index of the single bit in `self & !mask`, if any.
    fn first_without(&self, mask: &Bits) -> Option<usize> {
        for (w, (a, b)) in self.words.iter().zip(&mask.words).enumerate() {
            let v = a & !b;
            if v != 0 {
                return Some(w * 64 + v.trailing_zeros() as usize);
            }
        }
        None
    }

    /// `self & !mask` is disjoint from `used`; if so, add it to `used`.
    #[inline]
    fn pack_into(&self, mask: &Bits, used: &mut Bits) -> bool {
        if self
            .words
            .iter()
            .zip(&mask.words)
            .zip(&used.words)
            .any(|((a, m), u)| a & !m & u != 0)
        {
            return false;
        }
        for ((u, a), m) in used.words.iter_mut().zip(&self.words).zip(&mask.words) {
            *u |= a & !m;
        }
        true
    }
}

/// A pseudo-Boolean constraint over the indicators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum PbConstraint {
    /// `sum_{i in sensors} b_i <= k`; the budget.
    AtMostK { sensors: Vec<usize>, k: usize },
    /// `sum_{i in sensors} b_i >= 1`
    AtLeastOne(Vec<usize>),
    /// `b_i = 0` for every listed sensor.
    AllZero(Vec<usize>),
}

impl PbConstraint {
    pub fn holds(&self, b: &[bool]) -> bool {
        match self {
            PbConstraint::AtMostK { sensors, k } => sensors.iter().filter(|&&i| b[i]).count() <= *k,
            PbConstraint::AtLeastOne(s) => s.iter().any(|&i| b[i]),
            PbConstraint::AllZero(s) => s.iter().all(|&i| !b[i]),
        }
    }

    fn sensors(&self) -> &[usize] {
        match self {
            PbConstraint::AtMostK { sensors, .. } => sensors,
            PbConstraint::AtLeastOne(s) | PbConstraint::AllZero(s) => s,
        }
    }
}

impl From<&crate::theory::Certificate> for PbConstraint {
    fn from(c: &crate::theory::Certificate) -> Self {
        match c.kind {
            crate::theory::CertificateKind::AtLeastOneAttacked => {
                PbConstraint::AtLeastOne(c.sensors.clone())
            }
            crate::theory::CertificateKind::AllUnattacked => {
                PbConstraint::AllZero(c.sensors.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SatStats {
    pub solves: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatAssignment {
    pub b: Vec<bool>,
    /// Decisions `(variable, value)` on the path to this model, in order.
    pub trail: Vec<(usize, bool)>,
}

impl SatAssignment {
    pub fn support(&self) -> Vec<usize> {
        self.b
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn unattacked(&self) -> Vec<usize> {
        self.b
            .iter()
            .enumerate()
            .filter(|(_, &v)| !v)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatOutcome {
    Sat(SatAssignment),
    Unsat,
}

#[derive(Debug, Clone)]
pub struct SatInstance {
    p: usize,
    budget: usize,
    clauses: Vec<Bits>,
    // members of each clause in preference order
    orders: Vec<Vec<usize>>,
    seen: HashSet<Bits>,
    fixed_zero: Bits,
    store: Vec<PbConstraint>,
    stats: SatStats,
}

struct Search<'a> {
    inst: &'a SatInstance,
    stats: SatStats,
    trail: Vec<(usize, bool)>,
}

impl SatInstance {
    /// Instance over `p` indicators holding only the budget `sum b_i <= s_bar`.
    pub fn new(p: usize, s_bar: usize) -> Result<Self> {
        if s_bar > p {
            return Err(Error::InvalidArgument(format!(
                "s_bar = {s_bar} exceeds p = {p}"
            )));
        }
        Ok(SatInstance {
            p,
            budget: s_bar,
            clauses: Vec::new(),
            orders: Vec::new(),
            seen: HashSet::new(),
            fixed_zero: Bits::empty(p),
            store: vec![PbConstraint::AtMostK {
                sensors: (0..p).collect(),
                k: s_bar,
            }],
            stats: SatStats::default(),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn constraints(&self) -> &[PbConstraint] {
        &self.store
    }

    pub fn stats(&self) -> SatStats {
        self.stats
    }

    pub fn add_constraint(&mut self, c: PbConstraint) -> Result<()> {
        if let Some(&i) = c.sensors().iter().find(|&&i| i >= self.p) {
            return Err(Error::InvalidArgument(format!(
                "sensor {i} out of range for p = {}",
                self.p
            )));
        }
        match &c {
            PbConstraint::AtMostK { .. } => {
                return Err(Error::InvalidArgument(
                    "the budget constraint is fixed at construction".into(),
                ))
            }
            PbConstraint::AtLeastOne(s) => {
                let bits = Bits::from_indices(self.p, s);
                if self.seen.insert(bits.clone()) {
                    self.clauses.push(bits);
                    self.orders.push(s.clone());
                }
            }
            PbConstraint::AllZero(s) => {
                for &i in s {
                    self.fixed_zero.set(i);
                }
            }
        }
        self.store.push(c);
        Ok(())
    }

    /// Complete search for an assignment satisfying every stored constraint.
    pub fn solve(&mut self) -> SatOutcome {
        let mut search = Search {
            inst: self,
            stats: SatStats::default(),
            trail: Vec::new(),
        };
        let found = search.dfs(Bits::empty(self.p), self.fixed_zero.clone());
        let mut stats = search.stats;
        let trail = std::mem::take(&mut search.trail);
        stats.solves = 1;
        self.stats.solves += stats.solves;
        self.stats.decisions += stats.decisions;
        self.stats.propagations += stats.propagations;
        self.stats.conflicts += stats.conflicts;
        match found {
            Some(ones) => {
                let b = (0..self.p).map(|i| ones.get(i)).collect();
                SatOutcome::Sat(SatAssignment { b, trail })
            }
            None => SatOutcome::Unsat,
        }
    }

    /// Check an assignment against every stored constraint.
    pub fn satisfies(&self, b: &[bool]) -> bool {
        b.len() == self.p && self.store.iter().all(|c| c.holds(b))
    }
}

impl Search<'_> {
    /// Propagate to a fixpoint and apply the packing bound; `false` on conflict.
    fn propagate(&mut self, ones: &mut Bits, zeros: &mut Bits) -> bool {
        let p = self.inst.p;
        let k = self.inst.budget as u32;
        let all = Bits::full(p);
        loop {
            let n_ones = ones.count();
            if n_ones > k {
                return false;
            }
            if n_ones == k {
                // every unassigned variable must be 0
                for ((z, o), a) in zeros.words.iter_mut().zip(&ones.words).zip(&all.words) {
                    let add = a & !o & !*z;
                    self.stats.propagations += add.count_ones() as u64;
                    *z |= add;
                }
            }
            let mut changed = false;
            for clause in &self.inst.clauses {
                if clause.intersects(ones) {
                    continue;
                }
                match clause.count_without_upto2(zeros) {
                    0 => return false,
                    1 => {
                        let v = clause.first_without(zeros).expect("one free literal");
                        ones.set(v);
                        self.stats.propagations += 1;
                        changed = true;
                        if ones.count() > k {
                            return false;
                        }
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        // disjoint unsatisfied clauses each need their own one
        let remaining = k - ones.count();
        let mut used = Bits::empty(p);
        let mut needed = 0u32;
        for clause in &self.inst.clauses {
            if clause.intersects(ones) {
                continue;
            }
            if clause.pack_into(zeros, &mut used) {
                needed += 1;
                if needed > remaining {
                    return false;
                }
            }
        }
        true
    }

    fn dfs(&mut self, mut ones: Bits, mut zeros: Bits) -> Option<Bits> {
        if !self.propagate(&mut ones, &mut zeros) {
            self.stats.conflicts += 1;
            return None;
        }
        // newest unsatisfied constraint, its first free member, tried at 1 first;
        // nothing left to cover leaves the rest at 0
        let pending = self
            .inst
            .clauses
            .iter()
            .zip(&self.inst.orders)
            .rev()
            .find(|(c, _)| !c.intersects(&ones));
        let Some((_, order)) = pending else {
            return Some(ones);
        };
        let var = *order
            .iter()
            .find(|&&i| !zeros.get(i))
            .expect("propagation leaves a free member");
        for value in [true, false] {
            self.stats.decisions += 1;
            self.trail.push((var, value));
            let (mut o, mut z) = (ones.clone(), zeros.clone());
            if value {
                o.set(var);
            } else {
                z.set(var);
            }
            if let Some(found) = self.dfs(o, z) {
                return Some(found);
            }
            self.trail.pop();
        }
        None
    }
}

/// Enumerate every assignment of `p <= 20` indicators satisfying `constraints`.
pub fn enumerate_models(p: usize, constraints: &[PbConstraint]) -> Vec<Vec<bool>> {
    assert!(p <= 20, "exhaustive enumeration is limited to p <= 20");
    (0u32..1 << p)
        .map(|mask| (0..p).map(|i| mask >> i & 1 == 1).collect::<Vec<bool>>())
        .filter(|b| constraints.iter().all(|c| c.holds(b)))
        .collect()
}
