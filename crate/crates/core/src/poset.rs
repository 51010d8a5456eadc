//! Right-directed index posets.
//!
//! One concrete element shape (a finite set of enumeration indices plus
//! a level) covers every order the kernel needs: the naturals, finite
//! subsets of an enumerated singularity set ordered by inclusion, and
//! the example-one pairs where growing the subset and shrinking bump
//! supports both move upward. Joins always exist, which is what makes
//! the vanishing ideals closed under addition.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PosetElem {
    pub set: BTreeSet<u64>,
    pub level: u64,
}

impl PosetElem {
    pub fn nat(level: u64) -> Self {
        PosetElem { set: BTreeSet::new(), level }
    }

    pub fn subset(indices: impl IntoIterator<Item = u64>) -> Self {
        PosetElem { set: indices.into_iter().collect(), level: 0 }
    }

    pub fn subset_level(indices: impl IntoIterator<Item = u64>, level: u64) -> Self {
        PosetElem { set: indices.into_iter().collect(), level }
    }
}

impl fmt::Display for PosetElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.set.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}@{}", self.level)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PosetKind {
    /// L = N with the usual order; only the level field matters.
    Naturals,
    /// Nonvoid finite subsets of 0..universe ordered by inclusion.
    FiniteSubsets { universe: u64 },
    /// Pairs (subset, level): subset grows, level tracks shrinking
    /// support scales. Ordered componentwise.
    SubsetsWithLevels { universe: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexPoset {
    pub kind: PosetKind,
    pub label: String,
}

impl IndexPoset {
    pub fn naturals() -> Self {
        IndexPoset { kind: PosetKind::Naturals, label: "N".into() }
    }

    pub fn finite_subsets(universe: u64, label: impl Into<String>) -> Self {
        IndexPoset { kind: PosetKind::FiniteSubsets { universe }, label: label.into() }
    }

    pub fn subsets_with_levels(universe: u64, label: impl Into<String>) -> Self {
        IndexPoset { kind: PosetKind::SubsetsWithLevels { universe }, label: label.into() }
    }

    fn universe(&self) -> u64 {
        match self.kind {
            PosetKind::Naturals => 0,
            PosetKind::FiniteSubsets { universe } | PosetKind::SubsetsWithLevels { universe } => universe,
        }
    }

    pub fn leq(&self, a: &PosetElem, b: &PosetElem) -> bool {
        match self.kind {
            PosetKind::Naturals => a.level <= b.level,
            PosetKind::FiniteSubsets { .. } => a.set.is_subset(&b.set),
            PosetKind::SubsetsWithLevels { .. } => a.set.is_subset(&b.set) && a.level <= b.level,
        }
    }

    /// An upper bound of both arguments (right directedness).
    pub fn join(&self, a: &PosetElem, b: &PosetElem) -> PosetElem {
        PosetElem {
            set: a.set.union(&b.set).copied().collect(),
            level: a.level.max(b.level),
        }
    }

    /// Canonical ascending ladder of threshold candidates.
    pub fn chain(&self, j: u64) -> PosetElem {
        match self.kind {
            PosetKind::Naturals => PosetElem::nat(j),
            PosetKind::FiniteSubsets { universe } => {
                PosetElem::subset(0..=(j.min(universe.saturating_sub(1))))
            }
            PosetKind::SubsetsWithLevels { universe } => {
                PosetElem::subset_level(0..=(j.min(universe.saturating_sub(1))), j)
            }
        }
    }

    /// Deterministic sample of elements ≥ `from`, starting with `from`
    /// itself. The sample climbs in every available direction so that a
    /// budgeted tail examination sees genuinely larger indices.
    pub fn successors_sample(&self, from: &PosetElem, budget: usize) -> Vec<PosetElem> {
        let mut out = Vec::with_capacity(budget.max(1));
        out.push(from.clone());
        let universe = self.universe();
        match self.kind {
            PosetKind::Naturals => {
                for k in 1..budget as u64 {
                    out.push(PosetElem::nat(from.level + k));
                }
            }
            PosetKind::FiniteSubsets { .. } => {
                let mut cur = from.set.clone();
                let mut next = 0u64;
                while out.len() < budget {
                    while next < universe && cur.contains(&next) {
                        next += 1;
                    }
                    if next >= universe {
                        break;
                    }
                    cur.insert(next);
                    out.push(PosetElem { set: cur.clone(), level: from.level });
                }
            }
            PosetKind::SubsetsWithLevels { .. } => {
                let mut cur = from.set.clone();
                let mut next = 0u64;
                let mut level = from.level;
                while out.len() < budget {
                    level += 1;
                    while next < universe && cur.contains(&next) {
                        next += 1;
                    }
                    if next < universe {
                        cur.insert(next);
                        next += 1;
                    }
                    out.push(PosetElem { set: cur.clone(), level });
                }
            }
        }
        out
    }
}
