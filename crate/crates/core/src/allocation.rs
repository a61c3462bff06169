//! Welfare maximization and the optimal allocation tree.
//!
//! Buyers demand one unit and items are homogeneous, so every welfare program
//! here is solved exactly by ranking: forced winners first, remaining slots to
//! the best-ranked eligible participants. Ranking is canonical everywhere:
//! descending reported valuation, then ascending id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::critical::{precedes, CriticalError, CriticalStructure};
use crate::network::{participants, ActionProfile, BuyerId, Network};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocationError {
    #[error("infeasible welfare program: {0}")]
    InfeasibleProgram(String),
    #[error(transparent)]
    Critical(#[from] CriticalError),
}

/// Canonical rank comparison: `Less` means `a` ranks ahead of `b`.
pub fn rank_cmp<V: Value>(profile: &ActionProfile<V>, a: BuyerId, b: BuyerId) -> Ordering {
    let va = profile.value_of(a);
    let vb = profile.value_of(b);
    vb.total_cmp(va).then(a.cmp(&b))
}

/// Sorts buyers best-first under the canonical rank.
pub fn rank_sorted<V: Value>(profile: &ActionProfile<V>, buyers: impl IntoIterator<Item = BuyerId>) -> Vec<BuyerId> {
    let mut v: Vec<BuyerId> = buyers.into_iter().collect();
    v.sort_by(|&a, &b| rank_cmp(profile, a, b));
    v
}

/// A set of winners and the sum of their reported valuations.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<V> {
    pub winners: BTreeSet<BuyerId>,
    pub welfare: V,
}

/// Welfare maximization with some buyers removed and some forced to win.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WelfareProgram {
    pub excluded: BTreeSet<BuyerId>,
    pub forced: BTreeSet<BuyerId>,
    pub k: usize,
}

impl WelfareProgram {
    pub fn unconstrained(k: usize) -> Self {
        Self { k, ..Self::default() }
    }
}

/// Participants in canonical rank order, reused across many programs.
#[derive(Debug, Clone)]
pub struct Ranking {
    order: Vec<BuyerId>,
    members: BTreeSet<BuyerId>,
}

impl Ranking {
    pub fn new<V: Value>(profile: &ActionProfile<V>, members: &BTreeSet<BuyerId>) -> Self {
        Self { order: rank_sorted(profile, members.iter().copied()), members: members.clone() }
    }

    pub fn order(&self) -> &[BuyerId] {
        &self.order
    }

    pub fn members(&self) -> &BTreeSet<BuyerId> {
        &self.members
    }

    pub fn solve<V: Value>(
        &self,
        profile: &ActionProfile<V>,
        prog: &WelfareProgram,
    ) -> Result<Allocation<V>, AllocationError> {
        if prog.forced.len() > prog.k {
            return Err(AllocationError::InfeasibleProgram(format!(
                "{} forced winners exceed {} items",
                prog.forced.len(),
                prog.k
            )));
        }
        if let Some(i) = prog.forced.intersection(&prog.excluded).next() {
            return Err(AllocationError::InfeasibleProgram(format!("buyer {i} is both forced and excluded")));
        }
        if let Some(i) = prog.forced.iter().find(|i| !self.members.contains(i)) {
            return Err(AllocationError::InfeasibleProgram(format!("forced buyer {i} does not participate")));
        }
        let mut winners = prog.forced.clone();
        let free = prog.k - prog.forced.len();
        winners.extend(
            self.order.iter().filter(|i| !prog.excluded.contains(i) && !prog.forced.contains(i)).take(free).copied(),
        );
        let welfare = winners.iter().fold(V::zero(), |acc, &i| acc + profile.value_of(i).clone());
        Ok(Allocation { winners, welfare })
    }
}

/// Welfare-maximizing allocation of `k` items among participants.
pub fn efficient_allocation<V: Value>(net: &Network<V>, profile: &ActionProfile<V>, k: usize) -> Allocation<V> {
    constrained_welfare(net, profile, &WelfareProgram::unconstrained(k)).expect("unconstrained program is feasible")
}

/// Welfare-maximizing allocation subject to `prog`.
pub fn constrained_welfare<V: Value>(
    net: &Network<V>,
    profile: &ActionProfile<V>,
    prog: &WelfareProgram,
) -> Result<Allocation<V>, AllocationError> {
    Ranking::new(profile, &participants(net, profile)).solve(profile, prog)
}

/// The `k` best-ranked critical children of `i`.
pub fn top_k_critical_children<V: Value>(
    cs: &CriticalStructure,
    profile: &ActionProfile<V>,
    i: BuyerId,
    k: usize,
) -> Result<Vec<BuyerId>, CriticalError> {
    let mut ranked = rank_sorted(profile, cs.children(i)?.iter().copied());
    ranked.truncate(k);
    Ok(ranked)
}

/// Which critical children enter the competitor closure besides the top-`k`
/// children themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosureRule {
    /// Critical children of the in-between parents and of the top-`k`
    /// children: `T ∪ P ∪ C(P ∪ T)`. The closure then contains the down-set
    /// of every top-`k` child.
    #[default]
    WithTopDescendants,
    /// Critical children of the in-between parents only: `T ∪ P ∪ C(P)`.
    ParentsOnly,
}

/// Competitors excluded when deciding whether `i` keeps an item: her top-`k`
/// critical children `T`, the critical parents of `T` strictly below `i`, and
/// all critical children of those parents (and of `T`, depending on `rule`).
pub fn competitor_closure<V: Value>(
    cs: &CriticalStructure,
    profile: &ActionProfile<V>,
    i: BuyerId,
    k: usize,
) -> Result<BTreeSet<BuyerId>, CriticalError> {
    competitor_closure_with(cs, profile, i, k, ClosureRule::default())
}

pub fn competitor_closure_with<V: Value>(
    cs: &CriticalStructure,
    profile: &ActionProfile<V>,
    i: BuyerId,
    k: usize,
    rule: ClosureRule,
) -> Result<BTreeSet<BuyerId>, CriticalError> {
    let top = top_k_critical_children(cs, profile, i, k)?;
    let mut between = BTreeSet::new();
    for &j in &top {
        between.extend(cs.parents(j)?.iter().copied().filter(|&l| precedes(cs, i, l)));
    }
    let mut closure: BTreeSet<BuyerId> = top.iter().copied().collect();
    for &l in &between {
        closure.extend(cs.children(l)?.iter().copied());
    }
    if rule == ClosureRule::WithTopDescendants {
        for &j in &top {
            closure.extend(cs.children(j)?.iter().copied());
        }
    }
    closure.extend(between);
    Ok(closure)
}

/// Optimal allocation tree: efficient winners and their critical parents,
/// rooted at the seller, with per-node weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationTree<V> {
    efficient: BTreeSet<BuyerId>,
    parent_of: BTreeMap<BuyerId, BuyerId>,
    /// Keyed by node, including [`BuyerId::SELLER`]; children in ascending id.
    children_of: BTreeMap<BuyerId, Vec<BuyerId>>,
    weight: BTreeMap<BuyerId, usize>,
    value_of: BTreeMap<BuyerId, V>,
}

impl<V: Value> AllocationTree<V> {
    pub fn root(&self) -> BuyerId {
        BuyerId::SELLER
    }

    /// Efficient winners (`N^opt`).
    pub fn efficient_winners(&self) -> &BTreeSet<BuyerId> {
        &self.efficient
    }

    pub fn nodes(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.parent_of.keys().copied()
    }

    pub fn contains(&self, i: BuyerId) -> bool {
        self.parent_of.contains_key(&i)
    }

    /// Tree parent; [`BuyerId::SELLER`] for children of the root.
    pub fn parent(&self, i: BuyerId) -> Option<BuyerId> {
        self.parent_of.get(&i).copied()
    }

    pub fn children(&self, i: BuyerId) -> &[BuyerId] {
        self.children_of.get(&i).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Initial weight: efficient winners in the subtree rooted at `i`.
    pub fn weight(&self, i: BuyerId) -> usize {
        self.weight.get(&i).copied().unwrap_or(0)
    }

    pub fn weights(&self) -> &BTreeMap<BuyerId, usize> {
        &self.weight
    }

    pub fn value(&self, i: BuyerId) -> Option<&V> {
        self.value_of.get(&i)
    }

    /// Nodes of the subtree rooted at `i`, `i` included, in preorder.
    pub fn subtree(&self, i: BuyerId) -> Vec<BuyerId> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children(v).iter().rev().copied());
        }
        out
    }
}

/// Builds the optimal allocation tree for `k` items.
pub fn build_allocation_tree<V: Value>(
    net: &Network<V>,
    profile: &ActionProfile<V>,
    cs: &CriticalStructure,
    k: usize,
) -> Result<AllocationTree<V>, CriticalError> {
    let efficient = efficient_allocation(net, profile, k).winners;
    build_tree_from_winners(profile, cs, efficient)
}

pub(crate) fn build_tree_from_winners<V: Value>(
    profile: &ActionProfile<V>,
    cs: &CriticalStructure,
    efficient: BTreeSet<BuyerId>,
) -> Result<AllocationTree<V>, CriticalError> {
    let mut nodes = efficient.clone();
    for &i in &efficient {
        nodes.extend(cs.parents(i)?.iter().copied());
    }
    let mut parent_of = BTreeMap::new();
    let mut children_of: BTreeMap<BuyerId, Vec<BuyerId>> = BTreeMap::new();
    children_of.insert(BuyerId::SELLER, Vec::new());
    for &i in &nodes {
        // Parents are ordered seller-outward, so the last tree member is the
        // closest critical parent.
        let parent = cs.parents(i)?.iter().rev().find(|p| nodes.contains(p)).copied().unwrap_or(BuyerId::SELLER);
        parent_of.insert(i, parent);
        children_of.entry(parent).or_default().push(i);
        children_of.entry(i).or_default();
    }
    let mut weight: BTreeMap<BuyerId, usize> = nodes.iter().map(|&i| (i, 0)).collect();
    for &w in &efficient {
        *weight.get_mut(&w).expect("tree node") += 1;
        for p in cs.parents(w)? {
            *weight.get_mut(p).expect("tree node") += 1;
        }
    }
    let value_of = nodes.iter().map(|&i| (i, profile.value_of(i).clone())).collect();
    Ok(AllocationTree { efficient, parent_of, children_of, weight, value_of })
}
