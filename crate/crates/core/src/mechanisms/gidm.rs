//! Generalized information diffusion mechanism for `K ≥ 1` items.
//!
//! The seller hands each root child of the optimal allocation tree as many
//! items as it has efficient winners below it, then items travel down the
//! tree in LIFO order. A popped buyer keeps one item iff she wins the welfare
//! program that removes her competitor closure, keeps her winning critical
//! parents as winners, and keeps every efficient winner outside the closure
//! (other than the ones her parents already took from) as a winner. A buyer
//! who keeps an item without being owed one takes it from the lowest-ranked
//! efficient winner in her subtree that still holds an item.

use std::collections::{BTreeMap, BTreeSet};

use crate::allocation::{
    build_tree_from_winners, competitor_closure_with, rank_sorted, Allocation, AllocationTree, ClosureRule, Ranking,
    WelfareProgram,
};
use crate::critical::{critical_structure, precedes, CriticalStructure};
use crate::network::{check_feasible, participants, ActionProfile, BuyerId, Network};
use crate::value::Value;

use super::{MechanismError, Outcome, TraceEvent};

/// Constraint form of the two welfare programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintMode {
    /// Efficient winners outside the removed set and not taken from are
    /// forced to keep their items.
    #[default]
    Corrected,
    /// Superseded form: buyers whose items were taken are forced to lose and
    /// nobody else is forced. Non-conforming; kept for differential testing.
    PreCorrection,
}

/// Order in which siblings are pushed onto the stack (the last pushed pops
/// first).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PushOrder {
    #[default]
    AscendingId,
    /// Push in the order buyers appear in the list; unlisted buyers go last
    /// in ascending id.
    Ranked(Vec<BuyerId>),
}

impl PushOrder {
    fn arrange(&self, siblings: &[BuyerId]) -> Vec<BuyerId> {
        let mut out = siblings.to_vec();
        match self {
            PushOrder::AscendingId => out.sort(),
            PushOrder::Ranked(list) => {
                out.sort_by_key(|id| (list.iter().position(|x| x == id).unwrap_or(usize::MAX), *id));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GidmConfig {
    pub constraints: ConstraintMode,
    pub closure: ClosureRule,
    pub push_order: PushOrder,
}

/// What a popped buyer saw and decided.
#[derive(Debug, Clone, PartialEq)]
pub struct PopSnapshot<V> {
    /// Items handed to the buyer (her weight at pop time).
    pub items: usize,
    pub received: BTreeSet<BuyerId>,
    pub out: BTreeSet<BuyerId>,
    pub closure: BTreeSet<BuyerId>,
    /// The buyer and her critical children.
    pub down: BTreeSet<BuyerId>,
    /// Welfare program without the competitor closure.
    pub without_closure: Allocation<V>,
    /// Welfare program without the buyer and her critical children.
    pub without_down: Allocation<V>,
    pub wins: bool,
    /// Children handed items, with the item counts.
    pub pushed: Vec<(BuyerId, usize)>,
}

/// Bookkeeping of one allocation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PassState<V> {
    pub pop_order: Vec<BuyerId>,
    /// Winners in the order they were added.
    pub winners: Vec<BuyerId>,
    pub get_from: BTreeMap<BuyerId, BuyerId>,
    /// Efficient winners whose item was taken by a critical parent.
    pub taken_out: BTreeSet<BuyerId>,
    pub snapshots: BTreeMap<BuyerId, PopSnapshot<V>>,
    /// Weights after the pass.
    pub weights: BTreeMap<BuyerId, usize>,
    /// Critical parents of winners who did not win themselves.
    pub parents_of_winners: BTreeSet<BuyerId>,
}

impl<V> PassState<V> {
    pub fn in_payment_scope(&self, i: BuyerId) -> bool {
        self.get_from.contains_key(&i) || self.parents_of_winners.contains(&i)
    }
}

/// Full result of a GIDM run.
#[derive(Debug, Clone, PartialEq)]
pub struct GidmRun<V> {
    pub outcome: Outcome<V>,
    pub tree: AllocationTree<V>,
    pub pass: PassState<V>,
    pub critical: CriticalStructure,
}

#[derive(Debug, Clone, Default)]
pub struct Gidm {
    config: GidmConfig,
}

/// Runs GIDM with the default configuration; the item count comes from `net`.
pub fn run_gidm<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> Result<Outcome<V>, MechanismError> {
    Gidm::default().run(net, profile).map(|r| r.outcome)
}

impl Gidm {
    pub fn new(config: GidmConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &GidmConfig {
        &self.config
    }

    pub fn run<V: Value>(&self, net: &Network<V>, profile: &ActionProfile<V>) -> Result<GidmRun<V>, MechanismError> {
        check_feasible(net, profile)?;
        let k = net.item_count();
        let members = participants(net, profile);
        let cs = critical_structure(net, profile);
        let ranking = Ranking::new(profile, &members);
        let efficient = ranking.solve(profile, &WelfareProgram::unconstrained(k))?.winners;
        let tree = build_tree_from_winners(profile, &cs, efficient.clone())?;

        let mut weight = tree.weights().clone();
        let mut trace = Vec::new();
        let mut pass = PassState {
            pop_order: Vec::new(),
            winners: Vec::new(),
            get_from: BTreeMap::new(),
            taken_out: BTreeSet::new(),
            snapshots: BTreeMap::new(),
            weights: BTreeMap::new(),
            parents_of_winners: BTreeSet::new(),
        };
        let mut stack = Vec::new();
        for c in self.config.push_order.arrange(tree.children(BuyerId::SELLER)) {
            if weight[&c] > 0 {
                trace.push(TraceEvent::Give { from: BuyerId::SELLER, to: c, items: weight[&c] });
                stack.push(c);
            }
        }

        while let Some(i) = stack.pop() {
            let items = weight[&i];
            pass.pop_order.push(i);
            trace.push(TraceEvent::Pop { buyer: i, items });

            let received: BTreeSet<BuyerId> =
                cs.parents(i)?.iter().copied().filter(|p| pass.get_from.contains_key(p)).collect();
            let out: BTreeSet<BuyerId> = received
                .iter()
                .filter_map(|l| pass.get_from.get(l).copied())
                .filter(|j| !received.contains(j))
                .collect();
            let closure = competitor_closure_with(&cs, profile, i, k, self.config.closure)?;
            let mut down = cs.children(i)?.clone();
            down.insert(i);

            let (closure_prog, down_prog) = self.programs(k, i, &efficient, &received, &out, &closure, &down);
            let without_closure = ranking.solve(profile, &closure_prog)?;
            let without_down = ranking.solve(profile, &down_prog)?;
            let wins = without_closure.winners.contains(&i);
            trace.push(TraceEvent::Evaluate {
                buyer: i,
                received: received.clone(),
                out: out.clone(),
                closure: closure.clone(),
                welfare_winners: without_closure.winners.clone(),
                wins,
            });

            if wins {
                pass.winners.push(i);
                trace.push(TraceEvent::JoinWinners { buyer: i });
                let child_sum: usize = tree.children(i).iter().map(|c| weight[c]).sum();
                let source = if child_sum + 1 == items {
                    i
                } else {
                    let source = take_from(&tree, profile, &efficient, &pass.taken_out, i, items)?;
                    let mut affected: Vec<BuyerId> =
                        cs.parents(source)?.iter().copied().filter(|&j| precedes(&cs, i, j)).collect();
                    affected.push(source);
                    for j in affected {
                        let w = weight.get_mut(&j).ok_or_else(|| {
                            MechanismError::InternalInvariant(format!("buyer {j} is not a tree node"))
                        })?;
                        *w = w.checked_sub(1).ok_or_else(|| {
                            MechanismError::InternalInvariant(format!("weight of {j} would become negative"))
                        })?;
                        trace.push(TraceEvent::WeightDecrement { buyer: j, weight: *w });
                    }
                    pass.taken_out.insert(source);
                    source
                };
                pass.get_from.insert(i, source);
                trace.push(TraceEvent::GetFrom { buyer: i, from: source });
            }

            let mut pushed = Vec::new();
            for c in self.config.push_order.arrange(tree.children(i)) {
                let w = weight[&c];
                if w > 0 {
                    trace.push(TraceEvent::Give { from: i, to: c, items: w });
                    stack.push(c);
                    pushed.push((c, w));
                }
            }
            pass.snapshots.insert(
                i,
                PopSnapshot { items, received, out, closure, down, without_closure, without_down, wins, pushed },
            );
        }
        pass.weights = weight;

        for &w in &pass.winners {
            pass.parents_of_winners.extend(cs.parents(w)?.iter().copied().filter(|p| !pass.get_from.contains_key(p)));
        }
        let mut payments: BTreeMap<BuyerId, V> = net.buyer_ids().map(|i| (i, V::zero())).collect();
        for (&i, snap) in &pass.snapshots {
            let pay = if snap.wins {
                snap.without_down.welfare.clone() - (snap.without_closure.welfare.clone() - profile.value_of(i).clone())
            } else if pass.parents_of_winners.contains(&i) {
                snap.without_down.welfare.clone() - snap.without_closure.welfare.clone()
            } else {
                continue;
            };
            payments.insert(i, pay);
        }
        if let Some(p) = pass.parents_of_winners.iter().find(|p| !pass.snapshots.contains_key(p)) {
            return Err(MechanismError::InternalInvariant(format!("critical parent {p} of a winner was never popped")));
        }
        let winners = pass.winners.iter().copied().collect();
        Ok(GidmRun { outcome: Outcome::from_parts(winners, payments, trace), tree, pass, critical: cs })
    }

    #[allow(clippy::too_many_arguments)]
    fn programs(
        &self,
        k: usize,
        i: BuyerId,
        efficient: &BTreeSet<BuyerId>,
        received: &BTreeSet<BuyerId>,
        out: &BTreeSet<BuyerId>,
        closure: &BTreeSet<BuyerId>,
        down: &BTreeSet<BuyerId>,
    ) -> (WelfareProgram, WelfareProgram) {
        match self.config.constraints {
            ConstraintMode::Corrected => {
                let mut forced_closure = received.clone();
                forced_closure
                    .extend(efficient.iter().copied().filter(|j| *j != i && !closure.contains(j) && !out.contains(j)));
                let mut forced_down = received.clone();
                forced_down.extend(efficient.iter().copied().filter(|j| !down.contains(j) && !out.contains(j)));
                (
                    WelfareProgram { excluded: closure.clone(), forced: forced_closure, k },
                    WelfareProgram { excluded: down.clone(), forced: forced_down, k },
                )
            }
            ConstraintMode::PreCorrection => {
                let mut excluded_closure = closure.clone();
                excluded_closure.extend(out.iter().copied().filter(|j| *j != i));
                let mut excluded_down = down.clone();
                excluded_down.extend(out.iter().copied());
                (
                    WelfareProgram { excluded: excluded_closure, forced: received.clone(), k },
                    WelfareProgram { excluded: excluded_down, forced: received.clone(), k },
                )
            }
        }
    }
}

/// Lowest-ranked efficient winner in the subtree of `i` still holding an item.
/// Exactly `items` such winners must remain, so this is also the `items`-th
/// best of them.
fn take_from<V: Value>(
    tree: &AllocationTree<V>,
    profile: &ActionProfile<V>,
    efficient: &BTreeSet<BuyerId>,
    taken: &BTreeSet<BuyerId>,
    i: BuyerId,
    items: usize,
) -> Result<BuyerId, MechanismError> {
    let holding =
        rank_sorted(profile, tree.subtree(i).into_iter().filter(|j| efficient.contains(j) && !taken.contains(j)));
    if holding.len() != items || items == 0 {
        return Err(MechanismError::InternalInvariant(format!(
            "buyer {i} holds {items} items but {} efficient winners below still hold one",
            holding.len()
        )));
    }
    Ok(holding[items - 1])
}
