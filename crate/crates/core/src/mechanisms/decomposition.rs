use std::collections::{BTreeMap, BTreeSet};

use crate::allocation::AllocationTree;
use crate::network::BuyerId;
use crate::value::Value;

use super::{Outcome, PassState};

/// A GIDM payment split around the still-holding efficient winners: the
/// payment equals `first - second`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaymentTerms<V> {
    /// Items handed to the buyer.
    pub items: usize,
    /// `(N^opt \ (down ∪ out)) ∪ received`.
    pub still: BTreeSet<BuyerId>,
    /// Welfare without the buyer's down-set, minus the still-holders.
    pub first: V,
    /// Welfare without the competitor closure, minus the still-holders and,
    /// for winners, the buyer's own report.
    pub second: V,
    pub is_winner: bool,
}

/// Payment terms of every buyer that paid or was paid under GIDM.
pub fn payment_decomposition<V: Value>(
    outcome: &Outcome<V>,
    pass: &PassState<V>,
    tree: &AllocationTree<V>,
) -> BTreeMap<BuyerId, PaymentTerms<V>> {
    pass.snapshots
        .keys()
        .copied()
        .filter(|&i| pass.in_payment_scope(i))
        .map(|i| (i, terms_for(outcome, pass, tree, i)))
        .collect()
}

/// Payment terms of any popped buyer, whether or not she is in payment scope.
/// Still-holders are efficient winners or winning parents, all tree nodes.
pub fn terms_for<V: Value>(
    outcome: &Outcome<V>,
    pass: &PassState<V>,
    tree: &AllocationTree<V>,
    i: BuyerId,
) -> PaymentTerms<V> {
    let snap = &pass.snapshots[&i];
    let mut still: BTreeSet<BuyerId> =
        tree.efficient_winners().iter().copied().filter(|j| !snap.down.contains(j) && !snap.out.contains(j)).collect();
    still.extend(snap.received.iter().copied());
    let still_value = still.iter().fold(V::zero(), |acc, &j| acc + tree.value(j).cloned().unwrap_or_else(V::zero));
    let is_winner = outcome.winners.contains(&i);
    let first = snap.without_down.welfare.clone() - still_value.clone();
    let mut second = snap.without_closure.welfare.clone() - still_value;
    if is_winner {
        second = second - tree.value(i).cloned().unwrap_or_else(V::zero);
    }
    PaymentTerms { items: snap.items, still, first, second, is_winner }
}
