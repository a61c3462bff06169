//! Social networks, buyer reports, and feasibility.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

/// Identity of a buyer. The seller is the reserved sentinel [`BuyerId::SELLER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BuyerId(pub u32);

impl BuyerId {
    pub const SELLER: BuyerId = BuyerId(u32::MAX);

    pub fn is_seller(self) -> bool {
        self == Self::SELLER
    }
}

impl fmt::Display for BuyerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_seller() {
            f.write_str("s")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Private type of a buyer: true valuation and true neighbor set.
#[derive(Debug, Clone, PartialEq)]
pub struct BuyerType<V> {
    pub valuation: V,
    /// May contain [`BuyerId::SELLER`].
    pub neighbors: BTreeSet<BuyerId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("item count must be at least 1")]
    NoItems,
    #[error("buyer id {0} collides with the seller sentinel")]
    SellerIdCollision(BuyerId),
    #[error("buyer {0} has a negative valuation")]
    NegativeValuation(BuyerId),
    #[error("buyer {0} lists itself as a neighbor")]
    SelfLoop(BuyerId),
    #[error("buyer {0} lists unknown neighbor {1}")]
    UnknownNeighbor(BuyerId, BuyerId),
    #[error("seller neighbor {0} is not a buyer")]
    UnknownSellerNeighbor(BuyerId),
    #[error("neighbor relation is not symmetric between {0} and {1}")]
    Asymmetric(BuyerId, BuyerId),
}

/// Ground-truth social network: seller, buyers, and the number of items.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<V> {
    seller_neighbors: BTreeSet<BuyerId>,
    buyers: BTreeMap<BuyerId, BuyerType<V>>,
    item_count: usize,
}

impl<V: Value> Network<V> {
    /// Builds and validates a network. Seller adjacency is taken from
    /// `seller_neighbors`; buyers may, but need not, list the seller.
    pub fn new(
        seller_neighbors: BTreeSet<BuyerId>,
        buyers: BTreeMap<BuyerId, BuyerType<V>>,
        item_count: usize,
    ) -> Result<Self, NetworkError> {
        if item_count == 0 {
            return Err(NetworkError::NoItems);
        }
        let mut buyers = buyers;
        for &s in &seller_neighbors {
            match buyers.get_mut(&s) {
                Some(b) => {
                    b.neighbors.insert(BuyerId::SELLER);
                }
                None => return Err(NetworkError::UnknownSellerNeighbor(s)),
            }
        }
        for (&id, b) in &buyers {
            if id.is_seller() {
                return Err(NetworkError::SellerIdCollision(id));
            }
            if b.valuation.is_negative() {
                return Err(NetworkError::NegativeValuation(id));
            }
            for &n in &b.neighbors {
                if n == id {
                    return Err(NetworkError::SelfLoop(id));
                }
                if n.is_seller() {
                    if !seller_neighbors.contains(&id) {
                        return Err(NetworkError::Asymmetric(id, n));
                    }
                    continue;
                }
                let Some(other) = buyers.get(&n) else {
                    return Err(NetworkError::UnknownNeighbor(id, n));
                };
                if !other.neighbors.contains(&id) {
                    return Err(NetworkError::Asymmetric(id, n));
                }
            }
        }
        Ok(Self { seller_neighbors, buyers, item_count })
    }

    /// Builds a network from an undirected edge list over buyers.
    pub fn from_edges(
        valuations: BTreeMap<BuyerId, V>,
        seller_neighbors: impl IntoIterator<Item = BuyerId>,
        edges: impl IntoIterator<Item = (BuyerId, BuyerId)>,
        item_count: usize,
    ) -> Result<Self, NetworkError> {
        let mut buyers: BTreeMap<BuyerId, BuyerType<V>> = valuations
            .into_iter()
            .map(|(id, valuation)| (id, BuyerType { valuation, neighbors: BTreeSet::new() }))
            .collect();
        for (a, b) in edges {
            if a == b {
                return Err(NetworkError::SelfLoop(a));
            }
            for (x, y) in [(a, b), (b, a)] {
                buyers.get_mut(&x).ok_or(NetworkError::UnknownNeighbor(y, x))?.neighbors.insert(y);
            }
        }
        Self::new(seller_neighbors.into_iter().collect(), buyers, item_count)
    }

    pub fn seller_neighbors(&self) -> &BTreeSet<BuyerId> {
        &self.seller_neighbors
    }

    pub fn buyers(&self) -> &BTreeMap<BuyerId, BuyerType<V>> {
        &self.buyers
    }

    pub fn buyer(&self, id: BuyerId) -> Option<&BuyerType<V>> {
        self.buyers.get(&id)
    }

    pub fn valuation(&self, id: BuyerId) -> Option<&V> {
        self.buyers.get(&id).map(|b| &b.valuation)
    }

    pub fn buyer_ids(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.buyers.keys().copied()
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn len(&self) -> usize {
        self.buyers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buyers.is_empty()
    }

    /// Same network with a different number of items.
    pub fn with_item_count(&self, item_count: usize) -> Result<Self, NetworkError> {
        if item_count == 0 {
            return Err(NetworkError::NoItems);
        }
        Ok(Self { item_count, ..self.clone() })
    }

    /// Buyer neighbors of `id`, without the seller sentinel.
    pub fn buyer_neighbors(&self, id: BuyerId) -> impl Iterator<Item = BuyerId> + '_ {
        self.buyers.get(&id).into_iter().flat_map(|b| b.neighbors.iter().copied()).filter(|n| !n.is_seller())
    }
}

/// A buyer's report: silence, or a valuation report with an invitation set.
#[derive(Debug, Clone, PartialEq)]
pub enum Action<V> {
    Nil,
    Report { valuation: V, invited: BTreeSet<BuyerId> },
}

impl<V> Action<V> {
    pub fn is_nil(&self) -> bool {
        matches!(self, Action::Nil)
    }

    pub fn reported_valuation(&self) -> Option<&V> {
        match self {
            Action::Nil => None,
            Action::Report { valuation, .. } => Some(valuation),
        }
    }

    pub fn invited(&self) -> Option<&BTreeSet<BuyerId>> {
        match self {
            Action::Nil => None,
            Action::Report { invited, .. } => Some(invited),
        }
    }
}

/// One action per buyer of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProfile<V> {
    actions: BTreeMap<BuyerId, Action<V>>,
}

impl<V: Value> ActionProfile<V> {
    pub fn new(actions: BTreeMap<BuyerId, Action<V>>) -> Self {
        Self { actions }
    }

    pub fn action(&self, id: BuyerId) -> &Action<V> {
        self.actions.get(&id).unwrap_or(&Action::Nil)
    }

    pub fn actions(&self) -> &BTreeMap<BuyerId, Action<V>> {
        &self.actions
    }

    pub fn set(&mut self, id: BuyerId, action: Action<V>) {
        self.actions.insert(id, action);
    }

    /// Reported valuation; `None` for silent buyers.
    pub fn reported(&self, id: BuyerId) -> Option<&V> {
        self.action(id).reported_valuation()
    }

    /// Reported valuation of a participant. Panics for silent buyers.
    pub fn value_of(&self, id: BuyerId) -> &V {
        self.reported(id).unwrap_or_else(|| panic!("buyer {id} has no report"))
    }

    /// Keeps the actions of buyers in `keep` and silences everyone else.
    pub fn restricted_to(&self, keep: &BTreeSet<BuyerId>) -> Self {
        let actions = self
            .actions
            .iter()
            .map(|(&id, a)| (id, if keep.contains(&id) { a.clone() } else { Action::Nil }))
            .collect();
        Self { actions }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeasibilityError {
    #[error("buyer {0} is reached by an invitation chain but reports nothing")]
    NilButReachable(BuyerId),
    #[error("buyer {0} reports but no invitation chain reaches her")]
    ReportButUnreachable(BuyerId),
    #[error("buyer {0} invites {1}, who is not her neighbor")]
    InvitedNonNeighbor(BuyerId, BuyerId),
    #[error("action given for unknown buyer {0}")]
    UnknownBuyer(BuyerId),
}

/// Profile where every reachable buyer reports her type and invites all
/// neighbors.
pub fn truthful_profile<V: Value>(net: &Network<V>) -> ActionProfile<V> {
    let mut reached: BTreeSet<BuyerId> = BTreeSet::new();
    let mut queue: VecDeque<BuyerId> = net.seller_neighbors.iter().copied().collect();
    reached.extend(net.seller_neighbors.iter().copied());
    while let Some(i) = queue.pop_front() {
        for n in net.buyer_neighbors(i) {
            if reached.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let actions = net
        .buyers
        .iter()
        .map(|(&id, b)| {
            let action = if reached.contains(&id) {
                Action::Report {
                    valuation: b.valuation.clone(),
                    invited: b.neighbors.iter().copied().filter(|n| !n.is_seller()).collect(),
                }
            } else {
                Action::Nil
            };
            (id, action)
        })
        .collect();
    ActionProfile { actions }
}

/// Buyers reached by some invitation chain, whether or not they report.
/// Silent buyers never forward invitations.
pub fn invited_set<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> BTreeSet<BuyerId> {
    reach(net, profile, None)
}

/// Buyers with an invitation chain from the seller and a non-nil action.
pub fn participants<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> BTreeSet<BuyerId> {
    participants_without(net, profile, None)
}

/// Participants when `removed` takes no part at all (her action is dropped).
pub fn participants_without<V: Value>(
    net: &Network<V>,
    profile: &ActionProfile<V>,
    removed: Option<BuyerId>,
) -> BTreeSet<BuyerId> {
    let mut set = reach(net, profile, removed);
    set.retain(|&i| !profile.action(i).is_nil());
    set
}

fn reach<V: Value>(net: &Network<V>, profile: &ActionProfile<V>, removed: Option<BuyerId>) -> BTreeSet<BuyerId> {
    let mut reached = BTreeSet::new();
    let mut queue = VecDeque::new();
    for &j in &net.seller_neighbors {
        if Some(j) != removed && reached.insert(j) {
            queue.push_back(j);
        }
    }
    while let Some(i) = queue.pop_front() {
        let Some(invited) = profile.action(i).invited() else {
            continue;
        };
        for &l in invited {
            if Some(l) != removed && net.buyers.contains_key(&l) && reached.insert(l) {
                queue.push_back(l);
            }
        }
    }
    reached
}

/// Checks that `profile` is feasible for `net`.
pub fn check_feasible<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> Result<(), FeasibilityError> {
    for &id in profile.actions.keys() {
        if !net.buyers.contains_key(&id) {
            return Err(FeasibilityError::UnknownBuyer(id));
        }
    }
    for (&id, b) in &net.buyers {
        if let Some(invited) = profile.action(id).invited() {
            if let Some(&j) = invited.iter().find(|j| !b.neighbors.contains(j) || j.is_seller()) {
                return Err(FeasibilityError::InvitedNonNeighbor(id, j));
            }
        }
    }
    let reached = invited_set(net, profile);
    for &id in net.buyers.keys() {
        match (profile.action(id).is_nil(), reached.contains(&id)) {
            (true, true) => return Err(FeasibilityError::NilButReachable(id)),
            (false, false) => return Err(FeasibilityError::ReportButUnreachable(id)),
            _ => {}
        }
    }
    Ok(())
}

/// Silences every buyer that is no longer reached under `profile`,
/// leaving reached buyers' actions untouched.
pub fn reclose<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> ActionProfile<V> {
    let keep = participants(net, profile);
    profile.restricted_to(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Exact;

    fn b(i: u32) -> BuyerId {
        BuyerId(i)
    }

    fn vals(n: u32) -> BTreeMap<BuyerId, Exact> {
        (0..n).map(|i| (b(i), Exact::from_int(i as i64 + 1))).collect()
    }

    #[test]
    fn single_reachable_buyer() {
        let net = Network::from_edges(vals(1), [b(0)], [], 1).unwrap();
        let p = truthful_profile(&net);
        assert!(matches!(p.action(b(0)), Action::Report { .. }));
        assert_eq!(p.reported(b(0)), Some(&Exact::from_int(1)));
        assert_eq!(participants(&net, &p), BTreeSet::from([b(0)]));
    }

    #[test]
    fn chain_of_two() {
        let net = Network::from_edges(vals(2), [b(0)], [(b(0), b(1))], 1).unwrap();
        let p = truthful_profile(&net);
        assert!(!p.action(b(0)).is_nil());
        assert!(!p.action(b(1)).is_nil());
    }

    #[test]
    fn disconnected_buyer_is_nil() {
        let net = Network::from_edges(vals(3), [b(0)], [(b(1), b(2))], 1).unwrap();
        let p = truthful_profile(&net);
        assert!(p.action(b(1)).is_nil());
        assert!(p.action(b(2)).is_nil());
        assert_eq!(check_feasible(&net, &p), Ok(()));
    }

    #[test]
    fn empty_invitations_leave_seller_neighbors() {
        let net = Network::from_edges(vals(4), [b(0), b(1)], [(b(0), b(2)), (b(1), b(3))], 1).unwrap();
        let mut p = truthful_profile(&net);
        for i in 0..2 {
            p.set(b(i), Action::Report { valuation: Exact::from_int(1), invited: BTreeSet::new() });
        }
        assert_eq!(participants(&net, &p), BTreeSet::from([b(0), b(1)]));
    }

    #[test]
    fn cut_buyer_silences_subtree() {
        // s - 0 - 1 - 2, 1 - 3
        let net = Network::from_edges(vals(4), [b(0)], [(b(0), b(1)), (b(1), b(2)), (b(1), b(3))], 1).unwrap();
        let mut p = truthful_profile(&net);
        p.set(b(1), Action::Report { valuation: Exact::from_int(2), invited: BTreeSet::new() });
        assert_eq!(participants(&net, &p), BTreeSet::from([b(0), b(1)]));
    }

    #[test]
    fn feasibility_errors() {
        let net = Network::from_edges(vals(3), [b(0)], [(b(0), b(1))], 1).unwrap();
        let truthful = truthful_profile(&net);
        assert_eq!(check_feasible(&net, &truthful), Ok(()));

        let mut p = truthful.clone();
        p.set(b(2), Action::Report { valuation: Exact::from_int(1), invited: BTreeSet::new() });
        assert_eq!(check_feasible(&net, &p), Err(FeasibilityError::ReportButUnreachable(b(2))));

        let mut p = truthful.clone();
        p.set(b(0), Action::Report { valuation: Exact::from_int(1), invited: BTreeSet::from([b(1), b(2)]) });
        assert_eq!(check_feasible(&net, &p), Err(FeasibilityError::InvitedNonNeighbor(b(0), b(2))));

        let mut p = truthful.clone();
        p.set(b(1), Action::Nil);
        assert_eq!(check_feasible(&net, &p), Err(FeasibilityError::NilButReachable(b(1))));
    }

    #[test]
    fn rejects_invalid_networks() {
        let mut buyers = BTreeMap::new();
        buyers.insert(b(0), BuyerType { valuation: Exact::from_int(1), neighbors: BTreeSet::from([b(1)]) });
        buyers.insert(b(1), BuyerType { valuation: Exact::from_int(1), neighbors: BTreeSet::new() });
        assert_eq!(Network::new(BTreeSet::new(), buyers.clone(), 1), Err(NetworkError::Asymmetric(b(0), b(1))));
        assert_eq!(Network::new(BTreeSet::from([b(5)]), buyers, 1), Err(NetworkError::UnknownSellerNeighbor(b(5))));
        assert_eq!(Network::from_edges(vals(1), [], [], 0), Err(NetworkError::NoItems));
        let mut neg = vals(1);
        neg.insert(b(0), Exact::from_int(-1));
        assert_eq!(Network::from_edges(neg, [], [], 1), Err(NetworkError::NegativeValuation(b(0))));
    }

    #[test]
    fn empty_seller_neighborhood_is_allowed() {
        let net = Network::from_edges(vals(2), [], [(b(0), b(1))], 2).unwrap();
        let p = truthful_profile(&net);
        assert!(participants(&net, &p).is_empty());
        assert_eq!(check_feasible(&net, &p), Ok(()));
    }
}
