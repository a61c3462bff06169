//! Critical parents and children of participants.
//!
//! `j` is a critical parent of `i` when every invitation chain from the seller
//! to `i` passes through `j`. In graph terms these are the proper dominators of
//! `i` (excluding the seller) in the invitation digraph rooted at the seller.
//! [`critical_structure`] computes them with the iterative dominator algorithm
//! of Cooper, Harvey and Kennedy; [`critical_structure_oracle`] deletes each
//! buyer in turn and re-runs reachability.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::network::{participants, participants_without, ActionProfile, BuyerId, Network};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriticalError {
    #[error("buyer {0} does not participate")]
    NotParticipant(BuyerId),
}

/// Critical parents and children of every participant of a fixed profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalStructure {
    /// Ordered from the one closest to the seller outward.
    parents: BTreeMap<BuyerId, Vec<BuyerId>>,
    children: BTreeMap<BuyerId, BTreeSet<BuyerId>>,
}

impl CriticalStructure {
    fn from_parents(parents: BTreeMap<BuyerId, Vec<BuyerId>>) -> Self {
        let mut children: BTreeMap<BuyerId, BTreeSet<BuyerId>> =
            parents.keys().map(|&i| (i, BTreeSet::new())).collect();
        for (&i, ps) in &parents {
            for p in ps {
                children.entry(*p).or_default().insert(i);
            }
        }
        Self { parents, children }
    }

    pub fn participants(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.parents.keys().copied()
    }

    pub fn is_participant(&self, i: BuyerId) -> bool {
        self.parents.contains_key(&i)
    }

    pub fn parents(&self, i: BuyerId) -> Result<&[BuyerId], CriticalError> {
        self.parents.get(&i).map(Vec::as_slice).ok_or(CriticalError::NotParticipant(i))
    }

    pub fn children(&self, i: BuyerId) -> Result<&BTreeSet<BuyerId>, CriticalError> {
        self.children.get(&i).ok_or(CriticalError::NotParticipant(i))
    }

    /// Critical parents of `i` as a set.
    pub fn parent_set(&self, i: BuyerId) -> Result<BTreeSet<BuyerId>, CriticalError> {
        Ok(self.parents(i)?.iter().copied().collect())
    }

    pub fn parent_map(&self) -> &BTreeMap<BuyerId, Vec<BuyerId>> {
        &self.parents
    }

    pub fn children_map(&self) -> &BTreeMap<BuyerId, BTreeSet<BuyerId>> {
        &self.children
    }
}

/// `i ≻ j`: `i` is a critical parent of `j`.
pub fn precedes(cs: &CriticalStructure, i: BuyerId, j: BuyerId) -> bool {
    cs.parents.get(&j).is_some_and(|ps| ps.contains(&i))
}

/// Dominator-based critical structure.
pub fn critical_structure<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> CriticalStructure {
    let members = participants(net, profile);
    // Node 0 is the seller; buyers are numbered in reverse postorder below.
    let ids: Vec<BuyerId> = members.iter().copied().collect();
    let index: BTreeMap<BuyerId, usize> = ids.iter().enumerate().map(|(k, &i)| (i, k + 1)).collect();
    let n = ids.len() + 1;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add_edge = |a: usize, b: usize| {
        succ[a].push(b);
        pred[b].push(a);
    };
    for j in net.seller_neighbors() {
        if let Some(&b) = index.get(j) {
            add_edge(0, b);
        }
    }
    for (k, &i) in ids.iter().enumerate() {
        if let Some(invited) = profile.action(i).invited() {
            for l in invited {
                if let Some(&b) = index.get(l) {
                    if b != k + 1 {
                        add_edge(k + 1, b);
                    }
                }
            }
        }
    }

    let order = reverse_postorder(&succ);
    let mut rpo_number = vec![usize::MAX; n];
    for (pos, &v) in order.iter().enumerate() {
        rpo_number[v] = pos;
    }
    let mut idom = vec![usize::MAX; n];
    idom[0] = 0;
    let mut changed = true;
    while changed {
        changed = false;
        for &v in order.iter().skip(1) {
            let mut new_idom = usize::MAX;
            for &p in &pred[v] {
                if idom[p] == usize::MAX {
                    continue;
                }
                new_idom = if new_idom == usize::MAX { p } else { intersect(&idom, &rpo_number, p, new_idom) };
            }
            if new_idom != usize::MAX && idom[v] != new_idom {
                idom[v] = new_idom;
                changed = true;
            }
        }
    }

    let mut parents = BTreeMap::new();
    for (k, &i) in ids.iter().enumerate() {
        let mut chain = Vec::new();
        let mut cur = idom[k + 1];
        while cur != 0 && cur != usize::MAX {
            chain.push(ids[cur - 1]);
            cur = idom[cur];
        }
        chain.reverse();
        parents.insert(i, chain);
    }
    CriticalStructure::from_parents(parents)
}

fn intersect(idom: &[usize], rpo: &[usize], mut a: usize, mut b: usize) -> usize {
    while a != b {
        while rpo[a] > rpo[b] {
            a = idom[a];
        }
        while rpo[b] > rpo[a] {
            b = idom[b];
        }
    }
    a
}

fn reverse_postorder(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut visited = vec![false; n];
    let mut post = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    visited[0] = true;
    while let Some((v, next)) = stack.pop() {
        if next < succ[v].len() {
            stack.push((v, next + 1));
            let w = succ[v][next];
            if !visited[w] {
                visited[w] = true;
                stack.push((w, 0));
            }
        } else {
            post.push(v);
        }
    }
    post.reverse();
    post
}

/// Removal oracle: `j` is a critical parent of `i` iff `i` is unreachable
/// once `j` takes no part.
pub fn critical_structure_oracle<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> CriticalStructure {
    let members = participants(net, profile);
    let mut parent_sets: BTreeMap<BuyerId, BTreeSet<BuyerId>> = members.iter().map(|&i| (i, BTreeSet::new())).collect();
    for &j in &members {
        let without = participants_without(net, profile, Some(j));
        for &i in &members {
            if i != j && !without.contains(&i) {
                parent_sets.get_mut(&i).expect("participant").insert(j);
            }
        }
    }
    // Critical parents of i form a chain; an ancestor has strictly fewer
    // critical parents than any of its descendants.
    let parents = parent_sets
        .iter()
        .map(|(&i, ps)| {
            let mut list: Vec<BuyerId> = ps.iter().copied().collect();
            list.sort_by_key(|p| (parent_sets[p].len(), *p));
            (i, list)
        })
        .collect();
    CriticalStructure::from_parents(parents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::truthful_profile;
    use crate::value::Exact;

    fn b(i: u32) -> BuyerId {
        BuyerId(i)
    }

    fn net(n: u32, seller: &[u32], edges: &[(u32, u32)]) -> Network<Exact> {
        Network::from_edges(
            (0..n).map(|i| (b(i), Exact::from_int(i as i64))).collect(),
            seller.iter().map(|&i| b(i)),
            edges.iter().map(|&(x, y)| (b(x), b(y))),
            1,
        )
        .unwrap()
    }

    #[test]
    fn single_buyer_has_no_parents() {
        let n = net(1, &[0], &[]);
        let p = truthful_profile(&n);
        for cs in [critical_structure(&n, &p), critical_structure_oracle(&n, &p)] {
            assert!(cs.parents(b(0)).unwrap().is_empty());
            assert!(cs.children(b(0)).unwrap().is_empty());
        }
    }

    #[test]
    fn path_network() {
        // s - 0 - 1 - 2
        let n = net(3, &[0], &[(0, 1), (1, 2)]);
        let p = truthful_profile(&n);
        let cs = critical_structure(&n, &p);
        assert_eq!(cs.parents(b(2)).unwrap(), &[b(0), b(1)]);
        assert_eq!(cs.parents(b(1)).unwrap(), &[b(0)]);
        assert_eq!(cs, critical_structure_oracle(&n, &p));
        assert!(precedes(&cs, b(0), b(2)));
        assert!(!precedes(&cs, b(2), b(0)));
        assert!(!precedes(&cs, b(1), b(1)));
    }

    #[test]
    fn diamond_has_no_interior_dominator() {
        // s - 0, s - 1, 0 - 2, 1 - 2, 2 - 3
        let n = net(4, &[0, 1], &[(0, 2), (1, 2), (2, 3)]);
        let p = truthful_profile(&n);
        let cs = critical_structure(&n, &p);
        assert!(cs.parents(b(2)).unwrap().is_empty());
        assert_eq!(cs.parents(b(3)).unwrap(), &[b(2)]);
        assert_eq!(cs, critical_structure_oracle(&n, &p));
    }

    #[test]
    fn non_participants_are_errors() {
        let n = net(2, &[0], &[]);
        let cs = critical_structure(&n, &truthful_profile(&n));
        assert_eq!(cs.parents(b(1)), Err(CriticalError::NotParticipant(b(1))));
        assert_eq!(cs.children(b(1)).unwrap_err(), CriticalError::NotParticipant(b(1)));
    }
}
