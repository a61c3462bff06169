//! Single-instance property checks.

use std::collections::{BTreeMap, BTreeSet};

use crate::critical::{critical_structure, critical_structure_oracle};
use crate::mechanisms::{
    run_idm, run_vcg_local, terms_for, Gidm, GidmConfig, GidmRun, MechanismError, Outcome, PushOrder,
};
use crate::network::{participants, truthful_profile, Action, ActionProfile, BuyerId, BuyerType, Network};
use crate::value::Value;

/// Checks the still-holder payment form of a GIDM run: the still-holder
/// count, `first - second = payment` for everyone in payment scope, the
/// offset inequality at every node that passed items on, and the
/// non-negative remainder of revenue over the root children's first terms.
pub fn check_decomposition<V: Value>(run: &GidmRun<V>) -> Result<(), String> {
    let GidmRun { outcome, tree, pass, .. } = run;
    let n_opt = tree.efficient_winners().len();
    let terms: BTreeMap<BuyerId, _> = pass.pop_order.iter().map(|&i| (i, terms_for(outcome, pass, tree, i))).collect();
    for (&i, t) in &terms {
        if t.still.len() + t.items != n_opt {
            return Err(format!(
                "buyer {i}: {} still-holders with {} items and {n_opt} efficient winners",
                t.still.len(),
                t.items
            ));
        }
        if pass.in_payment_scope(i) {
            let split = t.first.clone() - t.second.clone();
            if split != outcome.payment(i) {
                return Err(format!(
                    "buyer {i}: first - second = {} but payment is {}",
                    split.to_decimal_string(),
                    outcome.payment(i).to_decimal_string()
                ));
            }
        }
        if t.is_winner && t.items == 1 && t.second != V::zero() {
            return Err(format!("buyer {i}: single-item winner has second term {}", t.second.to_decimal_string()));
        }
        let pushed = &pass.snapshots[&i].pushed;
        if !pushed.is_empty() {
            let offset = pushed.iter().fold(V::zero(), |acc, (c, _)| acc + terms[c].first.clone());
            if t.second.total_cmp(&offset).is_gt() {
                return Err(format!(
                    "buyer {i}: second term {} exceeds children's first terms {}",
                    t.second.to_decimal_string(),
                    offset.to_decimal_string()
                ));
            }
        }
    }
    let roots =
        tree.children(tree.root()).iter().filter_map(|c| terms.get(c)).fold(V::zero(), |acc, t| acc + t.first.clone());
    let delta = outcome.revenue.clone() - roots;
    if delta.is_negative() {
        return Err(format!("revenue falls short of the root children's first terms by {}", (V::zero() - delta)));
    }
    Ok(())
}

/// Prefix of every decomposition failure reported by the checks.
pub const DECOMPOSITION_TAG: &str = "decomposition: ";

/// Runs GIDM and checks its payment decomposition.
pub fn run_gidm_checked<V: Value>(
    gidm: &Gidm,
    net: &Network<V>,
    profile: &ActionProfile<V>,
) -> Result<GidmRun<V>, String> {
    let run = gidm.run(net, profile).map_err(|e| e.to_string())?;
    check_decomposition(&run).map_err(|e| format!("{DECOMPOSITION_TAG}{e}"))?;
    Ok(run)
}

/// Revenue of truthful GIDM against the `K · v_{K+1}` bound and the
/// neighbors-only auction.
#[derive(Debug, Clone, PartialEq)]
pub struct RevenueCheck<V> {
    pub revenue: V,
    /// `K` times the `(K+1)`-th highest seller-neighbor valuation, zero when
    /// the seller has at most `K` neighbors.
    pub bound: V,
    pub local_revenue: V,
    pub pass: bool,
}

pub fn revenue_bound<V: Value>(net: &Network<V>, k: usize) -> V {
    let mut vals: Vec<&V> = net.seller_neighbors().iter().filter_map(|&i| net.valuation(i)).collect();
    if vals.len() <= k {
        return V::zero();
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    (0..k).fold(V::zero(), |acc, _| acc + vals[k].clone())
}

pub fn check_revenue_bound<V: Value>(net: &Network<V>, k: usize) -> Result<RevenueCheck<V>, String> {
    check_revenue_bound_with(&Gidm::default(), net, k)
}

pub fn check_revenue_bound_with<V: Value>(gidm: &Gidm, net: &Network<V>, k: usize) -> Result<RevenueCheck<V>, String> {
    let net = net.with_item_count(k).map_err(|e| e.to_string())?;
    let run = run_gidm_checked(gidm, &net, &truthful_profile(&net))?;
    let revenue = run.outcome.revenue;
    let bound = revenue_bound(&net, k);
    let local_revenue = run_vcg_local(&net, k).revenue;
    let pass = !revenue.is_negative() && revenue.total_cmp(&bound).is_ge() && revenue.total_cmp(&local_revenue).is_ge();
    Ok(RevenueCheck { revenue, bound, local_revenue, pass })
}

/// Compares single-item GIDM with IDM on the truthful profile. `Ok(None)`
/// means they agree; `Ok(Some(_))` describes the difference.
pub fn check_idm_equivalence<V: Value>(net: &Network<V>) -> Result<Option<String>, String> {
    check_idm_equivalence_with(&Gidm::default(), net)
}

pub fn check_idm_equivalence_with<V: Value>(gidm: &Gidm, net: &Network<V>) -> Result<Option<String>, String> {
    let net = net.with_item_count(1).map_err(|e| e.to_string())?;
    let profile = truthful_profile(&net);
    let idm = match run_idm(&net, &profile) {
        Ok(o) => o,
        Err(MechanismError::NoParticipants) => Outcome::empty(net.buyer_ids()),
        Err(e) => return Err(format!("idm: {e}")),
    };
    let gidm = run_gidm_checked(gidm, &net, &profile)?.outcome;
    Ok(describe_difference("gidm", &gidm, "idm", &idm))
}

/// Profile where the seller's neighbors report truthfully and invite nobody.
pub fn no_diffusion_profile<V: Value>(net: &Network<V>) -> ActionProfile<V> {
    let actions = net
        .buyer_ids()
        .map(|i| {
            let action = if net.seller_neighbors().contains(&i) {
                Action::Report { valuation: net.valuation(i).expect("buyer").clone(), invited: BTreeSet::new() }
            } else {
                Action::Nil
            };
            (i, action)
        })
        .collect();
    ActionProfile::new(actions)
}

/// Compares GIDM without any invitations to the neighbors-only
/// `(K+1)`-price auction.
pub fn check_no_diffusion<V: Value>(net: &Network<V>, k: usize) -> Result<Option<String>, String> {
    check_no_diffusion_with(&Gidm::default(), net, k)
}

pub fn check_no_diffusion_with<V: Value>(gidm: &Gidm, net: &Network<V>, k: usize) -> Result<Option<String>, String> {
    let net = net.with_item_count(k).map_err(|e| e.to_string())?;
    let gidm = run_gidm_checked(gidm, &net, &no_diffusion_profile(&net))?.outcome;
    let local = run_vcg_local(&net, k);
    Ok(describe_difference("gidm", &gidm, "vcg-local", &local))
}

fn describe_difference<V: Value>(a_name: &str, a: &Outcome<V>, b_name: &str, b: &Outcome<V>) -> Option<String> {
    if a.same_result(b) {
        return None;
    }
    let fmt = |o: &Outcome<V>| {
        let pays: Vec<String> = o
            .payments
            .iter()
            .filter(|(_, p)| **p != V::zero())
            .map(|(i, p)| format!("{i}:{}", p.to_decimal_string()))
            .collect();
        let winners: Vec<String> = o.winners.iter().map(|i| i.to_string()).collect();
        format!(
            "winners [{}] payments [{}] revenue {}",
            winners.join(","),
            pays.join(","),
            o.revenue.to_decimal_string()
        )
    };
    Some(format!("{a_name}: {}; {b_name}: {}", fmt(a), fmt(b)))
}

/// Compares the dominator computation with the removal oracle on the
/// truthful profile.
pub fn check_critical_oracle<V: Value>(net: &Network<V>) -> Option<String> {
    let profile = truthful_profile(net);
    let fast = critical_structure(net, &profile);
    let slow = critical_structure_oracle(net, &profile);
    if fast.parent_map() == slow.parent_map() && fast.children_map() == slow.children_map() {
        return None;
    }
    let diff: Vec<String> = fast
        .parent_map()
        .iter()
        .filter(|(i, ps)| slow.parent_map().get(i) != Some(ps))
        .map(|(i, ps)| format!("{i}: dominators {ps:?} oracle {:?}", slow.parent_map().get(i)))
        .collect();
    Some(diff.join("; "))
}

/// Checks that `i`'s item and payment, as functions of her report, are
/// constant on every open interval between the other participants' reports:
/// points at a quarter and three quarters of each interval match its
/// midpoint, and values above the largest report behave alike. Other buyers'
/// payments may move with her report and are not compared.
pub fn check_piecewise_constancy<V: Value>(
    gidm: &Gidm,
    net: &Network<V>,
    k: usize,
    i: BuyerId,
) -> Result<Option<String>, String> {
    let net = net.with_item_count(k).map_err(|e| e.to_string())?;
    let truthful = truthful_profile(&net);
    let mut marks: Vec<V> =
        participants(&net, &truthful).into_iter().filter(|&j| j != i).map(|j| truthful.value_of(j).clone()).collect();
    marks.push(V::zero());
    marks.sort_by(|a, b| a.total_cmp(b));
    marks.dedup_by(|a, b| a.total_cmp(b).is_eq());
    let top = marks.last().cloned().expect("zero is a mark");
    let invited = truthful.action(i).invited().cloned().unwrap_or_default();
    let run_at = |v: V| -> Result<Outcome<V>, String> {
        let mut p = truthful.clone();
        p.set(i, Action::Report { valuation: v, invited: invited.clone() });
        run_gidm_checked(gidm, &net, &p).map(|r| r.outcome)
    };
    let mut intervals: Vec<(V, V)> = marks.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
    intervals.push((top.clone(), top.clone() + V::from_int(2)));
    for (lo, hi) in intervals {
        let mid = lo.midpoint(&hi);
        let reference = run_at(mid.clone())?;
        for probe in [lo.midpoint(&mid), mid.midpoint(&hi)] {
            let o = run_at(probe.clone())?;
            if o.item_of(i) != reference.item_of(i) || o.payment(i) != reference.payment(i) {
                return Ok(Some(format!(
                    "buyer {i}: reports {} and {} inside ({}, {}) give her different results",
                    probe.to_decimal_string(),
                    mid.to_decimal_string(),
                    lo.to_decimal_string(),
                    hi.to_decimal_string()
                )));
            }
        }
    }
    Ok(None)
}

/// `net` with buyer `i` and all her edges removed.
pub fn without_buyer<V: Value>(net: &Network<V>, i: BuyerId) -> Network<V> {
    let buyers: BTreeMap<BuyerId, BuyerType<V>> = net
        .buyers()
        .iter()
        .filter(|(&j, _)| j != i)
        .map(|(&j, b)| {
            let mut b = b.clone();
            b.neighbors.remove(&i);
            (j, b)
        })
        .collect();
    let seller = net.seller_neighbors().iter().copied().filter(|&j| j != i).collect();
    Network::new(seller, buyers, net.item_count()).expect("removing a buyer keeps the network valid")
}

/// Compares a participant reporting zero and inviting nobody with the same
/// buyer absent from the network. Only the other buyers' items and payments
/// are compared; differences are returned as descriptions.
pub fn check_silence_equivalence<V: Value>(gidm: &Gidm, net: &Network<V>, k: usize) -> Result<Vec<String>, String> {
    let net = net.with_item_count(k).map_err(|e| e.to_string())?;
    let truthful = truthful_profile(&net);
    let mut diffs = Vec::new();
    for i in participants(&net, &truthful) {
        let mut p = truthful.clone();
        p.set(i, Action::Report { valuation: V::zero(), invited: BTreeSet::new() });
        let p = crate::network::reclose(&net, &p);
        let silent = run_gidm_checked(gidm, &net, &p)?.outcome;
        let reduced = without_buyer(&net, i);
        let absent = if participants(&reduced, &truthful_profile(&reduced)).is_empty() {
            Outcome::empty(reduced.buyer_ids())
        } else {
            run_gidm_checked(gidm, &reduced, &truthful_profile(&reduced))?.outcome
        };
        let others = |o: &Outcome<V>| -> (BTreeSet<BuyerId>, BTreeMap<BuyerId, V>) {
            let w = o.winners.iter().copied().filter(|&j| j != i).collect();
            let pay = o.payments.iter().filter(|(&j, _)| j != i).map(|(&j, v)| (j, v.clone())).collect();
            (w, pay)
        };
        if others(&silent) != others(&absent) {
            diffs.push(format!(
                "buyer {i}: {}",
                describe_difference("silent", &silent, "absent", &absent).unwrap_or_default()
            ));
        }
    }
    Ok(diffs)
}

/// Runs GIDM under every push order of the participants (for at most
/// `max_participants` of them) and reports runs that differ from the default
/// order. Informational only.
pub fn check_order_sensitivity<V: Value>(
    base: &GidmConfig,
    net: &Network<V>,
    k: usize,
    max_participants: usize,
) -> Result<Vec<String>, String> {
    let net = net.with_item_count(k).map_err(|e| e.to_string())?;
    let profile = truthful_profile(&net);
    let members: Vec<BuyerId> = participants(&net, &profile).into_iter().collect();
    if members.len() > max_participants {
        return Ok(Vec::new());
    }
    let reference = run_gidm_checked(&Gidm::new(base.clone()), &net, &profile)?.outcome;
    let mut notes = Vec::new();
    let mut perm = members.clone();
    for_each_permutation(&mut perm, 0, &mut |order| -> Result<(), String> {
        let gidm = Gidm::new(GidmConfig { push_order: PushOrder::Ranked(order.to_vec()), ..base.clone() });
        let o = run_gidm_checked(&gidm, &net, &profile)?.outcome;
        if !o.same_result(&reference) {
            let trace: Vec<String> = o.trace.iter().map(|e| e.to_string()).collect();
            let base: Vec<String> = reference.trace.iter().map(|e| e.to_string()).collect();
            notes.push(format!(
                "push order {order:?}: {}\n  trace: {}\n  default trace: {}",
                describe_difference("permuted", &o, "default", &reference).unwrap_or_default(),
                trace.join("; "),
                base.join("; ")
            ));
        }
        Ok(())
    })?;
    Ok(notes)
}

fn for_each_permutation<T: Clone, E>(
    items: &mut [T],
    start: usize,
    f: &mut impl FnMut(&[T]) -> Result<(), E>,
) -> Result<(), E> {
    if start == items.len() {
        return f(items);
    }
    for j in start..items.len() {
        items.swap(start, j);
        for_each_permutation(items, start + 1, f)?;
        items.swap(start, j);
    }
    Ok(())
}
