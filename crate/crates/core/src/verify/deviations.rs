//! Exhaustive unilateral deviations.
//!
//! Outcomes are step functions of a buyer's own report with breakpoints at
//! the other buyers' reports, so every breakpoint, every midpoint between
//! neighboring breakpoints, and the two extremes cover all behaviors of the
//! valuation report.

use std::collections::BTreeSet;

use crate::mechanisms::{Gidm, Outcome};
use crate::network::{
    check_feasible, participants, reclose, truthful_profile, Action, ActionProfile, BuyerId, Network,
};
use crate::value::Value;

use super::checks::{check_decomposition, DECOMPOSITION_TAG};

/// One profitable (or IR-violating) deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationViolation<V> {
    pub buyer: BuyerId,
    pub deviation: Action<V>,
    pub truthful_utility: V,
    pub deviant_utility: V,
}

/// Result of a deviation search.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport<V> {
    pub checked_instances: usize,
    pub checked_deviations: usize,
    pub violations: Vec<DeviationViolation<V>>,
    /// Largest violation: utility gain for IC, utility shortfall below zero
    /// for IR. Zero when there are no violations.
    pub max_gain: V,
    /// Mechanism failures and broken self-checks.
    pub errors: Vec<String>,
}

impl<V: Value> DeviationReport<V> {
    pub fn new() -> Self {
        Self {
            checked_instances: 0,
            checked_deviations: 0,
            violations: Vec::new(),
            max_gain: V::zero(),
            errors: Vec::new(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.errors.is_empty()
    }

    fn record(&mut self, v: DeviationViolation<V>, magnitude: V) {
        if magnitude.total_cmp(&self.max_gain).is_gt() {
            self.max_gain = magnitude;
        }
        self.violations.push(v);
    }

    pub fn merge(&mut self, other: DeviationReport<V>) {
        self.checked_instances += other.checked_instances;
        self.checked_deviations += other.checked_deviations;
        if other.max_gain.total_cmp(&self.max_gain).is_gt() {
            self.max_gain = other.max_gain;
        }
        self.violations.extend(other.violations);
        self.errors.extend(other.errors);
    }
}

impl<V: Value> Default for DeviationReport<V> {
    fn default() -> Self {
        Self::new()
    }
}

/// Candidate valuation reports for `i`: the domain, her true value, the
/// other participants' reports, midpoints between adjacent distinct reports,
/// zero, and one above the largest of all of these.
pub fn misreport_candidates<V: Value>(
    net: &Network<V>,
    profile: &ActionProfile<V>,
    i: BuyerId,
    domain: &[V],
) -> Vec<V> {
    let mut others: Vec<V> =
        participants(net, profile).into_iter().filter(|&j| j != i).map(|j| profile.value_of(j).clone()).collect();
    sort_dedup(&mut others);
    let mut out: Vec<V> = domain.to_vec();
    out.extend(net.valuation(i).cloned());
    out.extend(others.iter().cloned());
    out.extend(others.windows(2).map(|w| w[0].midpoint(&w[1])));
    out.push(V::zero());
    sort_dedup(&mut out);
    let top = out.last().cloned().unwrap_or_else(V::zero);
    out.push(top + V::from_int(1));
    out
}

fn sort_dedup<V: Value>(v: &mut Vec<V>) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| a.total_cmp(b).is_eq());
}

/// All subsets of `i`'s buyer neighbors, in bitmask order.
pub fn invitation_subsets<V: Value>(net: &Network<V>, i: BuyerId) -> Vec<BTreeSet<BuyerId>> {
    let neighbors: Vec<BuyerId> = net.buyer_neighbors(i).collect();
    assert!(neighbors.len() < 31, "too many neighbors to enumerate");
    (0u32..(1 << neighbors.len()))
        .map(|mask| neighbors.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, &n)| n).collect())
        .collect()
}

/// Every (misreport, invitation subset) action of buyer `i`, truthful action
/// included. Silence is not enumerated.
pub fn enumerate_deviations<V: Value>(net: &Network<V>, i: BuyerId, domain: &[V]) -> Vec<Action<V>> {
    let truthful = truthful_profile(net);
    let subsets = invitation_subsets(net, i);
    misreport_candidates(net, &truthful, i, domain)
        .into_iter()
        .flat_map(|v| subsets.iter().map(move |s| Action::Report { valuation: v.clone(), invited: s.clone() }))
        .collect()
}

/// `base` with `i` switched to `action`; buyers no longer reached fall silent,
/// everyone still reached keeps her action.
pub fn deviant_profile<V: Value>(
    net: &Network<V>,
    base: &ActionProfile<V>,
    i: BuyerId,
    action: Action<V>,
) -> ActionProfile<V> {
    let mut p = base.clone();
    p.set(i, action);
    reclose(net, &p)
}

/// Runs GIDM on a checked-feasible profile. A broken payment decomposition
/// is pushed to `errors` but the outcome is still returned.
fn run_checked<V: Value>(
    gidm: &Gidm,
    net: &Network<V>,
    profile: &ActionProfile<V>,
    errors: &mut Vec<String>,
) -> Result<Outcome<V>, String> {
    check_feasible(net, profile).map_err(|e| format!("deviant profile infeasible: {e}"))?;
    let run = gidm.run(net, profile).map_err(|e| e.to_string())?;
    if let Err(e) = check_decomposition(&run) {
        errors.push(format!("{DECOMPOSITION_TAG}{e}"));
    }
    Ok(run.outcome)
}

/// Searches every unilateral deviation of every participant against the
/// truthful profile, with `k` items.
pub fn check_ic<V: Value>(net: &Network<V>, k: usize, domain: &[V]) -> DeviationReport<V> {
    check_ic_with(&Gidm::default(), net, k, domain)
}

pub fn check_ic_with<V: Value>(gidm: &Gidm, net: &Network<V>, k: usize, domain: &[V]) -> DeviationReport<V> {
    let mut report = DeviationReport::new();
    report.checked_instances = 1;
    let net = match net.with_item_count(k) {
        Ok(n) => n,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    let truthful = truthful_profile(&net);
    let base = match run_checked(gidm, &net, &truthful, &mut report.errors) {
        Ok(o) => o,
        Err(e) => {
            report.errors.push(format!("truthful run: {e}"));
            return report;
        }
    };
    for i in participants(&net, &truthful) {
        let v_i = net.valuation(i).expect("buyer").clone();
        let u_truth = base.utility(i, &v_i);
        for action in enumerate_deviations(&net, i, domain) {
            report.checked_deviations += 1;
            let profile = deviant_profile(&net, &truthful, i, action.clone());
            match run_checked(gidm, &net, &profile, &mut report.errors) {
                Ok(o) => {
                    let u_dev = o.utility(i, &v_i);
                    let gain = u_dev.clone() - u_truth.clone();
                    if V::is_strict_gain(&gain) {
                        report.record(
                            DeviationViolation {
                                buyer: i,
                                deviation: action,
                                truthful_utility: u_truth.clone(),
                                deviant_utility: u_dev,
                            },
                            gain,
                        );
                    }
                }
                Err(e) => report.errors.push(format!("buyer {i}: {e}")),
            }
        }
    }
    report
}

/// Truthful valuation with every invitation subset never yields negative
/// utility.
pub fn check_ir<V: Value>(net: &Network<V>, k: usize) -> DeviationReport<V> {
    check_ir_with(&Gidm::default(), net, k)
}

pub fn check_ir_with<V: Value>(gidm: &Gidm, net: &Network<V>, k: usize) -> DeviationReport<V> {
    let mut report = DeviationReport::new();
    report.checked_instances = 1;
    let net = match net.with_item_count(k) {
        Ok(n) => n,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    let truthful = truthful_profile(&net);
    for i in participants(&net, &truthful) {
        let v_i = net.valuation(i).expect("buyer").clone();
        for invited in invitation_subsets(&net, i) {
            report.checked_deviations += 1;
            let action = Action::Report { valuation: v_i.clone(), invited };
            let profile = deviant_profile(&net, &truthful, i, action.clone());
            match run_checked(gidm, &net, &profile, &mut report.errors) {
                Ok(o) => {
                    let u = o.utility(i, &v_i);
                    let shortfall = V::zero() - u.clone();
                    if V::is_strict_gain(&shortfall) {
                        report.record(
                            DeviationViolation {
                                buyer: i,
                                deviation: action,
                                truthful_utility: V::zero(),
                                deviant_utility: u,
                            },
                            shortfall,
                        );
                    }
                }
                Err(e) => report.errors.push(format!("buyer {i}: {e}")),
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Exact;

    fn b(i: u32) -> BuyerId {
        BuyerId(i)
    }

    fn q(v: i64) -> Exact {
        Exact::from_int(v)
    }

    #[test]
    fn four_subsets_per_candidate() {
        // 1 has buyer neighbors 0 and 2 (plus the seller).
        let vals = [(b(0), q(1)), (b(1), q(5)), (b(2), q(3))].into();
        let net = Network::from_edges(vals, [b(0), b(1)], [(b(0), b(1)), (b(1), b(2))], 1).unwrap();
        let domain = vec![q(0), q(4)];
        let c = misreport_candidates(&net, &truthful_profile(&net), b(1), &domain).len();
        let devs = enumerate_deviations(&net, b(1), &domain);
        assert_eq!(devs.len(), 4 * c);
        let truthful = truthful_profile(&net).action(b(1)).clone();
        assert!(devs.contains(&truthful));
    }

    #[test]
    fn candidates_cover_breakpoints_and_extremes() {
        let vals = [(b(0), q(2)), (b(1), q(5)), (b(2), q(8))].into();
        let net = Network::from_edges(vals, [b(0), b(1), b(2)], [], 1).unwrap();
        let c = misreport_candidates(&net, &truthful_profile(&net), b(0), &[q(1)]);
        let expect = [q(0), q(1), q(2), q(5), Exact::new(13, 2), q(8), q(9)];
        assert_eq!(c, expect);
    }

    #[test]
    fn identity_deviation_has_zero_gain() {
        let vals = [(b(0), q(2)), (b(1), q(5))].into();
        let net = Network::from_edges(vals, [b(0)], [(b(0), b(1))], 1).unwrap();
        let truthful = truthful_profile(&net);
        let same = deviant_profile(&net, &truthful, b(0), truthful.action(b(0)).clone());
        assert_eq!(same, truthful);
    }

    #[test]
    fn dropping_invitations_silences_subtree() {
        let vals = [(b(0), q(2)), (b(1), q(5)), (b(2), q(1))].into();
        let net = Network::from_edges(vals, [b(0)], [(b(0), b(1)), (b(1), b(2))], 1).unwrap();
        let truthful = truthful_profile(&net);
        let p = deviant_profile(&net, &truthful, b(0), Action::Report { valuation: q(2), invited: BTreeSet::new() });
        assert!(p.action(b(1)).is_nil());
        assert!(p.action(b(2)).is_nil());
        assert_eq!(check_feasible(&net, &p), Ok(()));
    }

    #[test]
    fn star_underbids_never_pay() {
        let vals = [(b(0), q(6)), (b(1), q(4)), (b(2), q(4)), (b(3), q(1))].into();
        let net = Network::from_edges(vals, (0..4).map(b), [], 2).unwrap();
        let domain: Vec<Exact> = (0..=9).map(q).collect();
        let ic = check_ic(&net, 2, &domain);
        assert!(ic.is_clean(), "{ic:?}");
        assert!(ic.checked_deviations > 0);
        let ir = check_ir(&net, 2);
        assert!(ir.is_clean(), "{ir:?}");
    }
}
