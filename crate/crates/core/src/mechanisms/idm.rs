use std::collections::BTreeSet;

use crate::allocation::rank_sorted;
use crate::critical::critical_structure;
use crate::network::{check_feasible, participants, participants_without, ActionProfile, BuyerId, Network};
use crate::value::Value;

use super::{MechanismError, Outcome, TraceEvent};

/// Single-item information diffusion mechanism.
///
/// The top-ranked participant `i*` and her critical parents form a chain from
/// the seller. Each chain member's price is the highest report among buyers
/// still reachable without her (zero if none). The item enters the chain at
/// the seller side; a holder keeps it when she is the top-ranked buyer among
/// those reachable without the next member, otherwise she passes it on and
/// is paid the price difference. `NoParticipants` is returned for an empty
/// sale. The item count of `net` is ignored.
pub fn run_idm<V: Value>(net: &Network<V>, profile: &ActionProfile<V>) -> Result<Outcome<V>, MechanismError> {
    check_feasible(net, profile)?;
    let members = participants(net, profile);
    let Some(&top) = rank_sorted(profile, members.iter().copied()).first() else {
        return Err(MechanismError::NoParticipants);
    };
    let cs = critical_structure(net, profile);
    let mut chain: Vec<BuyerId> = cs.parents(top)?.to_vec();
    chain.push(top);

    let mut trace = vec![TraceEvent::Chain { chain: chain.clone() }];
    // (price, top-ranked buyer) without each chain member.
    let without: Vec<(V, Option<BuyerId>)> = chain
        .iter()
        .map(|&i| {
            let rest = participants_without(net, profile, Some(i));
            let best = rank_sorted(profile, rest.iter().copied()).first().copied();
            let price = best.map(|b| profile.value_of(b).clone()).unwrap_or_else(V::zero);
            (price, best)
        })
        .collect();
    for (&i, (price, _)) in chain.iter().zip(&without) {
        trace.push(TraceEvent::Price { buyer: i, price: price.clone() });
    }

    let mut payments = net.buyer_ids().map(|i| (i, V::zero())).collect::<std::collections::BTreeMap<_, _>>();
    let mut pos = 0;
    let winner = loop {
        let holder = chain[pos];
        let keeps = pos + 1 == chain.len() || without[pos + 1].1 == Some(holder);
        if keeps {
            payments.insert(holder, without[pos].0.clone());
            trace.push(TraceEvent::Keep { buyer: holder });
            break holder;
        }
        let next = chain[pos + 1];
        payments.insert(holder, without[pos].0.clone() - without[pos + 1].0.clone());
        trace.push(TraceEvent::Pass { from: holder, to: next });
        pos += 1;
    };
    Ok(Outcome::from_parts(BTreeSet::from([winner]), payments, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::truthful_profile;
    use crate::value::Exact;

    fn b(i: u32) -> BuyerId {
        BuyerId(i)
    }

    fn q(v: i64) -> Exact {
        Exact::from_int(v)
    }

    #[test]
    fn lone_buyer_pays_nothing() {
        let n = Network::from_edges([(b(0), q(5))].into(), [b(0)], [], 1).unwrap();
        let o = run_idm(&n, &truthful_profile(&n)).unwrap();
        assert_eq!(o.winners, BTreeSet::from([b(0)]));
        assert_eq!(o.payment(b(0)), q(0));
        assert_eq!(o.revenue, q(0));
    }

    #[test]
    fn star_is_second_price() {
        let vals = [(b(0), q(4)), (b(1), q(9)), (b(2), q(6))].into();
        let n = Network::from_edges(vals, [b(0), b(1), b(2)], [], 1).unwrap();
        let o = run_idm(&n, &truthful_profile(&n)).unwrap();
        assert_eq!(o.winners, BTreeSet::from([b(1)]));
        assert_eq!(o.payment(b(1)), q(6));
        assert_eq!(o.revenue, q(6));
    }

    #[test]
    fn path_passes_item_down() {
        // s - 0(3) - 1(1) - 2(8); s - 3(2)
        let vals = [(b(0), q(3)), (b(1), q(1)), (b(2), q(8)), (b(3), q(2))].into();
        let n = Network::from_edges(vals, [b(0), b(3)], [(b(0), b(1)), (b(1), b(2))], 1).unwrap();
        let o = run_idm(&n, &truthful_profile(&n)).unwrap();
        // Prices: without 0 -> 2, without 1 -> 3, without 2 -> 3.
        // 0 is top without 1, so 0 keeps and pays 2.
        assert_eq!(o.winners, BTreeSet::from([b(0)]));
        assert_eq!(o.payment(b(0)), q(2));
        assert_eq!(o.revenue, q(2));
    }

    #[test]
    fn empty_sale_is_an_error() {
        let n = Network::from_edges([(b(0), q(5))].into(), [], [], 1).unwrap();
        assert_eq!(run_idm(&n, &truthful_profile(&n)), Err(MechanismError::NoParticipants));
    }
}
