use std::collections::BTreeMap;

use crate::network::{BuyerId, Network};
use crate::value::Value;

use super::Outcome;

/// `(k+1)`-price auction among the seller's neighbors only, on true
/// valuations. Winners are the `k` best-ranked neighbors; each pays the
/// `(k+1)`-th highest neighbor valuation, or zero when there is none.
pub fn run_vcg_local<V: Value>(net: &Network<V>, k: usize) -> Outcome<V> {
    let mut ranked: Vec<(BuyerId, &V)> =
        net.seller_neighbors().iter().map(|&i| (i, net.valuation(i).expect("seller neighbor is a buyer"))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(&b.0)));
    let price = ranked.get(k).map(|(_, v)| (*v).clone()).unwrap_or_else(V::zero);
    let winners = ranked.iter().take(k).map(|(i, _)| *i).collect();
    let mut payments: BTreeMap<BuyerId, V> = net.buyer_ids().map(|i| (i, V::zero())).collect();
    for (i, _) in ranked.iter().take(k) {
        payments.insert(*i, price.clone());
    }
    Outcome::from_parts(winners, payments, Vec::new())
}
