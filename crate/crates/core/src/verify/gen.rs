use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::network::{BuyerId, Network};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("buyer count must be at least 1")]
    NoBuyers,
    #[error("item count must be at least 1")]
    NoItems,
    #[error("edge probability {0} is outside [0, 1]")]
    Probability(String),
    #[error("valuation domain must be non-empty, strictly ascending and non-negative")]
    Domain,
}

/// Parameters of one random instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGenConfig<V> {
    pub buyer_count: usize,
    pub edge_probability: f64,
    pub valuation_domain: Vec<V>,
    pub item_count: usize,
    pub seed: u64,
}

impl<V: Value> InstanceGenConfig<V> {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.buyer_count == 0 {
            return Err(GenError::NoBuyers);
        }
        if self.item_count == 0 {
            return Err(GenError::NoItems);
        }
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(GenError::Probability(self.edge_probability.to_string()));
        }
        validate_domain(&self.valuation_domain)
    }
}

pub fn validate_domain<V: Value>(domain: &[V]) -> Result<(), GenError> {
    let ascending = domain.windows(2).all(|w| w[0] < w[1]);
    if domain.is_empty() || !ascending || domain[0].is_negative() {
        return Err(GenError::Domain);
    }
    Ok(())
}

/// Integer domain `lo..=hi`.
pub fn integer_domain<V: Value>(lo: i64, hi: i64) -> Vec<V> {
    (lo..=hi).map(V::from_int).collect()
}

/// Parses a valuation domain: an inclusive integer range `lo..hi` or a
/// comma-separated list of decimals. The result is sorted and deduplicated,
/// then validated.
pub fn parse_domain<V: Value>(spec: &str) -> Result<Vec<V>, String> {
    let spec = spec.trim();
    let mut out: Vec<V> = if let Some((lo, hi)) = spec.split_once("..") {
        let lo: i64 = lo.trim().parse().map_err(|_| format!("bad range start in `{spec}`"))?;
        let hi: i64 = hi.trim().parse().map_err(|_| format!("bad range end in `{spec}`"))?;
        if lo > hi {
            return Err(format!("empty range `{spec}`"));
        }
        integer_domain(lo, hi)
    } else {
        spec.split(',')
            .map(|t| V::parse_decimal(t).ok_or_else(|| format!("`{}` is not a decimal value", t.trim())))
            .collect::<Result<_, _>>()?
    };
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup_by(|a, b| a.total_cmp(b).is_eq());
    validate_domain(&out).map_err(|e| e.to_string())?;
    Ok(out)
}

/// Erdős–Rényi graph over the buyers plus the seller. Every buyer–buyer pair
/// and every seller–buyer pair is an edge with the configured probability; if
/// the seller ends up isolated one uniformly chosen buyer is attached to her.
/// Valuations are uniform over the domain. Deterministic in the seed.
pub fn gen_instance<V: Value>(cfg: &InstanceGenConfig<V>) -> Result<Network<V>, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.buyer_count as u32;
    let ids: Vec<BuyerId> = (0..n).map(BuyerId).collect();
    let valuations: BTreeMap<BuyerId, V> =
        ids.iter().map(|&i| (i, cfg.valuation_domain[rng.gen_range(0..cfg.valuation_domain.len())].clone())).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(cfg.edge_probability) {
                edges.push((BuyerId(a), BuyerId(b)));
            }
        }
    }
    let mut seller: Vec<BuyerId> = ids.iter().copied().filter(|_| rng.gen_bool(cfg.edge_probability)).collect();
    if seller.is_empty() {
        seller.push(BuyerId(rng.gen_range(0..n)));
    }
    Ok(Network::from_edges(valuations, seller, edges, cfg.item_count).expect("generated network is valid"))
}

/// Seed of the `index`-th instance of a campaign (SplitMix64 step).
pub fn instance_seed(campaign_seed: u64, index: u64) -> u64 {
    let mut z = campaign_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
