//! Seeded property campaigns over random instances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::mechanisms::{Gidm, GidmConfig};
use crate::network::Network;
use crate::value::Value;

use super::checks::{
    check_critical_oracle, check_idm_equivalence_with, check_no_diffusion_with, check_order_sensitivity,
    check_piecewise_constancy, check_revenue_bound_with, check_silence_equivalence,
};
use super::deviations::{check_ic_with, check_ir_with};
use super::gen::{gen_instance, instance_seed, GenError, InstanceGenConfig};

/// Largest participant count for which every push order is tried.
pub const ORDER_SENSITIVITY_MAX_PARTICIPANTS: usize = 6;

/// Attempts per revenue trial to draw a seller with more than `K` neighbors.
const REVENUE_ATTEMPTS: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CampaignKind {
    Ic,
    Ir,
    Revenue,
    IdmEquivalence,
    NoDiffusion,
    CriticalOracle,
    OrderSensitivity,
}

impl CampaignKind {
    pub const ALL: [CampaignKind; 7] = [
        CampaignKind::Ic,
        CampaignKind::Ir,
        CampaignKind::Revenue,
        CampaignKind::IdmEquivalence,
        CampaignKind::NoDiffusion,
        CampaignKind::CriticalOracle,
        CampaignKind::OrderSensitivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CampaignKind::Ic => "ic",
            CampaignKind::Ir => "ir",
            CampaignKind::Revenue => "revenue",
            CampaignKind::IdmEquivalence => "idm-equiv",
            CampaignKind::NoDiffusion => "no-diffusion",
            CampaignKind::CriticalOracle => "critical-oracle",
            CampaignKind::OrderSensitivity => "order-sensitivity",
        }
    }

    /// Whether findings of this campaign are informational only.
    pub fn is_diagnostic(self) -> bool {
        self == CampaignKind::OrderSensitivity
    }
}

impl fmt::Display for CampaignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CampaignKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown campaign `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig<V> {
    pub kind: CampaignKind,
    pub trials: usize,
    /// Instance sizes are drawn uniformly from `1..=max_buyers` (from `K+1`
    /// for the revenue campaign).
    pub max_buyers: usize,
    /// Item counts, cycled over the trials.
    pub items: Vec<usize>,
    pub seed: u64,
    pub edge_probability: f64,
    pub domain: Vec<V>,
    pub gidm: GidmConfig,
}

/// One instance that failed a check, kept for replay.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding<V> {
    pub trial: usize,
    pub instance_seed: u64,
    pub items: usize,
    pub network: Network<V>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport<V> {
    pub kind: CampaignKind,
    pub seed: u64,
    /// Instances that counted towards the trial total.
    pub instances: usize,
    /// Extra instances drawn and checked while looking for qualifying ones.
    pub extra_instances: usize,
    /// Deviations for IC/IR, otherwise one per checked instance.
    pub checks: usize,
    pub violations: Vec<Finding<V>>,
    /// Mechanism failures and broken invariants; these also fail a campaign.
    pub errors: Vec<Finding<V>>,
    /// Informational findings.
    pub notes: Vec<Finding<V>>,
    /// Largest IC gain or IR shortfall seen.
    pub max_gain: V,
}

impl<V: Value> CampaignReport<V> {
    fn new(kind: CampaignKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            instances: 0,
            extra_instances: 0,
            checks: 0,
            violations: Vec::new(),
            errors: Vec::new(),
            notes: Vec::new(),
            max_gain: V::zero(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.errors.is_empty()
    }

    fn absorb(&mut self, other: CampaignReport<V>) {
        self.instances += other.instances;
        self.extra_instances += other.extra_instances;
        self.checks += other.checks;
        self.violations.extend(other.violations);
        self.errors.extend(other.errors);
        self.notes.extend(other.notes);
        if other.max_gain.total_cmp(&self.max_gain).is_gt() {
            self.max_gain = other.max_gain;
        }
    }
}

impl<V: Value> CampaignConfig<V> {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.max_buyers == 0 {
            return Err(GenError::NoBuyers);
        }
        if self.items.is_empty() || self.items.contains(&0) {
            return Err(GenError::NoItems);
        }
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(GenError::Probability(self.edge_probability.to_string()));
        }
        super::gen::validate_domain(&self.domain)
    }

    fn items_for(&self, trial: usize) -> usize {
        self.items[trial % self.items.len()]
    }

    fn instance(&self, seed: u64, min_buyers: usize) -> Network<V> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = min_buyers.clamp(1, self.max_buyers.max(1));
        let hi = self.max_buyers.max(lo);
        let cfg = InstanceGenConfig {
            buyer_count: rng.gen_range(lo..=hi),
            edge_probability: self.edge_probability,
            valuation_domain: self.domain.clone(),
            item_count: 1,
            seed: rng.gen(),
        };
        gen_instance(&cfg).expect("campaign config was validated")
    }
}

/// Runs a campaign. Trials run in parallel on the current rayon pool; the
/// report is identical for any pool size.
pub fn run_campaign<V: Value>(cfg: &CampaignConfig<V>) -> Result<CampaignReport<V>, GenError> {
    cfg.validate()?;
    let parts: Vec<CampaignReport<V>> = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();
    let mut report = CampaignReport::new(cfg.kind, cfg.seed);
    for p in parts {
        report.absorb(p);
    }
    Ok(report)
}

fn run_trial<V: Value>(cfg: &CampaignConfig<V>, trial: usize) -> CampaignReport<V> {
    let mut report = CampaignReport::new(cfg.kind, cfg.seed);
    let k = cfg.items_for(trial);
    let seed = instance_seed(cfg.seed, trial as u64);
    let finding = |seed: u64, net: &Network<V>, detail: String| Finding {
        trial,
        instance_seed: seed,
        items: k,
        network: net.with_item_count(k).expect("k is positive"),
        detail,
    };
    let gidm = Gidm::new(cfg.gidm.clone());

    if cfg.kind == CampaignKind::Revenue {
        for attempt in 0..REVENUE_ATTEMPTS {
            let s = if attempt == 0 { seed } else { instance_seed(seed, attempt) };
            let net = cfg.instance(s, k + 1);
            let qualifies = net.seller_neighbors().len() > k;
            report.checks += 1;
            match check_revenue_bound_with(&gidm, &net, k) {
                Ok(r) if r.pass => {}
                Ok(r) => report.violations.push(finding(
                    s,
                    &net,
                    format!(
                        "revenue {} below bound {} or neighbors-only revenue {}",
                        r.revenue.to_decimal_string(),
                        r.bound.to_decimal_string(),
                        r.local_revenue.to_decimal_string()
                    ),
                )),
                Err(e) => report.errors.push(finding(s, &net, e)),
            }
            if qualifies {
                report.instances += 1;
                return report;
            }
            report.extra_instances += 1;
        }
        report.errors.push(finding(
            seed,
            &cfg.instance(seed, k + 1),
            "no instance with more seller neighbors than items".into(),
        ));
        return report;
    }

    let net = cfg.instance(seed, 1);
    report.instances = 1;
    match cfg.kind {
        CampaignKind::Ic => {
            let dev = check_ic_with(&gidm, &net, k, &cfg.domain);
            report.checks += dev.checked_deviations;
            report.max_gain = dev.max_gain.clone();
            for v in dev.violations {
                let detail = format!(
                    "buyer {} deviates to {:?}: utility {} -> {}",
                    v.buyer,
                    v.deviation,
                    v.truthful_utility.to_decimal_string(),
                    v.deviant_utility.to_decimal_string()
                );
                report.violations.push(finding(seed, &net, detail));
            }
            for e in dev.errors {
                report.errors.push(finding(seed, &net, e));
            }
            let sized = net.with_item_count(k).expect("k is positive");
            for i in crate::network::participants(&sized, &crate::network::truthful_profile(&sized)) {
                match check_piecewise_constancy(&gidm, &net, k, i) {
                    Ok(None) => {}
                    Ok(Some(d)) => report.errors.push(finding(seed, &net, format!("piecewise constancy: {d}"))),
                    Err(e) => report.errors.push(finding(seed, &net, e)),
                }
            }
            match check_silence_equivalence(&gidm, &net, k) {
                Ok(diffs) => {
                    for d in diffs {
                        report.notes.push(finding(seed, &net, format!("silence: {d}")));
                    }
                }
                Err(e) => report.errors.push(finding(seed, &net, e)),
            }
        }
        CampaignKind::Ir => {
            let dev = check_ir_with(&gidm, &net, k);
            report.checks += dev.checked_deviations;
            report.max_gain = dev.max_gain.clone();
            for v in dev.violations {
                let detail = format!(
                    "buyer {} with {:?} has utility {}",
                    v.buyer,
                    v.deviation,
                    v.deviant_utility.to_decimal_string()
                );
                report.violations.push(finding(seed, &net, detail));
            }
            for e in dev.errors {
                report.errors.push(finding(seed, &net, e));
            }
        }
        CampaignKind::IdmEquivalence => {
            report.checks += 1;
            match check_idm_equivalence_with(&gidm, &net) {
                Ok(None) => {}
                Ok(Some(d)) => report.violations.push(finding(seed, &net, d)),
                Err(e) => report.errors.push(finding(seed, &net, e)),
            }
        }
        CampaignKind::NoDiffusion => {
            report.checks += 1;
            match check_no_diffusion_with(&gidm, &net, k) {
                Ok(None) => {}
                Ok(Some(d)) => report.violations.push(finding(seed, &net, d)),
                Err(e) => report.errors.push(finding(seed, &net, e)),
            }
        }
        CampaignKind::CriticalOracle => {
            report.checks += 1;
            if let Some(d) = check_critical_oracle(&net) {
                report.violations.push(finding(seed, &net, d));
            }
        }
        CampaignKind::OrderSensitivity => {
            report.checks += 1;
            match check_order_sensitivity(&cfg.gidm, &net, k, ORDER_SENSITIVITY_MAX_PARTICIPANTS) {
                Ok(notes) => {
                    for d in notes {
                        report.notes.push(finding(seed, &net, d));
                    }
                }
                Err(e) => report.errors.push(finding(seed, &net, e)),
            }
        }
        CampaignKind::Revenue => unreachable!("handled above"),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Exact;
    use crate::verify::integer_domain;

    fn cfg(kind: CampaignKind, trials: usize) -> CampaignConfig<Exact> {
        CampaignConfig {
            kind,
            trials,
            max_buyers: 6,
            items: vec![1, 2],
            seed: 5,
            edge_probability: 0.4,
            domain: integer_domain(0, 9),
            gidm: GidmConfig::default(),
        }
    }

    #[test]
    fn names_round_trip() {
        for k in CampaignKind::ALL {
            assert_eq!(k.name().parse::<CampaignKind>(), Ok(k));
        }
        assert!("nope".parse::<CampaignKind>().is_err());
    }

    #[test]
    fn campaigns_are_deterministic() {
        let a = run_campaign(&cfg(CampaignKind::Revenue, 20)).unwrap();
        let b = run_campaign(&cfg(CampaignKind::Revenue, 20)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.instances, 20);
    }

    #[test]
    fn small_campaigns_pass() {
        for kind in [CampaignKind::CriticalOracle, CampaignKind::NoDiffusion, CampaignKind::Ir] {
            let r = run_campaign(&cfg(kind, 15)).unwrap();
            assert!(r.passed(), "{kind}: {:?} {:?}", r.violations, r.errors);
        }
    }

    #[test]
    fn rejects_zero_items() {
        let mut c = cfg(CampaignKind::Ic, 1);
        c.items = vec![0];
        assert_eq!(run_campaign(&c), Err(GenError::NoItems));
    }
}
