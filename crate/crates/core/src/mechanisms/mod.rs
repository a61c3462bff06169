//! Auction mechanisms mapping a network and action profile to an [`Outcome`].

mod decomposition;
mod gidm;
mod idm;
mod vcg;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::allocation::AllocationError;
use crate::critical::CriticalError;
use crate::network::{BuyerId, FeasibilityError};
use crate::value::Value;

pub use crate::allocation::ClosureRule;
pub use decomposition::{payment_decomposition, terms_for, PaymentTerms};
pub use gidm::{run_gidm, ConstraintMode, Gidm, GidmConfig, GidmRun, PassState, PopSnapshot, PushOrder};
pub use idm::run_idm;
pub use vcg::run_vcg_local;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("no buyer participates")]
    NoParticipants,
    #[error(transparent)]
    Infeasible(#[from] FeasibilityError),
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
}

impl From<AllocationError> for MechanismError {
    fn from(e: AllocationError) -> Self {
        MechanismError::InternalInvariant(e.to_string())
    }
}

impl From<CriticalError> for MechanismError {
    fn from(e: CriticalError) -> Self {
        MechanismError::InternalInvariant(e.to_string())
    }
}

/// One step of a mechanism run.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent<V> {
    /// `from` (possibly the seller) hands `items` items to `to`.
    Give {
        from: BuyerId,
        to: BuyerId,
        items: usize,
    },
    Pop {
        buyer: BuyerId,
        items: usize,
    },
    /// Pop-time evaluation of the closure-excluded welfare program.
    Evaluate {
        buyer: BuyerId,
        received: BTreeSet<BuyerId>,
        out: BTreeSet<BuyerId>,
        closure: BTreeSet<BuyerId>,
        welfare_winners: BTreeSet<BuyerId>,
        wins: bool,
    },
    JoinWinners {
        buyer: BuyerId,
    },
    GetFrom {
        buyer: BuyerId,
        from: BuyerId,
    },
    WeightDecrement {
        buyer: BuyerId,
        weight: usize,
    },
    /// IDM: critical chain of the top-ranked buyer, seller side first.
    Chain {
        chain: Vec<BuyerId>,
    },
    /// IDM: highest report without `buyer`.
    Price {
        buyer: BuyerId,
        price: V,
    },
    Pass {
        from: BuyerId,
        to: BuyerId,
    },
    Keep {
        buyer: BuyerId,
    },
}

fn fmt_set(set: &BTreeSet<BuyerId>) -> String {
    let items: Vec<String> = set.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

impl<V: Value> fmt::Display for TraceEvent<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Give { from, to, items } => write!(f, "give {from} -> {to} items={items}"),
            TraceEvent::Pop { buyer, items } => write!(f, "pop {buyer} items={items}"),
            TraceEvent::Evaluate { buyer, received, out, closure, welfare_winners, wins } => write!(
                f,
                "evaluate {buyer} received={} out={} closure={} welfare_winners={} wins={wins}",
                fmt_set(received),
                fmt_set(out),
                fmt_set(closure),
                fmt_set(welfare_winners)
            ),
            TraceEvent::JoinWinners { buyer } => write!(f, "join {buyer}"),
            TraceEvent::GetFrom { buyer, from } => write!(f, "getfrom {buyer} <- {from}"),
            TraceEvent::WeightDecrement { buyer, weight } => write!(f, "decrement {buyer} weight={weight}"),
            TraceEvent::Chain { chain } => {
                let items: Vec<String> = chain.iter().map(|i| i.to_string()).collect();
                write!(f, "chain {}", items.join(" > "))
            }
            TraceEvent::Price { buyer, price } => write!(f, "price {buyer} = {}", price.to_decimal_string()),
            TraceEvent::Pass { from, to } => write!(f, "pass {from} -> {to}"),
            TraceEvent::Keep { buyer } => write!(f, "keep {buyer}"),
        }
    }
}

/// Items and payments produced by a mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<V> {
    pub winners: BTreeSet<BuyerId>,
    /// Every buyer of the network; negative means the buyer is paid.
    pub payments: BTreeMap<BuyerId, V>,
    pub revenue: V,
    pub trace: Vec<TraceEvent<V>>,
}

impl<V: Value> Outcome<V> {
    /// Nothing sold, nobody pays.
    pub fn empty(buyers: impl IntoIterator<Item = BuyerId>) -> Self {
        Self {
            winners: BTreeSet::new(),
            payments: buyers.into_iter().map(|i| (i, V::zero())).collect(),
            revenue: V::zero(),
            trace: Vec::new(),
        }
    }

    pub(crate) fn from_parts(
        winners: BTreeSet<BuyerId>,
        payments: BTreeMap<BuyerId, V>,
        trace: Vec<TraceEvent<V>>,
    ) -> Self {
        let revenue = payments.values().fold(V::zero(), |acc, p| acc + p.clone());
        Self { winners, payments, revenue, trace }
    }

    pub fn item_of(&self, i: BuyerId) -> u8 {
        u8::from(self.winners.contains(&i))
    }

    pub fn payment(&self, i: BuyerId) -> V {
        self.payments.get(&i).cloned().unwrap_or_else(V::zero)
    }

    /// Quasi-linear utility of `i` with true valuation `valuation`.
    pub fn utility(&self, i: BuyerId, valuation: &V) -> V {
        let gross = if self.winners.contains(&i) { valuation.clone() } else { V::zero() };
        gross - self.payment(i)
    }

    /// Same allocation, payments and revenue, ignoring traces.
    pub fn same_result(&self, other: &Self) -> bool {
        self.winners == other.winners && self.payments == other.payments && self.revenue == other.revenue
    }
}
