//! Outcome reports and allocation-tree export.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::allocation::AllocationTree;
use crate::io::{network_to_file, Labels, NetworkFile};
use crate::mechanisms::{Outcome, TraceEvent};
use crate::network::{ActionProfile, BuyerId, Network};
use crate::value::Value;
use crate::verify::{CampaignReport, Finding};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub item: u8,
    pub payment: String,
    /// Utility evaluated at the buyer's true valuation.
    pub utility: String,
}

/// Per-buyer items and payments of one mechanism run, rows ordered by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeReport {
    pub mechanism: String,
    pub items: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub rows: Vec<ReportRow>,
    pub revenue: String,
    /// Sum of the winners' reported valuations.
    pub welfare: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
}

impl OutcomeReport {
    pub fn new<V: Value>(
        mechanism: &str,
        net: &Network<V>,
        profile: &ActionProfile<V>,
        labels: &Labels,
        outcome: &Outcome<V>,
    ) -> Self {
        let rows = net
            .buyer_ids()
            .map(|i| ReportRow {
                id: i.0,
                label: labels.get(i).map(str::to_owned),
                item: outcome.item_of(i),
                payment: outcome.payment(i).to_decimal_string(),
                utility: outcome.utility(i, net.valuation(i).expect("buyer")).to_decimal_string(),
            })
            .collect();
        let welfare = outcome.winners.iter().fold(V::zero(), |acc, &i| {
            acc + profile.reported(i).or_else(|| net.valuation(i)).cloned().unwrap_or_else(V::zero)
        });
        // Revenue is re-summed from the rows so the report is self-consistent.
        let revenue = net.buyer_ids().fold(V::zero(), |acc, i| acc + outcome.payment(i));
        Self {
            mechanism: mechanism.to_owned(),
            items: net.item_count(),
            input_digest: None,
            rows,
            revenue: revenue.to_decimal_string(),
            welfare: welfare.to_decimal_string(),
            warnings: Vec::new(),
            trace: None,
        }
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.input_digest = Some(digest.into());
        self
    }

    pub fn with_trace<V: Value>(mut self, trace: &[TraceEvent<V>], labels: &Labels) -> Self {
        self.trace = Some(trace.iter().map(|e| render_event(e, labels)).collect());
        self
    }

    pub fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warnings.push(warning.into());
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mechanism {}", self.mechanism);
        let _ = writeln!(out, "items     {}", self.items);
        if let Some(d) = &self.input_digest {
            let _ = writeln!(out, "input     sha256:{d}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning   {w}");
        }
        let name = |r: &ReportRow| r.label.clone().unwrap_or_else(|| r.id.to_string());
        let w_name = self.rows.iter().map(|r| name(r).len()).chain([5]).max().unwrap_or(5);
        let w_pay = self.rows.iter().map(|r| r.payment.len()).chain([7, self.revenue.len()]).max().unwrap_or(7);
        let w_util = self.rows.iter().map(|r| r.utility.len()).chain([7]).max().unwrap_or(7);
        out.push('\n');
        let _ = writeln!(out, "{:>4}  {:<w_name$}  item  {:>w_pay$}  {:>w_util$}", "id", "buyer", "payment", "utility");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>4}  {:<w_name$}  {:>4}  {:>w_pay$}  {:>w_util$}",
                r.id,
                name(r),
                r.item,
                r.payment,
                r.utility
            );
        }
        let _ = writeln!(out, "{:>4}  {:<w_name$}  {:>4}  {:>w_pay$}", "", "total", self.item_total(), self.revenue);
        out.push('\n');
        let _ = writeln!(out, "revenue   {}", self.revenue);
        let _ = writeln!(out, "welfare   {}", self.welfare);
        if let Some(trace) = &self.trace {
            out.push_str("\ntrace\n");
            for line in trace {
                let _ = writeln!(out, "  {line}");
            }
        }
        out
    }

    fn item_total(&self) -> usize {
        self.rows.iter().map(|r| usize::from(r.item)).sum()
    }
}

fn set_names(set: &BTreeSet<BuyerId>, labels: &Labels) -> String {
    let names: Vec<String> = set.iter().map(|&i| labels.name(i)).collect();
    format!("{{{}}}", names.join(","))
}

/// One trace event with buyer labels in place of ids.
pub fn render_event<V: Value>(event: &TraceEvent<V>, labels: &Labels) -> String {
    let n = |i: &BuyerId| labels.name(*i);
    match event {
        TraceEvent::Give { from, to, items } => format!("give {} -> {} items={items}", n(from), n(to)),
        TraceEvent::Pop { buyer, items } => format!("pop {} items={items}", n(buyer)),
        TraceEvent::Evaluate { buyer, received, out, closure, welfare_winners, wins } => format!(
            "evaluate {} received={} out={} closure={} welfare_winners={} wins={wins}",
            n(buyer),
            set_names(received, labels),
            set_names(out, labels),
            set_names(closure, labels),
            set_names(welfare_winners, labels)
        ),
        TraceEvent::JoinWinners { buyer } => format!("join {}", n(buyer)),
        TraceEvent::GetFrom { buyer, from } => format!("getfrom {} <- {}", n(buyer), n(from)),
        TraceEvent::WeightDecrement { buyer, weight } => format!("decrement {} weight={weight}", n(buyer)),
        TraceEvent::Chain { chain } => {
            let names: Vec<String> = chain.iter().map(n).collect();
            format!("chain {}", names.join(" > "))
        }
        TraceEvent::Price { buyer, price } => format!("price {} = {}", n(buyer), price.to_decimal_string()),
        TraceEvent::Pass { from, to } => format!("pass {} -> {}", n(from), n(to)),
        TraceEvent::Keep { buyer } => format!("keep {}", n(buyer)),
    }
}

fn dot_id(i: BuyerId) -> String {
    if i.is_seller() {
        "s".to_owned()
    } else {
        format!("b{}", i.0)
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The allocation tree in DOT. Nodes are labeled `name/value/weight`;
/// efficient winners are drawn with a double border.
pub fn tree_to_dot<V: Value>(tree: &AllocationTree<V>, labels: &Labels) -> String {
    let mut out = String::from("digraph allocation_tree {\n  node [shape=box];\n  s [label=\"s\"];\n");
    let mut nodes: Vec<BuyerId> = tree.nodes().collect();
    nodes.sort();
    for &i in &nodes {
        let value = tree.value(i).map(|v| v.to_decimal_string()).unwrap_or_default();
        let label = format!("{}/{}/{}", labels.name(i), value, tree.weight(i));
        let style = if tree.efficient_winners().contains(&i) { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  {} [label=\"{}\"{style}];", dot_id(i), dot_escape(&label));
    }
    let mut stack = vec![tree.root()];
    while let Some(p) = stack.pop() {
        for &c in tree.children(p) {
            let _ = writeln!(out, "  {} -> {};", dot_id(p), dot_id(c));
        }
        stack.extend(tree.children(p).iter().rev().copied());
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FindingRecord {
    pub trial: usize,
    pub instance_seed: u64,
    pub items: usize,
    pub detail: String,
    /// The instance, replayable with `run`.
    pub network: NetworkFile,
}

impl FindingRecord {
    fn new<V: Value>(f: &Finding<V>) -> Self {
        Self {
            trial: f.trial,
            instance_seed: f.instance_seed,
            items: f.items,
            detail: f.detail.clone(),
            network: network_to_file(&f.network, &Labels::default(), None),
        }
    }
}

/// Serializable summary of a campaign, findings in trial order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CampaignSummary {
    pub campaign: String,
    pub seed: u64,
    pub passed: bool,
    pub instances: usize,
    pub extra_instances: usize,
    pub checks: usize,
    pub max_gain: String,
    pub violations: Vec<FindingRecord>,
    pub errors: Vec<FindingRecord>,
    pub notes: Vec<FindingRecord>,
}

impl CampaignSummary {
    pub fn new<V: Value>(report: &CampaignReport<V>) -> Self {
        Self {
            campaign: report.kind.name().to_owned(),
            seed: report.seed,
            passed: report.passed(),
            instances: report.instances,
            extra_instances: report.extra_instances,
            checks: report.checks,
            max_gain: report.max_gain.to_decimal_string(),
            violations: report.violations.iter().map(FindingRecord::new).collect(),
            errors: report.errors.iter().map(FindingRecord::new).collect(),
            notes: report.notes.iter().map(FindingRecord::new).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// One status line plus one line per finding.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} seed={} instances={} extra={} checks={} violations={} errors={} notes={} max_gain={} {}\n",
            self.campaign,
            self.seed,
            self.instances,
            self.extra_instances,
            self.checks,
            self.violations.len(),
            self.errors.len(),
            self.notes.len(),
            self.max_gain,
            if self.passed { "PASS" } else { "FAIL" }
        );
        for (kind, list) in [("violation", &self.violations), ("error", &self.errors), ("note", &self.notes)] {
            for f in list {
                let _ = writeln!(
                    out,
                    "  {kind} trial={} seed={} items={}: {}",
                    f.trial, f.instance_seed, f.items, f.detail
                );
            }
        }
        out
    }
}
