//! `diffauction`: run diffusion auctions on network files, generate random
//! instances, and run property campaigns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use diffusion_auction::allocation::build_allocation_tree;
use diffusion_auction::critical::critical_structure;
use diffusion_auction::io::{parse_actions, parse_network, write_network, Labels, LoadedNetwork};
use diffusion_auction::mechanisms::{
    run_idm, run_vcg_local, ClosureRule, ConstraintMode, Gidm, GidmConfig, MechanismError, Outcome,
};
use diffusion_auction::network::{check_feasible, ActionProfile};
use diffusion_auction::report::{tree_to_dot, CampaignSummary, OutcomeReport};
use diffusion_auction::verify::{
    gen_instance, parse_domain, run_campaign, CampaignConfig, CampaignKind, InstanceGenConfig,
};
use diffusion_auction::{Exact, Network};

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_FEASIBILITY: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "diffauction", version, about = "Diffusion auctions on social networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on a network file.
    Run(RunArgs),
    /// Run a property campaign over seeded random instances.
    Verify(VerifyArgs),
    /// Write a seeded random network file.
    Gen(GenArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mechanism {
    Idm,
    Gidm,
    VcgLocal,
}

impl Mechanism {
    fn name(self) -> &'static str {
        match self {
            Mechanism::Idm => "idm",
            Mechanism::Gidm => "gidm",
            Mechanism::VcgLocal => "vcg-local",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Constraints {
    Corrected,
    PreCorrection,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Closure {
    WithTopDescendants,
    ParentsOnly,
}

#[derive(Args)]
struct GidmArgs {
    /// Constraint form of the GIDM welfare programs.
    #[arg(long, value_enum, default_value = "corrected")]
    constraints: Constraints,
    /// Critical children included in the competitor closure.
    #[arg(long, value_enum, default_value = "with-top-descendants")]
    closure: Closure,
}

impl GidmArgs {
    fn config(&self) -> GidmConfig {
        GidmConfig {
            constraints: match self.constraints {
                Constraints::Corrected => ConstraintMode::Corrected,
                Constraints::PreCorrection => ConstraintMode::PreCorrection,
            },
            closure: match self.closure {
                Closure::WithTopDescendants => ClosureRule::WithTopDescendants,
                Closure::ParentsOnly => ClosureRule::ParentsOnly,
            },
            ..GidmConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    mechanism: Mechanism,
    /// Number of items; overrides the file.
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    network: PathBuf,
    /// Action profile file; default is the embedded profile, else truthful.
    #[arg(long)]
    actions: Option<PathBuf>,
    /// Report destination; default is standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Include the step-by-step trace.
    #[arg(long)]
    trace: bool,
    /// Write the allocation tree in DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Add a generation timestamp to the report.
    #[arg(long)]
    metadata: bool,
    #[command(flatten)]
    gidm: GidmArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_parser = parse_kind)]
    campaign: CampaignKind,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Largest instance size.
    #[arg(long, default_value_t = 8)]
    buyers: usize,
    /// Item counts, cycled over trials.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    items: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "edge-prob", default_value_t = 0.35)]
    edge_prob: f64,
    /// Valuation domain: `lo..hi` or a comma-separated list.
    #[arg(long, default_value = "0..9")]
    values: String,
    /// Worker threads; 0 means one per core.
    #[arg(long, env = "DIFFAUCTION_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Write the structured campaign report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    gidm: GidmArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    buyers: usize,
    #[arg(long = "edge-prob")]
    edge_prob: f64,
    #[arg(long, default_value_t = 1)]
    items: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "0..9")]
    values: String,
    /// Destination; default is standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<CampaignKind, String> {
    s.parse()
}

/// A command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(EXIT_INTERNAL, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let text = read(&a.network)?;
    let loaded: LoadedNetwork<Exact> =
        parse_network(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", a.network.display())))?;
    let LoadedNetwork { network, labels, .. } = &loaded;
    let k = a.items.unwrap_or(network.item_count());
    let net = network.with_item_count(k).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    if a.mechanism == Mechanism::Idm && k != 1 {
        return Err(Failure::new(EXIT_PARSE, "idm sells exactly one item; use --items 1"));
    }

    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let profile: ActionProfile<Exact> = match &a.actions {
        Some(path) => {
            let actions = read(path)?;
            hasher.update(actions.as_bytes());
            parse_actions(&actions, &net).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?
        }
        None => loaded.profile_or_truthful(),
    };
    let digest = hex::encode(hasher.finalize());
    check_feasible(&net, &profile).map_err(|e| Failure::new(EXIT_FEASIBILITY, format!("infeasible profile: {e}")))?;

    let mut warnings = Vec::new();
    if net.seller_neighbors().is_empty() {
        warnings.push("the seller has no neighbors; nothing is sold".to_owned());
    }
    let outcome = run_mechanism(a.mechanism, &a.gidm, &net, &profile)?;

    let mut report = OutcomeReport::new(a.mechanism.name(), &net, &profile, labels, &outcome).with_digest(digest);
    for w in &warnings {
        eprintln!("warning: {w}");
        report = report.with_warning(w.clone());
    }
    if a.trace {
        report = report.with_trace(&outcome.trace, labels);
    }
    let mut body = match a.format {
        Format::Text => report.to_text(),
        Format::Structured => report.to_json(),
    };
    if a.metadata {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        body = match a.format {
            Format::Text => format!("{body}generated {secs}\n"),
            Format::Structured => {
                let mut v: serde_json::Value = serde_json::from_str(&body).expect("report is JSON");
                v["generated_unix"] = serde_json::json!(secs);
                format!("{}\n", serde_json::to_string_pretty(&v).expect("JSON"))
            }
        };
    }
    write_or_print(a.out.as_deref(), &body)?;

    if let Some(path) = &a.dot {
        let cs = critical_structure(&net, &profile);
        let tree = build_allocation_tree(&net, &profile, &cs, k)
            .map_err(|e| Failure::new(EXIT_INTERNAL, format!("allocation tree: {e}")))?;
        write_or_print(Some(path), &tree_to_dot(&tree, labels))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_mechanism(
    mechanism: Mechanism,
    gidm: &GidmArgs,
    net: &Network<Exact>,
    profile: &ActionProfile<Exact>,
) -> Result<Outcome<Exact>, Failure> {
    let result = match mechanism {
        Mechanism::Idm => run_idm(net, profile),
        Mechanism::Gidm => Gidm::new(gidm.config()).run(net, profile).map(|r| r.outcome),
        Mechanism::VcgLocal => Ok(run_vcg_local(net, net.item_count())),
    };
    match result {
        Ok(o) => Ok(o),
        Err(MechanismError::NoParticipants) => Ok(Outcome::empty(net.buyer_ids())),
        Err(MechanismError::Infeasible(e)) => Err(Failure::new(EXIT_FEASIBILITY, format!("infeasible profile: {e}"))),
        Err(e @ MechanismError::InternalInvariant(_)) => Err(Failure::new(EXIT_INTERNAL, e.to_string())),
    }
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let domain: Vec<Exact> = parse_domain(&a.values).map_err(|e| Failure::new(EXIT_PARSE, e))?;
    let cfg = CampaignConfig {
        kind: a.campaign,
        trials: a.trials,
        max_buyers: a.buyers,
        items: a.items.clone(),
        seed: a.seed,
        edge_probability: a.edge_prob,
        domain,
        gidm: a.gidm.config(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))?;
    let report = pool.install(|| run_campaign(&cfg)).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    let summary = CampaignSummary::new(&report);
    print!("{}", summary.to_text());
    if let Some(path) = &a.out {
        write_or_print(Some(path), &summary.to_json())?;
    }
    if !summary.passed && !cfg.kind.is_diagnostic() {
        for f in summary.violations.iter().chain(&summary.errors).take(1) {
            let witness = serde_json::to_string_pretty(&f.network).expect("JSON");
            eprintln!("witness (trial {}, items {}):\n{witness}", f.trial, f.items);
        }
        return Ok(ExitCode::from(EXIT_VIOLATIONS));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let domain: Vec<Exact> = parse_domain(&a.values).map_err(|e| Failure::new(EXIT_PARSE, e))?;
    let cfg = InstanceGenConfig {
        buyer_count: a.buyers,
        edge_probability: a.edge_prob,
        valuation_domain: domain,
        item_count: a.items,
        seed: a.seed,
    };
    let net = gen_instance(&cfg).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    write_or_print(a.out.as_deref(), &write_network(&net, &Labels::default(), None))?;
    Ok(ExitCode::SUCCESS)
}
