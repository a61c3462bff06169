//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use diffusion_auction::io::parse_network;
use diffusion_auction::mechanisms::Gidm;
use diffusion_auction::network::truthful_profile;
use diffusion_auction::verify::{
    check_decomposition, integer_domain, run_campaign, CampaignConfig, CampaignKind, CampaignReport, DECOMPOSITION_TAG,
};
use diffusion_auction::Exact;
use serde_json::Value as Json;

const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/figure1.net")
}

fn run_cli(items: &str, mechanism: &str) -> Result<(Json, Duration), String> {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_diffauction"))
        .args(["run", "--mechanism", mechanism, "--items", items, "--format", "structured", "--trace", "--network"])
        .arg(fixture())
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !o.status.success() {
        return Err(format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    let v = serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
    Ok((v, elapsed))
}

fn rows(v: &Json) -> Vec<(String, i64, String)> {
    v["rows"]
        .as_array()
        .map(|rs| {
            rs.iter()
                .map(|r| {
                    (
                        r["label"].as_str().unwrap_or("").to_string(),
                        r["item"].as_i64().unwrap_or(-1),
                        r["payment"].as_str().unwrap_or("").to_string(),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

fn idm_regression() -> Outcome {
    let (v, t) = match run_cli("1", "idm") {
        Ok(x) => x,
        Err(e) => return Outcome { pass: false, detail: e },
    };
    let mut bad = Vec::new();
    for (label, item, pay) in rows(&v) {
        let (want_item, want_pay) = match label.as_str() {
            "K" => (1, "17"),
            "C" => (0, "-1"),
            _ => (0, "0"),
        };
        if item != want_item || pay != want_pay {
            bad.push(format!("{label}: item {item} payment {pay}"));
        }
    }
    if v["revenue"] != "16" {
        bad.push(format!("revenue {}", v["revenue"]));
    }
    if t >= Duration::from_secs(1) {
        bad.push(format!("runtime {t:?}"));
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() { format!("K pays 17, C paid 1, revenue 16 in {t:.0?}") } else { bad.join("; ") },
    }
}

fn gidm_regression() -> Outcome {
    let (v, t) = match run_cli("5", "gidm") {
        Ok(x) => x,
        Err(e) => return Outcome { pass: false, detail: e },
    };
    let trace: Vec<&str> =
        v["trace"].as_array().map(|a| a.iter().filter_map(Json::as_str).collect()).unwrap_or_default();
    let has = |line: &str| trace.contains(&line);
    let starts = |prefix: &str| trace.iter().any(|l| l.starts_with(prefix));
    let winners: Vec<String> = rows(&v).into_iter().filter(|r| r.1 == 1).map(|r| r.0).collect();
    let expect = [
        ("seller gives C 3 items", has("give s -> C items=3")),
        ("seller gives D 2 items", has("give s -> D items=2")),
        ("no other seller gives", trace.iter().filter(|l| l.starts_with("give s ->")).count() == 2),
        ("D wins", has("join D") && winners.iter().any(|w| w == "D")),
        ("GetFrom(D) = M", has("getfrom D <- M")),
        ("H wins with received {D}, out {M}", has("join H") && starts("evaluate H received={D} out={M} closure={} ")),
        (
            "C loses with closure {F,G,K,L,P,Q,Y} and welfare winners {A,D,E,H,M}",
            has("evaluate C received={} out={} closure={F,G,K,L,P,Q,Y} welfare_winners={A,D,E,H,M} wins=false")
                && !has("join C"),
        ),
        ("runtime under 1 s", t < Duration::from_secs(1)),
    ];
    let failed: Vec<&str> = expect.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("trace matches, winners {} in {t:.0?}", winners.join(","))
        } else {
            format!("failed: {}", failed.join("; "))
        },
    }
}

fn campaign(kind: CampaignKind, trials: usize, max_buyers: usize, items: &[usize]) -> CampaignConfig<Exact> {
    CampaignConfig {
        kind,
        trials,
        max_buyers,
        items: items.to_vec(),
        seed: SEED,
        edge_probability: 0.35,
        domain: integer_domain(0, 9),
        gidm: Default::default(),
    }
}

fn run_timed(cfg: &CampaignConfig<Exact>) -> (CampaignReport<Exact>, Duration) {
    let start = Instant::now();
    let r = run_campaign(cfg).expect("valid campaign config");
    (r, start.elapsed())
}

fn first_problem(r: &CampaignReport<Exact>) -> String {
    r.violations
        .iter()
        .chain(&r.errors)
        .next()
        .map(|f| format!("; first: trial {} K={}: {}", f.trial, f.items, f.detail))
        .unwrap_or_default()
}

fn judge(r: &CampaignReport<Exact>, t: Duration, limit: Duration, what: &str) -> Outcome {
    let pass = r.passed() && t < limit;
    Outcome {
        pass,
        detail: format!(
            "{} instances, {} {what}, {} violations, {} errors in {t:.1?} (limit {limit:?}){}",
            r.instances,
            r.checks,
            r.violations.len(),
            r.errors.len(),
            first_problem(r)
        ),
    }
}

fn decomposition_errors(r: &CampaignReport<Exact>) -> usize {
    r.errors.iter().filter(|f| f.detail.contains(DECOMPOSITION_TAG)).count()
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "single-item regression on the example network", idm_regression()));
    results.push((2, "five-item regression on the example network", gidm_regression()));

    let (r, t) = run_timed(&campaign(CampaignKind::CriticalOracle, 1000, 12, &[1]));
    results.push((3, "dominators equal the node-removal oracle", judge(&r, t, Duration::from_secs(30), "comparisons")));

    let mut decomposition = 0;
    let (ic, t_ic) = run_timed(&campaign(CampaignKind::Ic, 200, 8, &[1, 2, 3]));
    let (ir, t_ir) = run_timed(&campaign(CampaignKind::Ir, 200, 8, &[1, 2, 3]));
    decomposition += decomposition_errors(&ic) + decomposition_errors(&ir);
    let mut ic_out = judge(&ic, t_ic + t_ir, Duration::from_secs(600), "deviations");
    ic_out.detail.push_str(&format!(", max gain {}, {} silence notes", ic.max_gain, ic.notes.len()));
    results.push((4, "no profitable unilateral deviation", ic_out));
    results.push((
        5,
        "truthful valuations never give negative utility",
        judge(&ir, t_ic + t_ir, Duration::from_secs(600), "invitation subsets"),
    ));

    let (rev, t) = run_timed(&campaign(CampaignKind::Revenue, 1000, 10, &[1, 2, 3]));
    decomposition += decomposition_errors(&rev);
    let mut rev_out = judge(&rev, t, Duration::from_secs(60), "runs");
    rev_out.detail.push_str(&format!(", {} extra draws with few seller neighbors", rev.extra_instances));
    results.push((6, "revenue bound and weak budget balance", rev_out));

    let (eq, t) = run_timed(&campaign(CampaignKind::IdmEquivalence, 500, 10, &[1]));
    decomposition += decomposition_errors(&eq);
    results.push((
        7,
        "one item reduces to the single-item mechanism",
        judge(&eq, t, Duration::from_secs(60), "comparisons"),
    ));

    let (nd, t) = run_timed(&campaign(CampaignKind::NoDiffusion, 200, 10, &[1, 2, 3]));
    decomposition += decomposition_errors(&nd);
    results.push((
        8,
        "no invitations reduces to the neighbors-only auction",
        judge(&nd, t, Duration::from_secs(30), "comparisons"),
    ));

    let fixture_runs = parse_network::<Exact>(&std::fs::read_to_string(fixture()).expect("fixture"))
        .map_err(|e| e.to_string())
        .and_then(|l| {
            [1, 5].iter().try_for_each(|&k| {
                let net = l.network.with_item_count(k).map_err(|e| e.to_string())?;
                let run = Gidm::default().run(&net, &truthful_profile(&net)).map_err(|e| e.to_string())?;
                check_decomposition(&run).map_err(|e| format!("fixture K={k}: {e}"))
            })
        });
    results.push((
        9,
        "payment decomposition on every run",
        Outcome {
            pass: decomposition == 0 && fixture_runs.is_ok(),
            detail: match fixture_runs {
                Ok(()) => {
                    format!("{decomposition} decomposition failures across campaigns; fixture runs K=1, K=5 hold")
                }
                Err(e) => e,
            },
        },
    ));

    let mut all = true;
    for (n, name, o) in &results {
        all &= o.pass;
        println!("criterion {n} {}: {name} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
