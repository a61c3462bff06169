//! Regression on the seventeen-buyer example network.

use std::collections::BTreeSet;

use diffusion_auction::allocation::{
    build_allocation_tree, competitor_closure, competitor_closure_with, efficient_allocation, top_k_critical_children,
    ClosureRule,
};
use diffusion_auction::critical::{critical_structure, critical_structure_oracle, precedes};
use diffusion_auction::io::{parse_network, LoadedNetwork};
use diffusion_auction::mechanisms::{run_idm, run_vcg_local, Gidm, TraceEvent};
use diffusion_auction::network::truthful_profile;
use diffusion_auction::verify::check_decomposition;
use diffusion_auction::{BuyerId, Exact, Value};

const FIXTURE: &str = include_str!("../fixtures/figure1.net");

fn load() -> LoadedNetwork<Exact> {
    parse_network(FIXTURE).expect("fixture parses")
}

fn id(net: &LoadedNetwork<Exact>, label: &str) -> BuyerId {
    net.labels.id_of(label).unwrap_or_else(|| panic!("no buyer {label}"))
}

fn ids(net: &LoadedNetwork<Exact>, labels: &str) -> BTreeSet<BuyerId> {
    labels.split(',').filter(|s| !s.is_empty()).map(|l| id(net, l)).collect()
}

fn q(v: i64) -> Exact {
    Exact::from_int(v)
}

#[test]
fn critical_sets() {
    let l = load();
    let p = truthful_profile(&l.network);
    let cs = critical_structure(&l.network, &p);
    assert_eq!(cs, critical_structure_oracle(&l.network, &p));
    assert_eq!(cs.parent_set(id(&l, "Y")).unwrap(), ids(&l, "C,K"));
    assert_eq!(cs.parent_set(id(&l, "M")).unwrap(), ids(&l, "D,I"));
    assert_eq!(cs.children(id(&l, "M")).unwrap(), &ids(&l, "O"));
    assert!(precedes(&cs, id(&l, "D"), id(&l, "I")));
    assert_eq!(cs.children(id(&l, "C")).unwrap(), &ids(&l, "E,F,G,K,L,Y,P,Q"));
    assert_eq!(cs.children(id(&l, "D")).unwrap(), &ids(&l, "H,I,J,M,O"));
}

#[test]
fn idm_on_one_item() {
    let l = load();
    let p = truthful_profile(&l.network);
    let out = run_idm(&l.network, &p).unwrap();
    assert_eq!(out.winners, ids(&l, "K"));
    for (&b, pay) in &out.payments {
        let expect = match l.labels.get(b) {
            Some("K") => q(17),
            Some("C") => q(-1),
            _ => q(0),
        };
        assert_eq!(pay, &expect, "payment of {}", l.labels.name(b));
    }
    assert_eq!(out.revenue, q(16));
    let max_neighbor = l.network.seller_neighbors().iter().map(|&b| *l.network.valuation(b).unwrap()).max();
    assert_eq!(max_neighbor, Some(q(7)));
    assert!(out.revenue > q(14));
    assert!(out.revenue >= run_vcg_local(&l.network, 1).revenue);
}

#[test]
fn five_item_tree() {
    let l = load();
    let net = l.network.with_item_count(5).unwrap();
    let p = truthful_profile(&net);
    let cs = critical_structure(&net, &p);
    assert_eq!(efficient_allocation(&net, &p, 5).winners, ids(&l, "Y,K,G,H,M"));
    let tree = build_allocation_tree(&net, &p, &cs, 5).unwrap();
    let weights: Vec<(String, usize)> = tree.weights().iter().map(|(&b, &w)| (l.labels.name(b), w)).collect();
    let expect = [("C", 3), ("D", 2), ("G", 1), ("H", 1), ("I", 1), ("K", 2), ("M", 1), ("Y", 1)];
    assert_eq!(weights, expect.map(|(n, w)| (n.to_string(), w)));
    let root: BTreeSet<BuyerId> = tree.children(tree.root()).iter().copied().collect();
    assert_eq!(root, ids(&l, "C,D"));
}

#[test]
fn closure_of_c() {
    let l = load();
    let net = l.network.with_item_count(5).unwrap();
    let p = truthful_profile(&net);
    let cs = critical_structure(&net, &p);
    let c = id(&l, "C");
    let top: BTreeSet<BuyerId> = top_k_critical_children(&cs, &p, c, 5).unwrap().into_iter().collect();
    assert_eq!(top, ids(&l, "G,K,L,Y,P"));
    for rule in [ClosureRule::WithTopDescendants, ClosureRule::ParentsOnly] {
        assert_eq!(competitor_closure_with(&cs, &p, c, 5, rule).unwrap(), ids(&l, "F,G,K,L,Y,P,Q"));
    }
    assert_eq!(competitor_closure(&cs, &p, id(&l, "D"), 5).unwrap(), ids(&l, "H,I,J,M,O"));
    assert!(competitor_closure(&cs, &p, id(&l, "H"), 5).unwrap().is_empty());
}

#[test]
fn gidm_on_five_items() {
    let l = load();
    let net = l.network.with_item_count(5).unwrap();
    let run = Gidm::default().run(&net, &truthful_profile(&net)).unwrap();
    let seller = BuyerId::SELLER;
    let gives: BTreeSet<(BuyerId, usize)> = run
        .outcome
        .trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Give { from, to, items } if *from == seller => Some((*to, *items)),
            _ => None,
        })
        .collect();
    assert_eq!(gives, [(id(&l, "C"), 3), (id(&l, "D"), 2)].into());

    let (c, d, h, m) = (id(&l, "C"), id(&l, "D"), id(&l, "H"), id(&l, "M"));
    assert!(run.outcome.winners.contains(&d));
    assert!(run.outcome.winners.contains(&h));
    assert!(!run.outcome.winners.contains(&c));
    assert_eq!(run.pass.get_from.get(&d), Some(&m));
    let sh = &run.pass.snapshots[&h];
    assert_eq!(sh.received, ids(&l, "D"));
    assert_eq!(sh.out, ids(&l, "M"));
    assert!(sh.closure.is_empty());
    let sc = &run.pass.snapshots[&c];
    assert_eq!(sc.closure, ids(&l, "F,G,K,L,Y,P,Q"));
    assert_eq!(sc.without_closure.winners, ids(&l, "H,M,D,A,E"));
    assert!(!sc.wins);
    assert_eq!(run.outcome.winners, ids(&l, "D,H,K,Y,G"));

    let pays: Vec<(String, Exact)> =
        run.outcome.payments.iter().filter(|(_, v)| **v != q(0)).map(|(&b, v)| (l.labels.name(b), *v)).collect();
    let expect = [("C", -4), ("D", 12), ("G", 14), ("H", 15), ("K", 12), ("Y", 13)];
    assert_eq!(pays, expect.map(|(n, v)| (n.to_string(), q(v))));
    assert_eq!(run.outcome.revenue, q(62));
    check_decomposition(&run).unwrap();
}

#[test]
fn gidm_matches_idm_on_one_item() {
    let l = load();
    let p = truthful_profile(&l.network);
    let run = Gidm::default().run(&l.network, &p).unwrap();
    check_decomposition(&run).unwrap();
    assert!(run.outcome.same_result(&run_idm(&l.network, &p).unwrap()));
}
