//! Verdicts for the built-in corpus, checked against both engines.

use tamc::verify::{check, Options};
use tamc::{build_model, parse_queries, queries_text, Network, Query};

fn queries(net: &Network, name: &str) -> Vec<Query> {
    parse_queries(queries_text(name).unwrap(), &net.system).unwrap()
}

fn verdicts(name: &str) -> Vec<(String, bool, Option<String>)> {
    let net = build_model(name).unwrap();
    queries(&net, name)
        .iter()
        .map(|q| {
            let v = check(&net, q, &Options::default()).unwrap();
            (v.query, v.satisfied, v.min_time)
        })
        .collect()
}

#[test]
fn existing_unshifted_deadlocks_with_both_buffers_full() {
    let vs = verdicts("existing");
    assert_eq!(vs[0].0, "A[] not deadlock");
    assert!(!vs[0].1);
    // Packets do get delivered on other schedules.
    assert!(vs[1].1);
    assert!(vs[2].1);

    // The counterexample ends with a packet stuck in each buffer.
    let net = build_model("existing").unwrap();
    let q = &queries(&net, "existing")[0];
    let v = check(&net, q, &Options::default()).unwrap();
    let trace = v.trace.unwrap();
    let last = trace.last().unwrap();
    assert_eq!(last.label, "deadlock");
    assert!(last.locations.contains(&"M1.G1_receive".to_string()));
    assert!(last.locations.contains(&"M2.G2_receive".to_string()));
}

#[test]
fn existing_shifted_is_deadlock_free() {
    let vs = verdicts("existing_shifted");
    assert_eq!(vs[0].0, "A[] not deadlock");
    assert!(vs[0].1);
    assert!(vs[1].1);
    assert!(vs[2].1);
}

#[test]
fn existing_shifted_witnesses_show_the_stagger() {
    let net = build_model("existing_shifted").unwrap();
    let qs = queries(&net, "existing_shifted");

    // Forward delivery needs G1's first emission at 15.
    let v = check(&net, &qs[1], &Options::default()).unwrap();
    assert_eq!(v.query, "E<> E2.receive");
    let trace = v.trace.unwrap();
    let a = trace.iter().find(|s| s.label.starts_with("a:")).unwrap();
    let before: Vec<&str> = trace
        .iter()
        .take_while(|s| !s.label.starts_with("a:"))
        .map(|s| s.delay.as_str())
        .collect();
    let total: f64 = before
        .iter()
        .chain([a.delay.as_str()].iter())
        .map(|d| fraction_value(d))
        .sum();
    assert_eq!(total, 15.0);

    // Reverse delivery needs G2's first emission at 10.
    let v = check(&net, &qs[2], &Options::default()).unwrap();
    assert_eq!(v.query, "E<> E1.receive");
    let trace = v.trace.unwrap();
    let mut total = 0.0;
    for step in &trace {
        total += fraction_value(&step.delay);
        if step.label.starts_with("b:") {
            break;
        }
    }
    assert_eq!(total, 10.0);
}

fn fraction_value(s: &str) -> f64 {
    match s.split_once('/') {
        Some((n, d)) => n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

#[test]
fn proposed_notime_deadlocks() {
    let vs = verdicts("proposed_notime");
    assert_eq!(vs[0].0, "A[] not deadlock");
    assert!(!vs[0].1);
    assert!(vs[1].1);
    assert!(vs[2].1);
}

#[test]
fn proposed_det_deadlocks_at_ten() {
    let vs = verdicts("proposed_det");
    assert_eq!(vs[0].0, "A[] not deadlock");
    assert!(!vs[0].1);
    assert_eq!(vs[0].2.as_deref(), Some("10"));
    assert!(vs[1].1);
    assert!(vs[2].1);
}

#[test]
fn proposed_nondet_satisfies_all_three_queries() {
    let vs = verdicts("proposed_nondet");
    assert_eq!(vs[0].0, "E<> M1.G2_receive");
    assert!(vs[0].1);
    assert_eq!(vs[1].0, "A[] not deadlock");
    assert!(vs[1].1);
    assert_eq!(vs[2].0, "G1.send --> E1.receive");
    assert!(vs[2].1);
}
