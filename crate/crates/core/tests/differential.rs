//! Zone engine versus region oracle on the whole corpus.
//!
//! The region construction is exhaustive and does not extrapolate or
//! subsume, so agreement here pins down the zone engine's abstractions:
//! the reachable location-vector sets must be identical, and every
//! reachability query must get the same verdict from both sides.

use tamc::region::{self, RegionLimits};
use tamc::verify::{self, Options};
use tamc::{build_model, parse_queries, queries_text, Query, MODEL_NAMES};

fn reachability_queries(name: &str) -> Vec<Query> {
    let net = build_model(name).unwrap();
    parse_queries(queries_text(name).unwrap(), &net.system)
        .unwrap()
        .into_iter()
        .filter(|q| matches!(q, Query::ExistsEventually(_) | Query::AlwaysGlobally(_)))
        .collect()
}

#[test]
fn zone_and_region_reach_the_same_location_vectors() {
    for &name in &MODEL_NAMES {
        let net = build_model(name).unwrap();
        let by_zone = verify::reachable_locvecs(&net, &Options::default()).unwrap();
        let by_region = region::reachable_locvecs(&net, &RegionLimits::default()).unwrap();
        assert_eq!(by_zone, by_region, "locvec sets differ on {}", name);
    }
}

#[test]
fn zone_and_region_verdicts_agree_on_every_corpus_query() {
    for &name in &MODEL_NAMES {
        let net = build_model(name).unwrap();
        for query in reachability_queries(name) {
            let zone = verify::check(&net, &query, &Options::default()).unwrap();
            let oracle = region::check(&net, &query, &RegionLimits::default()).unwrap();
            assert_eq!(
                zone.satisfied, oracle,
                "verdict mismatch on {} for {}",
                name, zone.query
            );
        }
    }
}

// Reachability of each individual location is a much finer probe than the
// corpus queries: it exercises E<> with every possible location atom and
// checks both engines against the locvec sweep.
#[test]
fn per_location_reachability_matches_on_both_sides() {
    use tamc::StateFormula;
    for &name in &MODEL_NAMES {
        let net = build_model(name).unwrap();
        let reachable = verify::reachable_locvecs(&net, &Options::default()).unwrap();
        for (ti, template) in net.system.templates.iter().enumerate() {
            for (li, loc) in template.locations.iter().enumerate() {
                let q = Query::ExistsEventually(StateFormula::Location {
                    instance: ti,
                    loc: li,
                });
                let zone = verify::check(&net, &q, &Options::default()).unwrap();
                let oracle = region::check(&net, &q, &RegionLimits::default()).unwrap();
                let swept = reachable.iter().any(|v| v[ti] == li);
                assert_eq!(
                    zone.satisfied, oracle,
                    "{}: engines disagree on reaching {}.{}",
                    name, template.name, loc.name
                );
                assert_eq!(
                    zone.satisfied, swept,
                    "{}: verdict and locvec sweep disagree on {}.{}",
                    name, template.name, loc.name
                );
            }
        }
    }
}
