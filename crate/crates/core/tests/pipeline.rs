//! End-to-end walk on the worked two-node measure: JSON in, moments,
//! family, recurrence, jets, lattice equations, reduction, t3 — the whole
//! chain a CLI run exercises, asserted at every joint.

use ctoda_core::blockmat::{jet_deriv, jet_value};
use ctoda_core::cbop::{
    build_family, check_family_invariants, check_node_routes, check_orthogonality,
    check_quasidet_routes,
};
use ctoda_core::lattice::{
    check_coefficient_routes, check_evolution, check_nc_ctoda, check_recurrence, recurrence,
    t3_wave_evolution,
};
use ctoda_core::measure::{moment_condition_check, moments, parse_measure_json, Flow};
use ctoda_core::reduction::{bridge_check, check_hirota, tau_sigma};
use ctoda_core::ring::{Jet2, Rational};

const TWO_NODE: &str = r#"{
  "p": 1,
  "flow": "t1",
  "nodes": [
    { "x": "1", "W": [["1"]] },
    { "x": "2", "W": [["1"]] }
  ]
}"#;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

#[test]
fn worked_measure_full_chain() {
    let mu = parse_measure_json(TWO_NODE).unwrap();
    assert_eq!(mu.p(), 1);
    assert_eq!(mu.flow(), Flow::T1);
    mu.validate_for_lattice().unwrap();

    // Moment condition: rank 2 keeps the 1x1 and 2x2 minors invertible,
    // the 3x3 one is the first to fail.
    let table = moments::<Rational, Rational>(&mu, 3);
    let cond = moment_condition_check(&table, 3);
    assert_eq!(cond.max_valid_n, Some(1));
    assert_eq!(cond.first_failure, Some(2));

    // Exact family and its route checks.
    let fam = build_family(&table, 1).unwrap();
    assert!(fam.is_complete());
    assert!(check_orthogonality(&mu, &fam, 0.0).all_passed());
    assert!(check_quasidet_routes(&table, &fam, 0.0).all_passed());
    assert!(check_node_routes(&mu, &fam, 0.0).all_passed());
    assert!(check_family_invariants(&table, &fam, 0.0).all_passed());

    // Jets carry the t1 flow.
    let jtable = moments::<Rational, Jet2<Rational>>(&mu, 2);
    let jfam = build_family(&jtable, 1).unwrap();
    let coeffs = recurrence(&jfam);
    assert_eq!(jet_value(&coeffs.a[0]).at(0, 0), &rat(-3, 34));
    assert!(check_recurrence(&jfam, &coeffs, 0.0).all_passed());
    assert!(check_coefficient_routes(&coeffs, 0.0).all_passed());
    assert!(check_evolution(&jfam, &coeffs, 0.0).unwrap().all_passed());
    assert!(check_nc_ctoda(&jfam, &coeffs, 0.0).unwrap().all_passed());
    assert_eq!(jet_deriv(jfam.h(0)).at(0, 0), &rat(4, 1));

    // Commutative reduction on the same table.
    let data = tau_sigma(&jtable, 1);
    assert_eq!(data.tau[1].c0, rat(17, 12));
    assert_eq!(data.tau[2].c0, rat(1, 72));
    assert!(check_hirota(&data, 0.0).all_passed());
    assert!(bridge_check(&jfam, &data, 0.0).all_passed());

    // t3 flow on the same nodes: the degree-zero wave expansion.
    let mu3 = parse_measure_json(&TWO_NODE.replace("\"t1\"", "\"t3\"")).unwrap();
    let jtable3 = moments::<Rational, Jet2<Rational>>(&mu3, 2);
    let jfam3 = build_family(&jtable3, 1).unwrap();
    let (gamma, rep) = t3_wave_evolution(&mu3, &jfam3, 0, 0.0).unwrap();
    assert!(rep.all_passed(), "{rep}");
    assert_eq!(gamma.len(), 1);
}

#[test]
fn malformed_measures_rejected() {
    assert!(parse_measure_json("{").is_err());
    // Nonpositive node.
    let bad = TWO_NODE.replace("\"x\": \"1\"", "\"x\": \"0\"");
    assert!(parse_measure_json(&bad).is_err());
    // Duplicate node.
    let dup = TWO_NODE.replace("\"x\": \"2\"", "\"x\": \"1\"");
    assert!(parse_measure_json(&dup).is_err());
    // Ragged weight matrix.
    let ragged = TWO_NODE.replace("[[\"1\"]]", "[[\"1\", \"2\"]]");
    assert!(parse_measure_json(&ragged).is_err());
}
