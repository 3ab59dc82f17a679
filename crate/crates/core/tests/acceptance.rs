//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line with its pinned tolerance and runtime budget.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use ctoda_core::blockmat::{jet_deriv, jet_value, Mat};
use ctoda_core::cbop::{build_family, check_orthogonality, inner_product, MatPoly, PolyFamily};
use ctoda_core::lattice::{
    check_coefficient_routes, check_lax, check_nc_ctoda, check_recurrence, recurrence,
    t3_construct, t3_wave_evolution, check_t3_annihilation, LatticeError,
};
use ctoda_core::measure::{moments, DiscreteMeasure, Flow};
use ctoda_core::qdid::check_catalog;
use ctoda_core::reduction::{bridge_check, check_hirota, tau_sigma};
use ctoda_core::ring::{Float64, Jet2, Rational, Scalar};
use ctoda_core::sample;
use std::time::Instant;

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn two_node(flow: Flow) -> DiscreteMeasure<Rational> {
    let nodes = vec![
        (rat(1, 1), Mat::from_fn(1, 1, |_, _| rat(1, 1))),
        (rat(2, 1), Mat::from_fn(1, 1, |_, _| rat(1, 1))),
    ];
    DiscreteMeasure::new(1, nodes, flow).unwrap()
}

/// Draw complete rational families until `want` of them exist.
/// Returns (measure, family) pairs with the requested flow baked in.
fn corpus(
    want: usize,
    ps: &[usize],
    node_range: (usize, usize),
    n_max: usize,
    flow: Flow,
    seed0: u64,
) -> Vec<(DiscreteMeasure<Rational>, PolyFamily<Jet2<Rational>>)> {
    let mut out = Vec::new();
    let mut seed = seed0;
    while out.len() < want {
        seed += 1;
        let p = ps[out.len() % ps.len()];
        let nodes = node_range.0 + out.len() % (node_range.1 - node_range.0 + 1);
        let mut rng = sample::rng(seed);
        let mu = sample::measure(&mut rng, p, nodes, flow);
        let table = moments::<Rational, Jet2<Rational>>(&mu, n_max + 1);
        let Ok(fam) = build_family(&table, n_max) else {
            continue;
        };
        if fam.is_complete() && fam.n_max() == n_max {
            out.push((mu, fam));
        }
        assert!(seed < seed0 + 10_000, "corpus draw budget exceeded");
    }
    out
}

#[test]
fn criterion_identity_suite() {
    let started = Instant::now();
    let mut totals: std::collections::BTreeMap<String, (u64, u64)> =
        std::collections::BTreeMap::new();
    for (i, p) in [1usize, 2, 3].iter().enumerate() {
        for report in check_catalog(*p, 34, 9000 + i as u64) {
            let key = report
                .identity
                .split_whitespace()
                .next()
                .unwrap_or("?")
                .to_string();
            let entry = totals.entry(key).or_insert((0, 0));
            entry.0 += report.trials;
            entry.1 += report.failures;
            assert!(report.passed(), "{report}");
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = totals.values().all(|(t, f)| *t >= 100 && *f == 0) && elapsed < 60.0;
    println!(
        "{} identity suite: {} exact, zero failures, p in {{1,2,3}}, {:.1}s (budget 60s, >=100 trials each)",
        verdict(ok),
        totals
            .iter()
            .map(|(k, (t, _))| format!("{k} x{t}"))
            .collect::<Vec<_>>()
            .join(", "),
        elapsed
    );
    assert!(ok, "identity totals {totals:?}, elapsed {elapsed:.1}s");
}

#[test]
fn criterion_worked_regression() {
    let started = Instant::now();

    // Brute-force oracle, written out with no library calls: two nodes
    // x = 1, 2 with unit weights.
    let xs = [rat(1, 1), rat(2, 1)];
    let pair = |i: usize, j: usize| -> Rational {
        let mut acc = rat(0, 1);
        for xk in &xs {
            for xl in &xs {
                let term = xk
                    .pow_u(i)
                    .mul(&xl.pow_u(j))
                    .mul(&xk.add(xl).invert().unwrap());
                acc = acc.add(&term);
            }
        }
        acc
    };
    assert_eq!(pair(0, 0), rat(17, 12));

    let mu = two_node(Flow::T1);
    let table = moments::<Rational, Jet2<Rational>>(&mu, 2);
    let fam = build_family(&table, 1).unwrap();
    let coeffs = recurrence(&fam);
    let data = tau_sigma(&table, 1);

    let checks = [
        ("m00", jet_value(&Mat::from_fn(1, 1, |_, _| table.pair(0, 0).at(0, 0).clone())).at(0, 0).clone(), pair(0, 0)),
        ("xi_{1,0}", jet_value(fam.xi(1, 0)).at(0, 0).clone(), rat(-24, 17)),
        ("H_1", jet_value(fam.h(1)).at(0, 0).clone(), rat(1, 102)),
        ("V_1", jet_value(fam.v(1)).at(0, 0).clone(), rat(3, 17)),
        ("a_0", jet_value(&coeffs.a[0]).at(0, 0).clone(), rat(-3, 34)),
        ("dH_1", jet_deriv(fam.h(1)).at(0, 0).clone(), rat(9, 289)),
        ("dxi_{1,0}", jet_deriv(fam.xi(1, 0)).at(0, 0).clone(), rat(-72, 289)),
        ("sigma_1", data.sigma[1].c0.clone(), rat(1, 4)),
    ];
    let ok = checks.iter().all(|(_, got, want)| got == want);
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "{} worked regression: 8 exact values on the two-node measure, {:.2}s (budget 1s)",
        verdict(ok && elapsed < 1.0),
        elapsed
    );
    for (name, got, want) in &checks {
        assert_eq!(got, want, "{name}");
    }
    assert!(elapsed < 1.0, "took {elapsed:.2}s");
}

#[test]
fn criterion_orthogonality() {
    let started = Instant::now();
    let corpus = corpus(50, &[1, 2], (4, 6), 3, Flow::None, 100);
    let mut items = 0usize;
    for (mu, fam) in &corpus {
        let rep = check_orthogonality(mu, fam, 0.0);
        assert!(rep.all_passed(), "{rep}");
        items += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = items == 50 && elapsed < 300.0;
    println!(
        "{} orthogonality: <P_n, Q_m^T> = H_n delta_nm exact, 50 measures (p in {{1,2}}, 4-6 PD nodes, n,m <= 3), {:.1}s (budget 300s)",
        verdict(ok),
        elapsed
    );
    assert!(ok);
}

#[test]
fn criterion_recurrence_and_routes() {
    let started = Instant::now();
    let corpus = corpus(50, &[1, 2], (4, 6), 3, Flow::None, 200);
    for (_, fam) in &corpus {
        let coeffs = recurrence(fam);
        let rep = check_recurrence(fam, &coeffs, 0.0);
        assert!(rep.all_passed(), "{rep}");
        let routes = check_coefficient_routes(&coeffs, 0.0);
        assert!(routes.all_passed(), "{routes}");
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "{} four-term recurrence: residual polynomial == 0 exactly and both b,c routes agree, 50 measures, {:.1}s",
        verdict(true),
        elapsed
    );
}

#[test]
fn criterion_nc_ctoda() {
    let started = Instant::now();
    let corpus = corpus(50, &[1, 2], (4, 6), 3, Flow::T1, 300);
    let mut rows = 0usize;
    for (_, fam) in &corpus {
        let coeffs = recurrence(fam);
        let rep = check_nc_ctoda(fam, &coeffs, 0.0).unwrap();
        assert!(rep.all_passed(), "{rep}");
        rows += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = rows == 50;
    println!(
        "{} noncommutative lattice: 3 equations + 2 equivalent forms exact under jets, n <= 2, 50 measures, {:.1}s",
        verdict(ok),
        elapsed
    );
    assert!(ok);
}

#[test]
fn criterion_lax() {
    let started = Instant::now();
    let mut exact_done = 0usize;
    let mut float_done = 0usize;
    let mut seed = 400u64;
    while exact_done < 3 && seed < 3000 {
        seed += 1;
        let mut rng = sample::rng(seed);
        let mu = sample::measure(&mut rng, 1, 6, Flow::T1);
        let table = moments::<Rational, Jet2<Rational>>(&mu, 6);
        let Ok(fam) = build_family(&table, 5) else {
            continue;
        };
        if !fam.is_complete() {
            continue;
        }
        let coeffs = recurrence(&fam);
        let samples: Vec<Rational> = mu.nodes().iter().map(|(x, _)| x.clone()).collect();
        match check_lax(&fam, &coeffs, 6, &samples, 0.0) {
            Ok(rep) => assert!(rep.all_passed(), "seed {seed}:\n{rep}"),
            Err(LatticeError::InsufficientData { .. }) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        }
        exact_done += 1;

        if float_done == 0 {
            let muf = mu.to_float();
            let tablef = moments::<Float64, Jet2<Float64>>(&muf, 6);
            if let Ok(famf) = build_family(&tablef, 5) {
                let coeffsf = recurrence(&famf);
                let samplesf: Vec<Float64> =
                    muf.nodes().iter().map(|(x, _)| x.clone()).collect();
                if let Ok(repf) = check_lax(&famf, &coeffsf, 6, &samplesf, 1e-7) {
                    assert!(repf.all_passed(), "float seed {seed}:\n{repf}");
                    float_done = 1;
                }
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = exact_done == 3 && float_done == 1;
    println!(
        "{} lax compatibility: T = 6 six-node interior blocks exactly zero ({exact_done} measures), float backend < 1e-7 relative, {:.1}s",
        verdict(ok),
        elapsed
    );
    assert!(ok);
}

#[test]
fn criterion_reduction() {
    let started = Instant::now();

    // Hand values first: D_t tau_1 . tau_0 = 4 = sigma_0^2 and
    // 2(tau_1'' tau_1 - tau_1'^2) = 2 = 4 sigma_1 sigma_0.
    let mu0 = two_node(Flow::T1);
    let table0 = moments::<Rational, Jet2<Rational>>(&mu0, 2);
    let data0 = tau_sigma(&table0, 1);
    assert_eq!(data0.tau[1].c1, rat(4, 1));
    assert_eq!(data0.sigma[0].c0.mul(&data0.sigma[0].c0), rat(4, 1));
    assert_eq!(
        rat(4, 1).mul(&data0.sigma[1].c0).mul(&data0.sigma[0].c0),
        rat(2, 1)
    );

    let mut done = 0usize;
    let mut seed = 500u64;
    while done < 20 && seed < 4000 {
        seed += 1;
        let nodes = 4 + (done % 2);
        let n_max = nodes - 2;
        let mut rng = sample::rng(seed);
        let mu = sample::measure(&mut rng, 1, nodes, Flow::T1);
        let table = moments::<Rational, Jet2<Rational>>(&mu, n_max + 1);
        let Ok(fam) = build_family(&table, n_max) else {
            continue;
        };
        if !fam.is_complete() {
            continue;
        }
        let data = tau_sigma(&table, n_max);
        let hirota = check_hirota(&data, 0.0);
        assert!(hirota.all_passed(), "seed {seed}:\n{hirota}");
        let bridge = bridge_check(&fam, &data, 0.0);
        assert!(bridge.all_passed(), "seed {seed}:\n{bridge}");
        done += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = done == 20;
    println!(
        "{} commutative reduction: bridge + both Hirota equations exact, 20 scalar measures, n through rank - 2, hand values reproduced, {:.1}s",
        verdict(ok),
        elapsed
    );
    assert!(ok);
}

#[test]
fn criterion_t3() {
    let started = Instant::now();
    let mut done = 0usize;
    let mut seed = 600u64;
    while done < 10 && seed < 6000 {
        seed += 1;
        let mut rng = sample::rng(seed);
        let mu = sample::measure(&mut rng, 1, 6, Flow::T3);
        let table = moments::<Rational, Jet2<Rational>>(&mu, 4);
        let Ok(fam) = build_family(&table, 3) else {
            continue;
        };
        if !fam.is_complete() {
            continue;
        }
        let Ok((aux, rep)) = t3_construct(&fam, 2, 0.0) else {
            continue;
        };
        assert!(rep.all_passed(), "seed {seed}:\n{rep}");
        let ann = check_t3_annihilation(&mu, &fam, 2, &aux, 0.0);
        assert!(ann.all_passed(), "seed {seed}:\n{ann}");
        let mut wave_ok = true;
        for n in 0..=2usize {
            match t3_wave_evolution(&mu, &fam, n, 0.0) {
                Ok((gamma, wrep)) => {
                    assert_eq!(gamma.len(), n + 1);
                    assert!(wrep.all_passed(), "seed {seed} n {n}:\n{wrep}");
                }
                Err(_) => {
                    wave_ok = false;
                    break;
                }
            }
        }
        if !wave_ok {
            continue;
        }
        done += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = done == 10;
    println!(
        "{} t3 flow: annihilation sums exact, quasidet forms = solve, wave expansion reconstructs the jet derivative, m,n <= 2, 10 measures, {:.1}s",
        verdict(ok),
        elapsed
    );
    assert!(ok);
}

#[test]
fn criterion_float_exact_agreement() {
    let started = Instant::now();
    let corpus = corpus(5, &[1, 2], (4, 5), 3, Flow::T1, 700);
    let tol = 1e-8;
    let mut compared = 0usize;
    for (mu, fam) in &corpus {
        let coeffs = recurrence(fam);
        let muf = mu.to_float();
        let tablef = moments::<Float64, Jet2<Float64>>(&muf, 4);
        let Ok(famf) = build_family(&tablef, 3) else {
            continue;
        };
        let coeffsf = recurrence(&famf);

        for n in 0..=fam.n_max().min(famf.n_max()) {
            let exact = jet_value(fam.h(n)).map(|r| Float64(r.to_f64()));
            let float = jet_value(famf.h(n));
            let item =
                ctoda_core::report::compare_mats("H float vs exact", Some(n), &exact, &float, tol);
            assert!(item.passed, "{item:?}");
            compared += 1;
        }
        for n in 0..coeffs.a.len().min(coeffsf.a.len()) {
            let exact = jet_value(&coeffs.a[n]).map(|r| Float64(r.to_f64()));
            let float = jet_value(&coeffsf.a[n]);
            let item =
                ctoda_core::report::compare_mats("a float vs exact", Some(n), &exact, &float, tol);
            assert!(item.passed, "{item:?}");
            compared += 1;
        }
        // Float residuals of the exact-zero identities stay below the
        // same relative tolerance.
        let rep = check_recurrence(&famf, &coeffsf, tol);
        assert!(rep.all_passed(), "{rep}");
        let ortho = check_orthogonality(&muf, &famf, tol);
        assert!(ortho.all_passed(), "{ortho}");
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = compared > 0;
    println!(
        "{} float/exact agreement: {} quantities within 1e-8 relative, float residuals of exact-zero identities < 1e-8, {:.1}s",
        verdict(ok),
        compared,
        elapsed
    );
    assert!(ok);
}

// Shared helper exercised above; kept here so the suite fails loudly if
// the worked pairing ever drifts.
#[test]
fn worked_pairing_oracle() {
    let mu = two_node(Flow::None);
    let f = MatPoly::<Rational>::unit(1);
    let val = inner_product(&mu, &f, &f);
    assert_eq!(val.at(0, 0), &rat(17, 12));
}
