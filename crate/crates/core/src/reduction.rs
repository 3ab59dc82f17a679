//! The commutative reduction: tau and sigma determinants, the bridge back
//! to the family quantities, and the Hirota bilinear form of the lattice.
//!
//! Everything here is scalar (`p = 1`). Determinants are computed by this
//! module's own exact elimination over the coefficient ring, with a
//! division-free expansion as fallback when no invertible pivot exists;
//! nothing is borrowed from the block-matrix solver, so agreement with the
//! family quantities is a genuine cross-check between two codebases.

use crate::blockmat::Mat;
use crate::cbop::PolyFamily;
use crate::measure::MomentTable;
use crate::report::{CheckItem, ResidualReport};
use crate::ring::{Jet2, Scalar};

/// Determinant by elimination with invertible pivots (row swaps tracked by
/// sign). When a column offers no invertible pivot the remaining minor is
/// finished by [`det_free`].
fn det<S: Scalar>(mut g: Vec<Vec<S>>) -> S {
    let n = g.len();
    let mut acc = S::one();
    let mut negate = false;
    for col in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for (row, grow) in g.iter().enumerate().take(n).skip(col) {
            if grow[col].invertible() {
                let w = grow[col].pivot_weight();
                if best.map_or(true, |(_, bw)| w > bw) {
                    best = Some((row, w));
                }
            }
        }
        let Some((prow, _)) = best else {
            // All candidate pivots are non-invertible (nilpotent jets and
            // the like); expand the untouched minor without division.
            let minor: Vec<Vec<S>> = g[col..n]
                .iter()
                .map(|row| row[col..n].to_vec())
                .collect();
            let rest = det_free(&minor);
            let signed = if negate { acc.neg() } else { acc };
            return signed.mul(&rest);
        };
        if prow != col {
            g.swap(prow, col);
            negate = !negate;
        }
        let pivot = g[col][col].clone();
        let pivot_inv = pivot.invert().expect("pivot chosen invertible");
        acc = acc.mul(&pivot);
        for row in col + 1..n {
            let factor = g[row][col].mul(&pivot_inv);
            for j in col..n {
                let delta = factor.mul(&g[col][j]);
                g[row][j] = g[row][j].sub(&delta);
            }
        }
    }
    if negate {
        acc.neg()
    } else {
        acc
    }
}

/// Division-free determinant: dynamic programming over column subsets,
/// row index implied by the subset size. Valid over any commutative ring.
fn det_free<S: Scalar>(g: &[Vec<S>]) -> S {
    let n = g.len();
    if n == 0 {
        return S::one();
    }
    let mut dp = vec![S::zero(); 1usize << n];
    dp[0] = S::one();
    for mask in 1usize..(1 << n) {
        let row = (mask.count_ones() - 1) as usize;
        let mut acc = S::zero();
        // Laplace along the last row: sign (-1)^(row + column position).
        let mut sign_neg = row % 2 == 1;
        for col in 0..n {
            if mask & (1 << col) == 0 {
                continue;
            }
            let term = g[row][col].mul(&dp[mask & !(1 << col)]);
            acc = if sign_neg { acc.sub(&term) } else { acc.add(&term) };
            sign_neg = !sign_neg;
        }
        dp[mask] = acc;
    }
    dp[(1 << n) - 1].clone()
}

/// The tau and sigma ladders. `tau[n]` is the order-`n` leading principal
/// minor of the moment matrix (`tau[0] = 1` by the empty-determinant
/// convention); `sigma[n]` borders the order-`n` minor with the single
/// moments, one extra row and column.
#[derive(Debug, Clone)]
pub struct TauData<S: Scalar> {
    pub tau: Vec<S>,
    pub sigma: Vec<S>,
}

/// Compute the ladders from a scalar moment table. `tau` runs through
/// `n_max + 1` and `sigma` through `n_max`, the longest prefixes an
/// order-`n_max + 1` table supports.
pub fn tau_sigma<S: Scalar>(table: &MomentTable<S>, n_max: usize) -> TauData<S> {
    assert_eq!(table.p(), 1, "reduction is the scalar case");
    let m = |i: usize, j: usize| table.pair(i, j).at(0, 0).clone();
    let phi = |i: usize| table.single(i).at(0, 0).clone();

    let mut tau = Vec::with_capacity(n_max + 2);
    for n in 0..=n_max + 1 {
        let grid: Vec<Vec<S>> = (0..n).map(|i| (0..n).map(|j| m(i, j)).collect()).collect();
        tau.push(det(grid));
    }
    let mut sigma = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let grid: Vec<Vec<S>> = (0..=n)
            .map(|i| {
                let mut row: Vec<S> = (0..n).map(|j| m(i, j)).collect();
                row.push(phi(i));
                row
            })
            .collect();
        sigma.push(det(grid));
    }
    TauData { tau, sigma }
}

fn scalar_item<S: Scalar>(label: String, n: usize, lhs: &S, rhs: &S, tol: f64) -> CheckItem {
    let l = Mat::from_fn(1, 1, |_, _| lhs.clone());
    let r = Mat::from_fn(1, 1, |_, _| rhs.clone());
    crate::report::compare_mats(label, Some(n), &l, &r, tol)
}

/// Hirota bilinear form of the lattice:
/// `D_t tau_{n+1} . tau_n = sigma_n^2` and
/// `D_t^2 tau_{n+1} . tau_{n+1} = 4 sigma_{n+1} sigma_n`,
/// with `D_t f.g = f'g - fg'` and `D_t^2 f.f = 2(f''f - (f')^2)`.
///
/// The first equation is checked at order zero and order one in time (the
/// jets carry enough data for its derivative), the second at order zero.
pub fn check_hirota<S: Scalar>(data: &TauData<Jet2<S>>, tol: f64) -> ResidualReport {
    let mut report = ResidualReport::new("hirota bilinear");
    let two = S::from_int(2);
    let four = S::from_int(4);
    for n in 0..data.sigma.len().min(data.tau.len().saturating_sub(1)) {
        let tn = &data.tau[n];
        let tn1 = &data.tau[n + 1];
        let sn = &data.sigma[n];
        let lhs = tn1.c1.mul(&tn.c0).sub(&tn1.c0.mul(&tn.c1));
        let rhs = sn.c0.mul(&sn.c0);
        report.push(scalar_item(
            "D_t tau_next . tau = sigma^2".into(),
            n,
            &lhs,
            &rhs,
            tol,
        ));
        // Time derivative of the same equation, using the second jet
        // coefficients: tau'' tau - tau tau'' = 2 sigma sigma'.
        let dlhs = two
            .mul(&tn1.c2)
            .mul(&tn.c0)
            .sub(&tn1.c0.mul(&two.mul(&tn.c2)));
        let drhs = two.mul(&sn.c0).mul(&sn.c1);
        report.push(scalar_item(
            "d/dt of D_t equation".into(),
            n,
            &dlhs,
            &drhs,
            tol,
        ));
        if n + 1 < data.sigma.len() {
            let sn1 = &data.sigma[n + 1];
            let lhs2 = two.mul(
                &two.mul(&tn1.c2)
                    .mul(&tn1.c0)
                    .sub(&tn1.c1.mul(&tn1.c1)),
            );
            let rhs2 = four.mul(&sn1.c0).mul(&sn.c0);
            report.push(scalar_item(
                "D_t^2 tau_next . tau_next = 4 sigma_next sigma".into(),
                n,
                &lhs2,
                &rhs2,
                tol,
            ));
        }
    }
    report
}

/// The variable bridge from the ladders back to the family quantities:
/// `H_n = tau_{n+1} / tau_n`, `V_n = sigma_n / tau_n`,
/// `a_n = -tau_n sigma_{n+1} / (sigma_n tau_{n+1})`, and
/// `xi_{n+1,n} = -(1/2) tau_{n+1}' / tau_{n+1}`.
///
/// The first three are full jet identities; the last is compared through
/// first order only, since the quotient's second coefficient would need a
/// third tau coefficient the jets do not carry.
pub fn bridge_check<S: Scalar>(
    fam: &PolyFamily<Jet2<S>>,
    data: &TauData<Jet2<S>>,
    tol: f64,
) -> ResidualReport {
    assert_eq!(fam.p(), 1, "reduction is the scalar case");
    let mut report = ResidualReport::new("tau-sigma bridge");
    let half = Jet2::constant(S::from_int(2)).invert().expect("2 invertible");

    let rows = fam
        .n_max()
        .min(data.tau.len().saturating_sub(2))
        .min(data.sigma.len().saturating_sub(1));
    for n in 0..=rows {
        let Ok(tau_inv) = data.tau[n].invert() else {
            break;
        };
        let h = data.tau[n + 1].mul(&tau_inv);
        report.push(scalar_item(
            "H = tau_next / tau".into(),
            n,
            fam.h(n).at(0, 0),
            &h,
            tol,
        ));
        let v = data.sigma[n].mul(&tau_inv);
        report.push(scalar_item(
            "V = sigma / tau".into(),
            n,
            fam.v(n).at(0, 0),
            &v,
            tol,
        ));
        if n + 1 <= data.sigma.len() - 1 {
            if let (Ok(sig_inv), Ok(tau1_inv)) =
                (data.sigma[n].invert(), data.tau[n + 1].invert())
            {
                let a = data.tau[n]
                    .mul(&data.sigma[n + 1])
                    .mul(&sig_inv)
                    .mul(&tau1_inv)
                    .neg();
                if n + 1 <= fam.n_max() {
                    if let Ok(vn_inv) = fam.v(n).at(0, 0).invert() {
                        let a_fam = fam.v(n + 1).at(0, 0).mul(&vn_inv).neg();
                        report.push(scalar_item(
                            "a = -tau sigma_next / (sigma tau_next)".into(),
                            n,
                            &a_fam,
                            &a,
                            tol,
                        ));
                    }
                }
            }
        }
        if n + 1 <= fam.n_max() {
            if let Ok(tau1_inv) = data.tau[n + 1].invert() {
                // Shifted jet of tau': only two coefficients are known.
                let tau_dot = Jet2 {
                    c0: data.tau[n + 1].c1.clone(),
                    c1: S::from_int(2).mul(&data.tau[n + 1].c2),
                    c2: S::zero(),
                };
                let q = tau_dot.mul(&tau1_inv).mul(&half).neg();
                let xi = fam.xi(n + 1, n).at(0, 0);
                let lhs = Mat::from_fn(1, 2, |_, c| if c == 0 { xi.c0.clone() } else { xi.c1.clone() });
                let rhs = Mat::from_fn(1, 2, |_, c| if c == 0 { q.c0.clone() } else { q.c1.clone() });
                report.push(crate::report::compare_mats(
                    "xi = -(1/2) tau_next' / tau_next",
                    Some(n),
                    &lhs,
                    &rhs,
                    tol,
                ));
            }
        }
    }
    report
}

/// Both determinant routes on the same grid, as an internal consistency
/// item (elimination with pivots vs division-free expansion).
pub fn check_det_routes<S: Scalar>(grid: &[Vec<S>], tol: f64) -> CheckItem {
    let by_elim = det(grid.to_vec());
    let by_expansion = det_free(grid);
    let mut item = scalar_item("det elimination vs expansion".into(), grid.len(), &by_elim, &by_expansion, tol);
    item.n = None;
    item
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbop::build_family;
    use crate::measure::{moments, DiscreteMeasure, Flow};
    use crate::ring::Rational;
    use crate::sample;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn jet(c0: Rational, c1: Rational, c2: Rational) -> Jet2<Rational> {
        Jet2 { c0, c1, c2 }
    }

    fn two_node_table() -> MomentTable<Jet2<Rational>> {
        let nodes = vec![
            (rat(1, 1), Mat::from_fn(1, 1, |_, _| rat(1, 1))),
            (rat(2, 1), Mat::from_fn(1, 1, |_, _| rat(1, 1))),
        ];
        let mu = DiscreteMeasure::new(1, nodes, Flow::T1).unwrap();
        moments::<Rational, Jet2<Rational>>(&mu, 2)
    }

    #[test]
    fn det_small_cases() {
        assert_eq!(det::<Rational>(vec![]), rat(1, 1));
        assert_eq!(det(vec![vec![rat(7, 2)]]), rat(7, 2));
        let g = vec![vec![rat(1, 1), rat(2, 1)], vec![rat(3, 1), rat(4, 1)]];
        assert_eq!(det(g), rat(-2, 1));
    }

    #[test]
    fn det_routes_agree_random() {
        let mut rng = sample::rng(11);
        for _ in 0..40 {
            for n in 1..=4 {
                let grid: Vec<Vec<Jet2<Rational>>> = (0..n)
                    .map(|_| (0..n).map(|_| sample::jet(&mut rng)).collect())
                    .collect();
                let item = check_det_routes(&grid, 0.0);
                assert!(item.passed, "{item:?}");
            }
        }
    }

    #[test]
    fn det_nilpotent_pivot_falls_back() {
        let eps = jet(rat(0, 1), rat(1, 1), rat(0, 1));
        let one = Jet2::constant(rat(1, 1));
        // Both column-0 entries are nilpotent, elimination cannot start.
        let g = vec![
            vec![eps.clone(), one.clone()],
            vec![eps.mul(&Jet2::constant(rat(2, 1))), one.clone()],
        ];
        let d = det(g.clone());
        assert_eq!(d, eps.neg());
        assert_eq!(d, det_free(&g));
    }

    #[test]
    fn two_node_ladders() {
        let table = two_node_table();
        let data = tau_sigma(&table, 1);
        assert_eq!(data.tau[0], Jet2::constant(rat(1, 1)));
        assert_eq!(data.tau[1], jet(rat(17, 12), rat(4, 1), rat(6, 1)));
        assert_eq!(data.tau[2].c0, rat(1, 72));
        assert_eq!(data.sigma[0].c0, rat(2, 1));
        assert_eq!(data.sigma[1].c0, rat(1, 4));
    }

    #[test]
    fn two_node_hirota() {
        let table = two_node_table();
        let data = tau_sigma(&table, 1);
        // n = 0 by hand: D_t tau_1 . tau_0 = 4 = sigma_0^2 and
        // 2(2 c2 c0 - c1^2) = 2(17 - 16) = 2 = 4 sigma_1 sigma_0.
        assert_eq!(data.tau[1].c1, rat(4, 1));
        let rep = check_hirota(&data, 0.0);
        assert!(rep.all_passed(), "{rep}");
    }

    #[test]
    fn two_node_bridge() {
        let table = two_node_table();
        let fam = build_family(&table, 1).unwrap();
        let data = tau_sigma(&table, 1);
        let rep = bridge_check(&fam, &data, 0.0);
        assert!(rep.all_passed(), "{rep}");
        // Spot values: H_1 = tau_2 / tau_1 = 1/102, a_0 = -3/34,
        // xi_{1,0} = -(1/2) * 4 / (17/12) = -24/17.
        assert_eq!(fam.h(1).at(0, 0).c0, rat(1, 102));
        assert_eq!(
            data.tau[2].c0.mul(&data.tau[1].c0.invert().unwrap()),
            rat(1, 102)
        );
        assert_eq!(fam.xi(1, 0).at(0, 0).c0, rat(-24, 17));
    }

    #[test]
    fn random_measures_bridge_and_hirota() {
        let mut done = 0;
        for seed in 0..400 {
            let mut rng = sample::rng(seed);
            let mu = sample::measure(&mut rng, 1, 5, Flow::T1);
            let table = moments::<Rational, Jet2<Rational>>(&mu, 5);
            let Ok(fam) = build_family(&table, 4) else {
                continue;
            };
            if !fam.is_complete() {
                continue;
            }
            let data = tau_sigma(&table, 4);
            let hirota = check_hirota(&data, 0.0);
            assert!(hirota.all_passed(), "seed {seed}:\n{hirota}");
            let bridge = bridge_check(&fam, &data, 0.0);
            assert!(bridge.all_passed(), "seed {seed}:\n{bridge}");
            done += 1;
            if done >= 8 {
                return;
            }
        }
        panic!("not enough usable draws");
    }

    #[test]
    fn scaling_leaves_residuals_zero() {
        let scale = rat(3, 1);
        let nodes = vec![
            (rat(1, 1), Mat::from_fn(1, 1, |_, _| scale.clone())),
            (rat(2, 1), Mat::from_fn(1, 1, |_, _| scale.clone())),
        ];
        let mu = DiscreteMeasure::new(1, nodes, Flow::T1).unwrap();
        let table = moments::<Rational, Jet2<Rational>>(&mu, 2);
        let data = tau_sigma(&table, 1);
        let rep = check_hirota(&data, 0.0);
        assert!(rep.all_passed(), "{rep}");
    }
}
