//! Recurrence coefficients, time evolution, the noncommutative lattice
//! equations, the Lax pair, and the second (t3) flow.
//!
//! Everything here is driven by a [`PolyFamily`](crate::cbop::PolyFamily).
//! For the time-dependent statements the family is built over `Jet2`
//! scalars from a measure carrying a flow, so the first jet coefficient of
//! any derived quantity is its time derivative. Checks come in pairs
//! wherever the theory offers two routes to the same object: the closed
//! recurrence forms against the proof-route forms, the truncated Lax
//! commutator against the coefficient recurrences on sample points, the t3
//! linear systems against their bordered-quasideterminant solutions.

use crate::blockmat::{jet_deriv, jet_value, solve_nc, Mat, MatError};
use crate::cbop::{inner_product, single_integral, single_integral_right, MatPoly, PolyFamily};
use crate::measure::DiscreteMeasure;
use crate::report::{compare_mats, residual_item, ResidualReport};
use crate::ring::{BaseScalar, Jet2, MeasureScalar, Scalar};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatticeError {
    /// `V_n` must be invertible to form `a_n`.
    VnSingular(usize),
    /// `H_n` must be invertible to form `c_n`, `d_n` and the wave systems.
    HnSingular(usize),
    /// The Lax window needs at least five rows to have an interior.
    TruncationTooSmall { t: usize },
    /// The family does not carry enough rows to fill the requested window.
    InsufficientData { t: usize, usable: usize },
    /// The two-by-two block system for `eta_m`, `zeta_m` is singular.
    SystemSingular(usize),
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::VnSingular(n) => write!(f, "V_{n} is singular"),
            LatticeError::HnSingular(n) => write!(f, "H_{n} is singular"),
            LatticeError::TruncationTooSmall { t } => {
                write!(f, "truncation {t} too small, need at least 5")
            }
            LatticeError::InsufficientData { t, usable } => write!(
                f,
                "family supports a {usable}-row operator, window {t} needs {}",
                t.saturating_sub(2)
            ),
            LatticeError::SystemSingular(m) => {
                write!(f, "auxiliary system at m = {m} is singular")
            }
        }
    }
}

impl std::error::Error for LatticeError {}

// ---------------------------------------------------------------------------
// Recurrence coefficients
// ---------------------------------------------------------------------------

/// Coefficients of `x (P_{n+1} + a_n P_n) = P_{n+2} + b_n P_{n+1} + c_n P_n
/// + d_n P_{n-1}`, with `d_0 = 0`.
///
/// Each vector holds the longest prefix the family supports: `a_n` needs
/// `V_{n+1}` and an invertible `V_n`; `b_n` additionally needs row `n + 2`;
/// `c_n` and `d_n` need invertible `H`'s. The alternate vectors hold the
/// same coefficients computed along the proof route (`b_n` through
/// `Z_{n+1}^T H_{n+1}^{-1}`, `c_n` through `<P_n, y P_n^T>`); agreement is
/// a theorem, checked by [`check_coefficient_routes`].
#[derive(Debug, Clone)]
pub struct RecurrenceCoeffs<S: Scalar> {
    p: usize,
    pub a: Vec<Mat<S>>,
    pub b: Vec<Mat<S>>,
    pub c: Vec<Mat<S>>,
    pub d: Vec<Mat<S>>,
    pub b_alt: Vec<Mat<S>>,
    pub c_alt: Vec<Mat<S>>,
    /// First `n` where `V_n` failed to invert, if any.
    pub first_v_singular: Option<usize>,
    /// First `n` where `H_n` failed to invert, if any.
    pub first_h_singular: Option<usize>,
}

impl<S: Scalar> RecurrenceCoeffs<S> {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of complete `(a, b, c, d)` rows.
    pub fn rows(&self) -> usize {
        self.a
            .len()
            .min(self.b.len())
            .min(self.c.len())
            .min(self.d.len())
    }

    /// Fails when even `a_0` could not be formed, naming the obstruction.
    pub fn require_nonempty(&self) -> Result<(), LatticeError> {
        if !self.a.is_empty() {
            return Ok(());
        }
        match self.first_v_singular {
            Some(n) => Err(LatticeError::VnSingular(n)),
            None => Err(LatticeError::InsufficientData { t: 1, usable: 0 }),
        }
    }
}

/// Compute recurrence coefficients from a built family.
///
/// `a_n = -V_{n+1} V_n^{-1}`, `b_n = -xi_{n+2,n+1} + xi_{n+1,n} + a_n`,
/// `c_n = -H_{n+1} H_n^{-1} + a_n H_n (xi_{n+1,n}^T - xi_{n,n-1}^T) H_n^{-1}`,
/// `d_n = -a_n H_n H_{n-1}^{-1}` with `d_0 = 0`. The proof-route forms use
/// `Z` instead: `b_n = Z_{n+1}^T H_{n+1}^{-1} + xi_{n+1,n} + a_n` and
/// `c_n = -(H_{n+1} + a_n (Z_n + H_n xi_{n,n-1}^T)) H_n^{-1}`.
pub fn recurrence<S: Scalar>(fam: &PolyFamily<S>) -> RecurrenceCoeffs<S> {
    let p = fam.p();
    let n_max = fam.n_max();
    let mut out = RecurrenceCoeffs {
        p,
        a: Vec::new(),
        b: Vec::new(),
        c: Vec::new(),
        d: Vec::new(),
        b_alt: Vec::new(),
        c_alt: Vec::new(),
        first_v_singular: None,
        first_h_singular: None,
    };

    let mut v_inv: Vec<Mat<S>> = Vec::new();
    for n in 0..=n_max {
        match fam.v(n).invert() {
            Ok(inv) => v_inv.push(inv),
            Err(_) => {
                out.first_v_singular = Some(n);
                break;
            }
        }
    }
    let mut h_inv: Vec<Mat<S>> = Vec::new();
    for n in 0..=n_max {
        match fam.h(n).invert() {
            Ok(inv) => h_inv.push(inv),
            Err(_) => {
                out.first_h_singular = Some(n);
                break;
            }
        }
    }

    // a_n through the V ladder.
    for n in 0..n_max.min(v_inv.len()) {
        if n + 1 > fam.n_max() {
            break;
        }
        out.a.push(fam.v(n + 1).neg().mul(&v_inv[n]));
    }

    // b_n needs xi_{n+2,n+1}; the alternate route needs H_{n+1}^{-1}.
    for n in 0..out.a.len() {
        if n + 2 > n_max {
            break;
        }
        let xi_naught = fam.xi_entry(n + 1, n as isize);
        out.b.push(
            fam.xi_entry(n + 2, n as isize + 1)
                .neg()
                .add(&xi_naught)
                .add(&out.a[n]),
        );
        if n + 1 >= h_inv.len() {
            break;
        }
        out.b_alt.push(
            fam.z(n + 1)
                .transpose()
                .mul(&h_inv[n + 1])
                .add(&xi_naught)
                .add(&out.a[n]),
        );
    }

    // c_n and d_n need H inverses one step down.
    for n in 0..out.a.len() {
        if n + 1 >= h_inv.len() {
            break;
        }
        let an = &out.a[n];
        let hn = fam.h(n);
        let skew = fam
            .xi_entry(n + 1, n as isize)
            .transpose()
            .sub(&fam.xi_entry(n, n as isize - 1).transpose());
        let cn = fam
            .h(n + 1)
            .neg()
            .mul(&h_inv[n])
            .add(&an.mul(hn).mul(&skew).mul(&h_inv[n]));
        out.c.push(cn);
        let pair_xy = fam.z(n).add(&hn.mul(&fam.xi_entry(n, n as isize - 1).transpose()));
        out.c_alt
            .push(fam.h(n + 1).add(&an.mul(&pair_xy)).neg().mul(&h_inv[n]));
        if n == 0 {
            out.d.push(Mat::zeros(p, p));
        } else {
            out.d.push(an.neg().mul(hn).mul(&h_inv[n - 1]));
        }
    }

    out
}

/// Closed forms against proof-route forms, entrywise.
pub fn check_coefficient_routes<S: Scalar>(
    coeffs: &RecurrenceCoeffs<S>,
    tol: f64,
) -> ResidualReport {
    let mut report = ResidualReport::new("coefficient routes");
    for n in 0..coeffs.b.len().min(coeffs.b_alt.len()) {
        report.push(compare_mats(
            "b closed vs proof route",
            Some(n),
            &coeffs.b[n],
            &coeffs.b_alt[n],
            tol,
        ));
    }
    for n in 0..coeffs.c.len().min(coeffs.c_alt.len()) {
        report.push(compare_mats(
            "c closed vs proof route",
            Some(n),
            &coeffs.c[n],
            &coeffs.c_alt[n],
            tol,
        ));
    }
    report
}

/// `<P_n, y P_n^T>` straight from the measure, against the family identity
/// `Z_n + H_n xi_{n,n-1}^T` that the proof-route `c_n` relies on.
pub fn check_pair_xy<B: BaseScalar, S: MeasureScalar<B>>(
    mu: &DiscreteMeasure<B>,
    fam: &PolyFamily<S>,
    tol: f64,
) -> ResidualReport {
    let mut report = ResidualReport::new("pair <P_n, y P_n^T>");
    for n in 0..=fam.n_max().saturating_sub(1) {
        let direct = inner_product(mu, &fam.poly(n), &fam.q_poly(n).shift(1));
        let formula = fam
            .z(n)
            .add(&fam.h(n).mul(&fam.xi_entry(n, n as isize - 1).transpose()));
        report.push(compare_mats(
            "node sum vs Z_n + H_n xi^T",
            Some(n),
            &direct,
            &formula,
            tol,
        ));
    }
    report
}

/// Coefficient-wise residual of the four-term recurrence, with `P_{-1} = 0`.
pub fn check_recurrence<S: Scalar>(
    fam: &PolyFamily<S>,
    coeffs: &RecurrenceCoeffs<S>,
    tol: f64,
) -> ResidualReport {
    let mut report = ResidualReport::new("four-term recurrence");
    let rows = coeffs.rows().min(fam.n_max().saturating_sub(1));
    for n in 0..rows {
        let lhs = fam
            .poly(n + 1)
            .add(&fam.poly(n).scale_left(&coeffs.a[n]))
            .shift(1);
        let mut rhs = fam
            .poly(n + 2)
            .add(&fam.poly(n + 1).scale_left(&coeffs.b[n]))
            .add(&fam.poly(n).scale_left(&coeffs.c[n]));
        if n >= 1 {
            rhs = rhs.add(&fam.poly(n - 1).scale_left(&coeffs.d[n]));
        }
        let deg = lhs.len().max(rhs.len());
        for k in 0..deg {
            let diff = lhs.coeff(k).sub(&rhs.coeff(k));
            let scale = 1.0_f64
                .max(lhs.coeff(k).max_magnitude())
                .max(rhs.coeff(k).max_magnitude());
            report.push(residual_item(
                format!("x^{k} coefficient"),
                Some(n),
                &diff,
                scale,
                tol,
            ));
        }
    }
    report
}

// ---------------------------------------------------------------------------
// First-flow evolution
// ---------------------------------------------------------------------------

fn poly_value<S: Scalar>(f: &MatPoly<Jet2<S>>) -> MatPoly<S> {
    f.map_coeffs(jet_value)
}

fn poly_deriv<S: Scalar>(f: &MatPoly<Jet2<S>>) -> MatPoly<S> {
    f.map_coeffs(jet_deriv)
}

/// Evolution identities under the first flow, with every time derivative
/// read off a jet coefficient:
///
/// * `d/dt (P_{n+1} + a_n P_n) = d/dt (xi_{n+1,n} + a_n) P_n`
/// * `d/dt H_n = (xi_{n,n-1} - xi_{n+1,n}) H_n + H_n (xi_{n,n-1} - xi_{n+1,n})^T`
/// * `d/dt H_n = V_n V_n^T`
/// * `d/dt xi_{n+1,n} = -V_{n+1} V_n^T H_n^{-1}`
///
/// The family must be built over `Jet2` scalars from a measure whose flow
/// is switched on; symmetric mode is assumed for the transposed forms.
pub fn check_evolution<S: Scalar>(
    fam: &PolyFamily<Jet2<S>>,
    coeffs: &RecurrenceCoeffs<Jet2<S>>,
    tol: f64,
) -> Result<ResidualReport, LatticeError> {
    let mut report = ResidualReport::new("first-flow evolution");
    let n_max = fam.n_max();

    for n in 0..coeffs.a.len() {
        let combo = fam.poly(n + 1).add(&fam.poly(n).scale_left(&coeffs.a[n]));
        let lhs = poly_deriv(&combo);
        let gamma = jet_deriv(&fam.xi_entry(n + 1, n as isize).add(&coeffs.a[n]));
        let rhs = poly_value(&fam.poly(n)).scale_left(&gamma);
        for k in 0..lhs.len().max(rhs.len()) {
            let diff = lhs.coeff(k).sub(&rhs.coeff(k));
            let scale = 1.0_f64
                .max(lhs.coeff(k).max_magnitude())
                .max(rhs.coeff(k).max_magnitude());
            report.push(residual_item(
                format!("d(P_next + a P) = d(xi + a) P, x^{k}"),
                Some(n),
                &diff,
                scale,
                tol,
            ));
        }
    }

    for n in 0..n_max {
        let dh = jet_deriv(fam.h(n));
        let skew = jet_value(
            &fam.xi_entry(n, n as isize - 1)
                .sub(&fam.xi_entry(n + 1, n as isize)),
        );
        let h0 = jet_value(fam.h(n));
        let rhs = skew.mul(&h0).add(&h0.mul(&skew.transpose()));
        report.push(compare_mats("dH via xi skew", Some(n), &dh, &rhs, tol));
    }

    for n in 0..=n_max {
        let dh = jet_deriv(fam.h(n));
        let v0 = jet_value(fam.v(n));
        let rhs = v0.mul(&v0.transpose());
        report.push(compare_mats("dH = V V^T", Some(n), &dh, &rhs, tol));
    }

    for n in 0..n_max {
        let h0_inv = jet_value(fam.h(n))
            .invert()
            .map_err(|_| LatticeError::HnSingular(n))?;
        let dxi = jet_deriv(&fam.xi_entry(n + 1, n as isize));
        let rhs = jet_value(fam.v(n + 1))
            .neg()
            .mul(&jet_value(fam.v(n)).transpose())
            .mul(&h0_inv);
        report.push(compare_mats(
            "dxi = -V_next V^T H^{-1}",
            Some(n),
            &dxi,
            &rhs,
            tol,
        ));
    }

    Ok(report)
}

/// The lattice equations in the unknowns `a_n`, `H_n`, `xi_{n+1,n}`:
///
/// * `a_n dH_n = dxi_{n+1,n} H_n`
/// * `dH_{n+1} = a_n H_n dxi_{n+1,n}^T`
/// * `dH_n = (xi_{n,n-1} - xi_{n+1,n}) H_n + H_n (...)^T`
///
/// plus the two equivalent closed forms `dH_{n+1} = a_n dH_n a_n^T` and
/// `dxi_{n+1,n} = a_n dH_n H_n^{-1}`, plus the derivation step
/// `d(a_n H_n) = d(xi_{n+1,n} + a_n) H_n` that ties the system to the
/// evolution identities.
pub fn check_nc_ctoda<S: Scalar>(
    fam: &PolyFamily<Jet2<S>>,
    coeffs: &RecurrenceCoeffs<Jet2<S>>,
    tol: f64,
) -> Result<ResidualReport, LatticeError> {
    let mut report = ResidualReport::new("noncommutative lattice");
    let rows = coeffs.a.len().min(fam.n_max());
    for n in 0..rows {
        let a0 = jet_value(&coeffs.a[n]);
        let h0 = jet_value(fam.h(n));
        let h0_inv = h0.invert().map_err(|_| LatticeError::HnSingular(n))?;
        let dh = jet_deriv(fam.h(n));
        let dh_next = jet_deriv(fam.h(n + 1));
        let dxi = jet_deriv(&fam.xi_entry(n + 1, n as isize));

        report.push(compare_mats(
            "a dH = dxi H",
            Some(n),
            &a0.mul(&dh),
            &dxi.mul(&h0),
            tol,
        ));
        report.push(compare_mats(
            "dH_next = a H dxi^T",
            Some(n),
            &dh_next,
            &a0.mul(&h0).mul(&dxi.transpose()),
            tol,
        ));
        let skew = jet_value(
            &fam.xi_entry(n, n as isize - 1)
                .sub(&fam.xi_entry(n + 1, n as isize)),
        );
        report.push(compare_mats(
            "dH = skew H + H skew^T",
            Some(n),
            &dh,
            &skew.mul(&h0).add(&h0.mul(&skew.transpose())),
            tol,
        ));
        report.push(compare_mats(
            "dH_next = a dH a^T",
            Some(n),
            &dh_next,
            &a0.mul(&dh).mul(&a0.transpose()),
            tol,
        ));
        report.push(compare_mats(
            "dxi = a dH H^{-1}",
            Some(n),
            &dxi,
            &a0.mul(&dh).mul(&h0_inv),
            tol,
        ));
        // Derivation step: the product rule on a_n H_n against the x^n
        // coefficient of the evolution identity.
        let dah = jet_deriv(&coeffs.a[n].mul(fam.h(n)));
        let gamma = jet_deriv(&fam.xi_entry(n + 1, n as isize).add(&coeffs.a[n]));
        report.push(compare_mats(
            "d(a H) = d(xi + a) H",
            Some(n),
            &dah,
            &gamma.mul(&h0),
            tol,
        ));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Lax pair
// ---------------------------------------------------------------------------

/// Truncated Lax data. `A` is upper bidiagonal with the `a_n` on the
/// diagonal, `B` carries the recurrence bands `d, c, b, I`, `C` is the
/// diagonal of `d/dt xi_{n+1,n}`. All three are `k x k` block matrices over
/// jets; `k` is the usable truncation, at most the requested window.
#[derive(Debug, Clone)]
pub struct LaxOps<S: Scalar> {
    pub a: Mat<Jet2<S>>,
    pub b: Mat<Jet2<S>>,
    pub c: Mat<Jet2<S>>,
    pub p: usize,
    pub k: usize,
    pub t: usize,
}

/// Assemble the truncated operators for a window of `t` block rows.
///
/// Entries of the semi-infinite operators survive truncation unchanged, so
/// a product `A^{-1} B` is exact in every block column up to `k - 2`; the
/// usable truncation `k` is the longest prefix the coefficient vectors
/// support. Requires `t >= 5` (a smaller window has no interior) and
/// `k >= t - 2` (the window must sit inside the exact region).
pub fn build_lax<S: Scalar>(
    fam: &PolyFamily<Jet2<S>>,
    coeffs: &RecurrenceCoeffs<Jet2<S>>,
    t: usize,
) -> Result<LaxOps<S>, LatticeError> {
    if t < 5 {
        return Err(LatticeError::TruncationTooSmall { t });
    }
    let p = fam.p();

    // e_n = d/dt xi_{n+1,n} exists through n_max - 1.
    let le = fam.n_max();
    let k = t
        .min(coeffs.a.len())
        .min(coeffs.b.len() + 1)
        .min(coeffs.c.len())
        .min(coeffs.d.len())
        .min(le);
    if k + 2 < t {
        return Err(LatticeError::InsufficientData { t, usable: k });
    }

    let ident: Mat<Jet2<S>> = Mat::identity(p);
    let mut a = Mat::zeros(k * p, k * p);
    let mut b = Mat::zeros(k * p, k * p);
    let mut c = Mat::zeros(k * p, k * p);
    for n in 0..k {
        a.set_block(n, n, &coeffs.a[n]);
        if n + 1 < k {
            a.set_block(n, n + 1, &ident);
        }
        if n >= 1 {
            b.set_block(n, n - 1, &coeffs.d[n]);
        }
        b.set_block(n, n, &coeffs.c[n]);
        if n + 1 < k {
            b.set_block(n, n + 1, &coeffs.b[n]);
        }
        if n + 2 < k {
            b.set_block(n, n + 2, &ident);
        }
        let e_n = crate::blockmat::jet_embed(&jet_deriv(&fam.xi_entry(n + 1, n as isize)));
        c.set_block(n, n, &e_n);
    }
    Ok(LaxOps { a, b, c, p, k, t })
}

/// The compatibility check `d/dt L = [N, L]` on the interior window, plus
/// the direct operator statements `A x Phi = B Phi` and `A dPhi = C Phi`
/// on sample points.
///
/// `L = A^{-1} B` and `N = A^{-1} C` are formed from the truncated
/// operators; truncation pollutes only the last block column of `L` and
/// the last two block rows of the recurrence, so the residual is compared
/// on block rows and columns `0 ..= t - 4` and the operator statements on
/// the rows whose bands are complete.
pub fn check_lax<S: Scalar>(
    fam: &PolyFamily<Jet2<S>>,
    coeffs: &RecurrenceCoeffs<Jet2<S>>,
    t: usize,
    samples: &[S],
    tol: f64,
) -> Result<ResidualReport, LatticeError> {
    let ops = build_lax(fam, coeffs, t)?;
    let p = ops.p;
    let k = ops.k;
    let mut report = ResidualReport::new("lax compatibility");

    let a_inv = ops
        .a
        .invert()
        .map_err(|_| LatticeError::VnSingular(k.saturating_sub(1)))?;
    let lax = a_inv.mul(&ops.b);
    let lax0 = jet_value(&lax);
    let dlax = jet_deriv(&lax);
    let n0 = jet_value(&ops.a)
        .invert()
        .map_err(|_| LatticeError::VnSingular(k.saturating_sub(1)))?
        .mul(&jet_value(&ops.c));
    let commutator = n0.mul(&lax0).sub(&lax0.mul(&n0));

    let w = t - 4;
    for n in 0..=w {
        let mut row_lhs = Mat::zeros(p, (w + 1) * p);
        let mut row_rhs = Mat::zeros(p, (w + 1) * p);
        for m in 0..=w {
            row_lhs.set_block(0, m, &dlax.block(n, m, p));
            row_rhs.set_block(0, m, &commutator.block(n, m, p));
        }
        report.push(compare_mats(
            "dL = [N, L] interior row",
            Some(n),
            &row_lhs,
            &row_rhs,
            tol,
        ));
    }

    // Direct band statements on sample points. Row n of A x Phi = B Phi
    // reads a_n x P_n + x P_{n+1} = d_n P_{n-1} + c_n P_n + b_n P_{n+1}
    // + P_{n+2}; row n of A dPhi = C Phi reads a_n dP_n + dP_{n+1}
    // = (dxi_{n+1,n}) P_n.
    for x in samples {
        let xj = Jet2::constant(x.clone());
        let vals: Vec<Mat<Jet2<S>>> = (0..k).map(|n| fam.poly(n).eval(&xj)).collect();
        let dvals: Vec<Mat<S>> = (0..k).map(|n| poly_deriv(&fam.poly(n)).eval(x)).collect();
        let vals0: Vec<Mat<S>> = vals.iter().map(jet_value).collect();
        for n in 0..k.saturating_sub(2) {
            let lhs = coeffs.a[n]
                .mul(&vals[n])
                .add(&vals[n + 1])
                .map(|e| e.mul(&xj));
            let mut rhs = coeffs.c[n]
                .mul(&vals[n])
                .add(&coeffs.b[n].mul(&vals[n + 1]))
                .add(&vals[n + 2]);
            if n >= 1 {
                rhs = rhs.add(&coeffs.d[n].mul(&vals[n - 1]));
            }
            report.push(compare_mats("A x Phi = B Phi row", Some(n), &lhs, &rhs, tol));
        }
        for n in 0..k.saturating_sub(1) {
            let lhs = jet_value(&coeffs.a[n])
                .mul(&dvals[n])
                .add(&dvals[n + 1]);
            let rhs = jet_deriv(&fam.xi_entry(n + 1, n as isize)).mul(&vals0[n]);
            report.push(compare_mats("A dPhi = C Phi row", Some(n), &lhs, &rhs, tol));
        }
    }

    Ok(report)
}

// ---------------------------------------------------------------------------
// Second flow
// ---------------------------------------------------------------------------

/// Auxiliary coefficients of the degree-lowered test function
/// `g_m = P_m^T + P_{m-1}^T eta_m + P_{m-2}^T zeta_m`.
#[derive(Debug, Clone)]
pub struct T3Aux<S: Scalar> {
    pub eta: Mat<S>,
    pub zeta: Mat<S>,
}

/// Solve the pair of conditions `V_m^T + V_{m-1}^T eta + V_{m-2}^T zeta = 0`
/// and the same with `U` (for `m >= 2`), and verify both unknowns against
/// their bordered-quasideterminant expressions.
pub fn t3_construct<S: Scalar>(
    fam: &PolyFamily<S>,
    m: usize,
    tol: f64,
) -> Result<(T3Aux<S>, ResidualReport), LatticeError> {
    assert!(m >= 2, "auxiliary system starts at m = 2");
    assert!(m <= fam.n_max(), "family too short");
    let p = fam.p();
    let mut report = ResidualReport::new("t3 auxiliary system");

    let vt = |i: usize| fam.v(i).transpose();
    let ut = |i: usize| fam.u(i).transpose();

    // Unknown order (zeta; eta) matches the column order (m-2, m-1).
    let mut sys = Mat::zeros(2 * p, 2 * p);
    sys.set_block(0, 0, &vt(m - 2));
    sys.set_block(0, 1, &vt(m - 1));
    sys.set_block(1, 0, &ut(m - 2));
    sys.set_block(1, 1, &ut(m - 1));
    let mut rhs = Mat::zeros(2 * p, p);
    rhs.set_block(0, 0, &vt(m).neg());
    rhs.set_block(1, 0, &ut(m).neg());
    let sol = solve_nc(&sys, &rhs, p).map_err(|_| LatticeError::SystemSingular(m))?;
    let zeta = sol.block(0, 0, p);
    let eta = sol.block(1, 0, p);

    // Quasideterminant route: border the system with the m-column and a
    // unit row selecting the unknown.
    let quasi = |unit_col: usize| -> Result<Mat<S>, MatError> {
        let mut q = Mat::zeros(3 * p, 3 * p);
        q.set_block(0, 0, &vt(m - 2));
        q.set_block(0, 1, &vt(m - 1));
        q.set_block(0, 2, &vt(m));
        q.set_block(1, 0, &ut(m - 2));
        q.set_block(1, 1, &ut(m - 1));
        q.set_block(1, 2, &ut(m));
        q.set_block(2, unit_col, &Mat::identity(p));
        q.quasidet(2, 2, p)
    };
    match quasi(1) {
        Ok(qeta) => report.push(compare_mats("eta vs quasidet", Some(m), &eta, &qeta, tol)),
        Err(_) => report.push(residual_item(
            "eta quasidet undefined",
            Some(m),
            &Mat::<S>::from_fn(1, 1, |_, _| S::one()),
            1.0,
            tol,
        )),
    }
    match quasi(0) {
        Ok(qzeta) => report.push(compare_mats("zeta vs quasidet", Some(m), &zeta, &qzeta, tol)),
        Err(_) => report.push(residual_item(
            "zeta quasidet undefined",
            Some(m),
            &Mat::<S>::from_fn(1, 1, |_, _| S::one()),
            1.0,
            tol,
        )),
    }

    Ok((T3Aux { eta, zeta }, report))
}

/// `g_m` for the wave expansion: the constructed combination for `m >= 2`,
/// `P_m^T` bare below that (its missing cross terms are carried explicitly
/// by the right-hand side of the wave system).
fn t3_test_fn<S: Scalar>(
    fam: &PolyFamily<S>,
    m: usize,
    aux: Option<&T3Aux<S>>,
) -> MatPoly<S> {
    let qm = fam.q_poly(m);
    match aux {
        Some(a) if m >= 2 => qm
            .add(&fam.q_poly(m - 1).scale_right(&a.eta))
            .add(&fam.q_poly(m - 2).scale_right(&a.zeta)),
        _ => qm,
    }
}

/// Annihilation of the plain and once-shifted single integrals by `g_m`,
/// in the jet ring (so identically in time through first order).
pub fn check_t3_annihilation<B: BaseScalar, S: MeasureScalar<B>>(
    mu: &DiscreteMeasure<B>,
    fam: &PolyFamily<S>,
    m: usize,
    aux: &T3Aux<S>,
    tol: f64,
) -> ResidualReport {
    let mut report = ResidualReport::new("t3 annihilation");
    let g = t3_test_fn(fam, m, Some(aux));
    let s0 = single_integral_right(mu, &g);
    let s1 = single_integral_right(mu, &g.shift(1));
    report.push(residual_item("int W g = 0", Some(m), &s0, 1.0, tol));
    report.push(residual_item("int y W g = 0", Some(m), &s1, 1.0, tol));
    report
}

/// The second-flow wave expansion `d/dt3 (P_{n+1} + a_n P_n) = sum_m
/// gamma_m P_m`, solved through the test functions `g_m` and verified
/// coefficient-wise against the jet derivative.
///
/// For each `m` the pairing derivative splits as `d<F, g> = <dF, g> +
/// <F, dg> + cross(F, g)` with `cross(F, g) = R_2 s_0 - R_1 s_1 + R_0 s_2`,
/// `R_j = int x^j F W dx` and `s_j = int y^j W g dy`; `R_0` vanishes by the
/// construction of `a_n` and `s_0 = s_1 = 0` for the constructed `g_m`, so
/// the cross term only contributes at `m <= 1`. The resulting system is
/// block lower triangular in the `gamma`'s.
pub fn t3_wave_evolution<B: BaseScalar, S: MeasureScalar<B>>(
    mu: &DiscreteMeasure<B>,
    fam: &PolyFamily<Jet2<S>>,
    n: usize,
    tol: f64,
) -> Result<(Vec<Mat<S>>, ResidualReport), LatticeError>
where
    Jet2<S>: MeasureScalar<B>,
{
    assert!(n + 1 <= fam.n_max(), "need rows through n + 1");
    let p = fam.p();
    let mut report = ResidualReport::new("t3 wave expansion");

    let vn_inv = fam
        .v(n)
        .invert()
        .map_err(|_| LatticeError::VnSingular(n))?;
    let an = fam.v(n + 1).neg().mul(&vn_inv);
    let f_jet = fam.poly(n + 1).add(&fam.poly(n).scale_left(&an));
    let f_val = poly_value(&f_jet);

    // Cross-term ingredients from the undeformed measure.
    let r: Vec<Mat<S>> = (0..3)
        .map(|j| single_integral(mu, &f_val.shift(j)))
        .collect();

    let mut aux: Vec<Option<T3Aux<Jet2<S>>>> = vec![None, None];
    for m in 2..=n {
        let (a, rep) = t3_construct(fam, m, tol)?;
        report.merge(rep);
        report.merge(check_t3_annihilation(mu, fam, m, &a, tol));
        aux.push(Some(a));
    }

    let mut gamma: Vec<Mat<S>> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let g_jet = t3_test_fn(fam, m, aux[m].as_ref());
        let g_val = poly_value(&g_jet);
        let g_dot = poly_deriv(&g_jet);

        let pair_dot = jet_deriv(&inner_product(mu, &f_jet, &g_jet));
        let f_gdot = inner_product(mu, &f_val, &g_dot);
        let s: Vec<Mat<S>> = (0..3)
            .map(|j| single_integral_right(mu, &g_val.shift(j)))
            .collect();
        let cross = r[2]
            .mul(&s[0])
            .sub(&r[1].mul(&s[1]))
            .add(&r[0].mul(&s[2]));
        let mut rhs = pair_dot.sub(&f_gdot).sub(&cross);

        if m >= 1 {
            let h_prev = jet_value(fam.h(m - 1));
            let eta0 = aux[m]
                .as_ref()
                .map(|a| jet_value(&a.eta))
                .unwrap_or_else(|| Mat::zeros(p, p));
            rhs = rhs.sub(&gamma[m - 1].mul(&h_prev).mul(&eta0));
        }
        if m >= 2 {
            let h_prev2 = jet_value(fam.h(m - 2));
            let zeta0 = aux[m]
                .as_ref()
                .map(|a| jet_value(&a.zeta))
                .unwrap_or_else(|| Mat::zeros(p, p));
            rhs = rhs.sub(&gamma[m - 2].mul(&h_prev2).mul(&zeta0));
        }

        let hm_inv = jet_value(fam.h(m))
            .invert()
            .map_err(|_| LatticeError::HnSingular(m))?;
        gamma.push(rhs.mul(&hm_inv));
    }

    // The expansion must reproduce the jet derivative coefficient-wise.
    let mut expansion = MatPoly::zero(p);
    for (m, g) in gamma.iter().enumerate() {
        expansion = expansion.add(&poly_value(&fam.poly(m)).scale_left(g));
    }
    let f_dot = poly_deriv(&f_jet);
    for k in 0..f_dot.len().max(expansion.len()) {
        let diff = f_dot.coeff(k).sub(&expansion.coeff(k));
        let scale = 1.0_f64
            .max(f_dot.coeff(k).max_magnitude())
            .max(expansion.coeff(k).max_magnitude());
        report.push(residual_item(
            format!("wave expansion x^{k}"),
            Some(n),
            &diff,
            scale,
            tol,
        ));
    }

    Ok((gamma, report))
}

// ---------------------------------------------------------------------------
// Finite-difference cross-check (float backend)
// ---------------------------------------------------------------------------

/// Compare jet derivatives of `H_n` and `xi_{n+1,n}` against central
/// differences of plainly recomputed families at `t = +-h`. Float only;
/// the jet route is exact in `h`, the difference quotient is the sanity
/// check that the flow deformation means what it should.
pub fn check_fd_float(
    mu: &DiscreteMeasure<crate::ring::Float64>,
    n_max: usize,
    h: f64,
    tol: f64,
) -> Result<ResidualReport, Box<dyn std::error::Error>> {
    use crate::measure::Flow;
    use crate::ring::Float64;

    let mut report = ResidualReport::new("finite differences");
    let exponent = |x: f64| match mu.flow() {
        Flow::None => 0.0,
        Flow::T1 => x,
        Flow::T3 => x * x * x,
    };

    let shifted = |dt: f64| -> Result<PolyFamily<Float64>, Box<dyn std::error::Error>> {
        let nodes: Vec<(Float64, Mat<Float64>)> = mu
            .nodes()
            .iter()
            .map(|(x, w)| {
                let factor = Float64((dt * exponent(x.0)).exp());
                (x.clone(), w.scale(&factor))
            })
            .collect();
        let shifted_mu = DiscreteMeasure::new(mu.p(), nodes, Flow::None)?;
        let table = crate::measure::moments::<Float64, Float64>(&shifted_mu, n_max + 1);
        Ok(crate::cbop::build_family(&table, n_max)?)
    };

    let plus = shifted(h)?;
    let minus = shifted(-h)?;
    let table = crate::measure::moments::<Float64, Jet2<Float64>>(mu, n_max + 1);
    let jets = crate::cbop::build_family(&table, n_max)?;
    let rows = jets.n_max().min(plus.n_max()).min(minus.n_max());

    for n in 0..=rows {
        let fd = plus.h(n).sub(minus.h(n)).scale(&Float64(0.5 / h));
        report.push(compare_mats(
            "dH jet vs central difference",
            Some(n),
            &jet_deriv(jets.h(n)),
            &fd,
            tol,
        ));
    }
    for n in 1..=rows {
        let fd = plus
            .xi(n, n - 1)
            .sub(minus.xi(n, n - 1))
            .scale(&Float64(0.5 / h));
        report.push(compare_mats(
            "dxi jet vs central difference",
            Some(n - 1),
            &jet_deriv(jets.xi(n, n - 1)),
            &fd,
            tol,
        ));
    }
    Ok(report)
}
