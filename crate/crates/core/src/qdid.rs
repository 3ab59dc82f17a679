//! Randomized checks of the quasideterminant identities that the lattice
//! verification leans on: the noncommutative Jacobi identity, the homological
//! relations, and the four derivative formulas.
//!
//! Everything here runs over exact rationals (or rational jets), so each
//! identity is checked for literal equality. Draws that break a precondition
//! (some inner inverse not existing) are resampled and counted; they are never
//! silently dropped.
//!
//! Block layout for the bordered identities, with `k >= 1` inner block rows
//! and block size `p`:
//!
//! ```text
//!       A  B  C        rows 0..k      (A is k x k blocks)
//!       D  f  g        row  k
//!       E  h  i        row  k+1
//! ```

use crate::blockmat::{jet_deriv, jet_value, Mat, MatError};
use crate::report::IdentityReport;
use crate::ring::{Jet2, Rational, Scalar};
use crate::sample;
use rand_chacha::ChaCha8Rng;

/// Jacobi identity residual (LHS minus the three-factor RHS) for the full
/// bordered matrix `m`; block coordinates as in the module header.
pub fn nc_jacobi_residual<S: Scalar>(m: &Mat<S>, p: usize) -> Result<Mat<S>, MatError> {
    let n = m.block_dim(p);
    assert!(n >= 3, "jacobi identity needs at least three block rows");
    let last = n - 1;
    let mid = n - 2;
    let lhs = m.quasidet(last, last, p)?;
    let ac_i = m.delete_block(mid, mid, p).quasidet(n - 2, n - 2, p)?;
    let ab_h = m.delete_block(mid, last, p).quasidet(n - 2, n - 2, p)?;
    let ab_f = m.delete_block(last, last, p).quasidet(n - 2, n - 2, p)?;
    let ac_g = m.delete_block(last, mid, p).quasidet(n - 2, n - 2, p)?;
    let rhs = ac_i.sub(&ab_h.mul(&ab_f.invert()?).mul(&ac_g));
    Ok(lhs.sub(&rhs))
}

/// Residuals of the two homological relations: the boxed-`h` relation
/// (quasidet factored on the right by a unit-bordered row) and the boxed-`g`
/// relation (factored on the left by a unit-bordered column).
pub fn homological_residuals<S: Scalar>(
    m: &Mat<S>,
    p: usize,
) -> Result<(Mat<S>, Mat<S>), MatError> {
    let n = m.block_dim(p);
    assert!(n >= 3, "homological relation needs at least three block rows");
    let last = n - 1;
    let mid = n - 2;
    let qd_i = m.quasidet(last, last, p)?;

    let lhs1 = m.quasidet(last, mid, p)?;
    let mut unit_row = m.clone();
    for bj in 0..n {
        unit_row.set_block(last, bj, &Mat::zeros(p, p));
    }
    unit_row.set_block(last, last, &Mat::identity(p));
    let rhs1 = qd_i.mul(&unit_row.quasidet(last, mid, p)?);

    let lhs2 = m.quasidet(mid, last, p)?;
    let mut unit_col = m.clone();
    for bi in 0..n {
        unit_col.set_block(bi, last, &Mat::zeros(p, p));
    }
    unit_col.set_block(last, last, &Mat::identity(p));
    let rhs2 = unit_col.quasidet(mid, last, p)?.mul(&qd_i);

    Ok((lhs1.sub(&rhs1), lhs2.sub(&rhs2)))
}

// ---------------------------------------------------------------------------
// Derivative formulas
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqdFamily {
    /// `d' - C'A^{-1}B - CA^{-1}B' + CA^{-1}A'A^{-1}B`.
    General,
    /// `A' = sum E_i F_i` factored form; needs the rank factors.
    Grammian,
    /// Row-insertion form (unit block columns spliced in).
    Row,
    /// Column-insertion form.
    Column,
}

impl std::fmt::Display for DqdFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DqdFamily::General => write!(f, "general"),
            DqdFamily::Grammian => write!(f, "grammian"),
            DqdFamily::Row => write!(f, "row"),
            DqdFamily::Column => write!(f, "column"),
        }
    }
}

fn corner_split<S: Scalar>(m: &Mat<S>, k: usize) -> (Mat<S>, Mat<S>, Mat<S>, Mat<S>) {
    let (rows, cols) = (m.rows(), m.cols());
    let a = Mat::from_fn(k, k, |i, j| m.at(i, j).clone());
    let b = Mat::from_fn(k, cols - k, |i, j| m.at(i, k + j).clone());
    let c = Mat::from_fn(rows - k, k, |i, j| m.at(k + i, j).clone());
    let d = Mat::from_fn(rows - k, cols - k, |i, j| m.at(k + i, k + j).clone());
    (a, b, c, d)
}

use crate::blockmat::bordered_quasidet as bordered_qd;

/// Both sides of the chosen derivative formula for a jet-valued bordered
/// matrix: the LHS is the jet first coefficient of the quasideterminant, the
/// RHS is the formula evaluated on value and derivative parts. The Grammian
/// family needs the rank factors of `A' = sum E_i F_i`.
pub fn derivative_sides<S: Scalar>(
    family: DqdFamily,
    m: &Mat<Jet2<S>>,
    p: usize,
    rank_factors: Option<&[(Mat<S>, Mat<S>)]>,
) -> Result<(Mat<S>, Mat<S>), MatError> {
    let n = m.block_dim(p);
    assert!(n >= 2, "derivative formula needs a nonempty leading block");
    let last = n - 1;
    let k = last * p;
    let lhs = jet_deriv(&m.quasidet(last, last, p)?);

    let (a0, b0, c0, d0) = corner_split(&jet_value(m), k);
    let (a1, b1, c1, d1) = corner_split(&jet_deriv(m), k);
    let _ = d0;

    let rhs = match family {
        DqdFamily::General => {
            let ainv = a0.invert()?;
            d1.sub(&c1.mul(&ainv).mul(&b0))
                .sub(&c0.mul(&ainv).mul(&b1))
                .add(&c0.mul(&ainv).mul(&a1).mul(&ainv).mul(&b0))
        }
        DqdFamily::Grammian => {
            let factors = rank_factors.expect("grammian family needs rank factors");
            let zero = Mat::zeros(p, p);
            let mut acc = d1
                .add(&bordered_qd(&a0, &b0, &c1, &zero, p)?)
                .add(&bordered_qd(&a0, &b1, &c0, &zero, p)?);
            for (e, f) in factors {
                let t1 = bordered_qd(&a0, e, &c0, &zero, p)?;
                let t2 = bordered_qd(&a0, &b0, f, &zero, p)?;
                acc = acc.add(&t1.mul(&t2));
            }
            acc
        }
        DqdFamily::Row => {
            let zero = Mat::zeros(p, p);
            let mut acc = bordered_qd(&a0, &b0, &c1, &d1, p)?;
            for j in 0..last {
                let mut ej = Mat::zeros(k, p);
                ej.set_block(j, 0, &Mat::identity(p));
                let arow = Mat::from_fn(p, k, |i, c| a1.at(j * p + i, c).clone());
                let bj = Mat::from_fn(p, p, |i, c| b1.at(j * p + i, c).clone());
                let t1 = bordered_qd(&a0, &ej, &c0, &zero, p)?;
                let t2 = bordered_qd(&a0, &b0, &arow, &bj, p)?;
                acc = acc.add(&t1.mul(&t2));
            }
            acc
        }
        DqdFamily::Column => {
            let zero = Mat::zeros(p, p);
            let mut acc = bordered_qd(&a0, &b1, &c0, &d1, p)?;
            for j in 0..last {
                let mut ej = Mat::zeros(p, k);
                ej.set_block(0, j, &Mat::identity(p));
                let acol = Mat::from_fn(k, p, |i, c| a1.at(i, j * p + c).clone());
                let cj = Mat::from_fn(p, p, |i, c| c1.at(i, j * p + c).clone());
                let t1 = bordered_qd(&a0, &acol, &c0, &cj, p)?;
                let t2 = bordered_qd(&a0, &b0, &ej, &zero, p)?;
                acc = acc.add(&t1.mul(&t2));
            }
            acc
        }
    };
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// Randomized drivers
// ---------------------------------------------------------------------------

fn drive(
    name: String,
    trials: usize,
    rng: &mut ChaCha8Rng,
    mut trial: impl FnMut(&mut ChaCha8Rng) -> Result<(bool, String), MatError>,
) -> IdentityReport {
    let mut rep = IdentityReport::new(name);
    let mut attempts = 0usize;
    while rep.trials < trials as u64 {
        attempts += 1;
        assert!(
            attempts <= 200 * trials + 1000,
            "resampling is not terminating; drawing logic is broken"
        );
        match trial(rng) {
            Ok((true, _)) => rep.record_pass(),
            Ok((false, dump)) => rep.record_failure(dump),
            Err(_) => rep.record_resample(),
        }
    }
    rep
}

/// Jacobi identity over random rational blocks; `inner` is the number of
/// block rows in `A`, so the full matrix has `inner + 2` block rows.
pub fn check_nc_jacobi(p: usize, inner: usize, trials: usize, seed: u64) -> IdentityReport {
    let mut rng = sample::rng(seed);
    let dim = (inner + 2) * p;
    drive(
        format!("ncj p={p} rows={}", inner + 2),
        trials,
        &mut rng,
        |r| {
            let m = sample::rational_mat(r, dim, dim);
            let res = nc_jacobi_residual(&m, p)?;
            Ok((res.is_zero(), format!("p={p}\n{m}")))
        },
    )
}

/// Both homological relations over random rational blocks.
pub fn check_homological(p: usize, inner: usize, trials: usize, seed: u64) -> IdentityReport {
    let mut rng = sample::rng(seed);
    let dim = (inner + 2) * p;
    drive(
        format!("homo p={p} rows={}", inner + 2),
        trials,
        &mut rng,
        |r| {
            let m = sample::rational_mat(r, dim, dim);
            let (r1, r2) = homological_residuals(&m, p)?;
            Ok((r1.is_zero() && r2.is_zero(), format!("p={p}\n{m}")))
        },
    )
}

/// Draw a jet matrix whose leading block is Grammian-like: its derivative
/// part is overwritten by `sum E_i F_i` with `rank` terms.
fn grammian_draw(
    rng: &mut ChaCha8Rng,
    dim: usize,
    k: usize,
    rank: usize,
) -> (Mat<Jet2<Rational>>, Vec<(Mat<Rational>, Mat<Rational>)>) {
    let mut m = sample::jet_mat(rng, dim, dim);
    let factors: Vec<_> = (0..rank)
        .map(|_| {
            (
                sample::rational_mat(rng, k, dim - k),
                sample::rational_mat(rng, dim - k, k),
            )
        })
        .collect();
    let mut aprime: Mat<Rational> = Mat::zeros(k, k);
    for (e, f) in &factors {
        aprime = aprime.add(&e.mul(f));
    }
    for i in 0..k {
        for j in 0..k {
            let mut cell = m.at(i, j).clone();
            cell.c1 = aprime.at(i, j).clone();
            m.set(i, j, cell);
        }
    }
    (m, factors)
}

/// One derivative-formula family over random rational jets; `size` is the
/// total number of block rows (the leading block has `size - 1`).
pub fn check_derivative_formulas(
    family: DqdFamily,
    p: usize,
    size: usize,
    trials: usize,
    seed: u64,
) -> IdentityReport {
    let mut rng = sample::rng(seed);
    let dim = size * p;
    let k = (size - 1) * p;
    drive(
        format!("dqd-{family} p={p} rows={size}"),
        trials,
        &mut rng,
        |r| {
            let (m, factors) = match family {
                DqdFamily::Grammian => {
                    let rank = 1 + (sample::rng_index(r, 2));
                    grammian_draw(r, dim, k, rank)
                }
                _ => (sample::jet_mat(r, dim, dim), Vec::new()),
            };
            let fac = if factors.is_empty() {
                None
            } else {
                Some(factors.as_slice())
            };
            let (lhs, rhs) = derivative_sides(family, &m, p, fac)?;
            Ok((lhs == rhs, format!("p={p} family={family}\n{m}")))
        },
    )
}

/// The whole catalog at one block size: Jacobi and homological over 3 and 4
/// block rows, the four derivative families over 2 through 4.
pub fn check_catalog(p: usize, trials: usize, seed: u64) -> Vec<IdentityReport> {
    let mut out = Vec::new();
    for inner in [1usize, 2] {
        out.push(check_nc_jacobi(p, inner, trials, seed ^ inner as u64));
        out.push(check_homological(p, inner, trials, seed ^ (16 + inner as u64)));
    }
    for size in [2usize, 3, 4] {
        for family in [
            DqdFamily::General,
            DqdFamily::Grammian,
            DqdFamily::Row,
            DqdFamily::Column,
        ] {
            out.push(check_derivative_formulas(
                family,
                p,
                size,
                trials,
                seed ^ (32 + size as u64),
            ));
        }
    }
    out
}
