//! Discrete matrix measures on the positive half-line and their moments.
//!
//! A measure here is a finite list of point masses: positive nodes `x_k` with
//! symmetric matrix weights `W_k`. With finitely many nodes, the Cauchy-kernel
//! pairing
//!
//! ```text
//! <f, g> = sum_{k,l} f(x_k) W_k W_l g(x_l) / (x_k + x_l)
//! ```
//!
//! is a finite double sum, so every moment is an exact ring element and every
//! downstream identity can be tested for exact equality.
//!
//! Time deformation multiplies each weight by `e^{t x_k}` (first flow) or
//! `e^{t x_k^3}` (third flow). It is applied at moment-generation time as a
//! jet factor on each node, based at t = 0 — the exponential is never stored
//! symbolically. Non-jet backends see the undeformed weights.
//!
//! An optional second node list turns on the asymmetric two-weight mode
//! (`W_1 != W_2`); all constructions before the symmetry lemma go through
//! unchanged there.

use crate::blockmat::Mat;
use crate::ring::{BaseScalar, Float64, MeasureScalar, Rational, Scalar};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    None,
    T1,
    T3,
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flow::None => write!(f, "none"),
            Flow::T1 => write!(f, "t1"),
            Flow::T3 => write!(f, "t3"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureError {
    EmptySupport,
    NonPositiveNode(String),
    DuplicateNode(String),
    NonSymmetricWeight(usize),
    BadShape(String),
    NotPositiveDefinite(usize),
    UnsupportedFamily(String),
    Parse(String),
}

impl fmt::Display for MeasureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureError::EmptySupport => write!(f, "measure has no nodes"),
            MeasureError::NonPositiveNode(x) => write!(f, "node {x} is not positive"),
            MeasureError::DuplicateNode(x) => write!(f, "node {x} appears twice"),
            MeasureError::NonSymmetricWeight(k) => {
                write!(f, "weight at node index {k} is not symmetric")
            }
            MeasureError::BadShape(s) => write!(f, "bad shape: {s}"),
            MeasureError::NotPositiveDefinite(k) => {
                write!(f, "weight at node index {k} is not positive definite")
            }
            MeasureError::UnsupportedFamily(s) => write!(f, "unsupported weight family: {s}"),
            MeasureError::Parse(s) => write!(f, "measure parse error: {s}"),
        }
    }
}

impl std::error::Error for MeasureError {}

/// Finite point-mass matrix measure, generic over the node data ring
/// (exact rationals natively, f64 for quadrature discretizations).
#[derive(Debug, Clone)]
pub struct DiscreteMeasure<B: BaseScalar> {
    p: usize,
    nodes: Vec<(B, Mat<B>)>,
    /// Second weight family for the asymmetric mode.
    nodes2: Option<Vec<(B, Mat<B>)>>,
    flow: Flow,
}

fn validate_nodes<B: BaseScalar>(
    p: usize,
    nodes: &[(B, Mat<B>)],
    require_symmetric: bool,
) -> Result<(), MeasureError> {
    if nodes.is_empty() {
        return Err(MeasureError::EmptySupport);
    }
    for (k, (x, w)) in nodes.iter().enumerate() {
        if !x.is_positive() {
            return Err(MeasureError::NonPositiveNode(x.to_string()));
        }
        if w.rows() != p || w.cols() != p {
            return Err(MeasureError::BadShape(format!(
                "weight {k} is {}x{}, expected {p}x{p}",
                w.rows(),
                w.cols()
            )));
        }
        if require_symmetric && *w != w.transpose() {
            return Err(MeasureError::NonSymmetricWeight(k));
        }
        for (x2, _) in &nodes[k + 1..] {
            if x == x2 {
                return Err(MeasureError::DuplicateNode(x.to_string()));
            }
        }
    }
    Ok(())
}

impl<B: BaseScalar> DiscreteMeasure<B> {
    /// Symmetric single-weight measure; weights must be symmetric.
    pub fn new(p: usize, nodes: Vec<(B, Mat<B>)>, flow: Flow) -> Result<Self, MeasureError> {
        assert!(p > 0, "block size must be positive");
        validate_nodes(p, &nodes, true)?;
        Ok(DiscreteMeasure {
            p,
            nodes,
            nodes2: None,
            flow,
        })
    }

    /// Asymmetric mode: two independent weighted node families, no symmetry
    /// requirement on either.
    pub fn new_asymmetric(
        p: usize,
        nodes: Vec<(B, Mat<B>)>,
        nodes2: Vec<(B, Mat<B>)>,
        flow: Flow,
    ) -> Result<Self, MeasureError> {
        assert!(p > 0, "block size must be positive");
        validate_nodes(p, &nodes, false)?;
        validate_nodes(p, &nodes2, false)?;
        Ok(DiscreteMeasure {
            p,
            nodes,
            nodes2: Some(nodes2),
            flow,
        })
    }

    pub fn with_flow(mut self, flow: Flow) -> Self {
        self.flow = flow;
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[(B, Mat<B>)] {
        &self.nodes
    }

    pub fn flow(&self) -> Flow {
        self.flow
    }

    pub fn is_symmetric_mode(&self) -> bool {
        self.nodes2.is_none()
    }

    /// The lattice pipeline additionally needs symmetric positive-definite
    /// weights (checked through leading principal minors).
    pub fn validate_for_lattice(&self) -> Result<(), MeasureError> {
        if self.nodes2.is_some() {
            return Err(MeasureError::BadShape(
                "lattice pipeline needs the symmetric single-weight mode".into(),
            ));
        }
        for (k, (_, w)) in self.nodes.iter().enumerate() {
            if *w != w.transpose() {
                return Err(MeasureError::NonSymmetricWeight(k));
            }
            for d in 1..=self.p {
                let minor = Mat::from_fn(d, d, |i, j| w.at(i, j).clone());
                if !det_field(&minor).is_positive() {
                    return Err(MeasureError::NotPositiveDefinite(k));
                }
            }
        }
        Ok(())
    }

    /// Node points embedded into the backend ring, with deformed weights
    /// `W_k(t) = e^{t c_k} W_k` where `c_k` is `x_k` (t1), `x_k^3` (t3), or
    /// absent (no flow).
    pub fn deformed_nodes<S: MeasureScalar<B>>(&self) -> Vec<(S, Mat<S>)> {
        deform::<B, S>(&self.nodes, self.flow)
    }

    /// The second family in asymmetric mode, the first otherwise.
    pub fn deformed_nodes2<S: MeasureScalar<B>>(&self) -> Vec<(S, Mat<S>)> {
        match &self.nodes2 {
            Some(n2) => deform::<B, S>(n2, self.flow),
            None => self.deformed_nodes(),
        }
    }
}

fn deform<B: BaseScalar, S: MeasureScalar<B>>(
    nodes: &[(B, Mat<B>)],
    flow: Flow,
) -> Vec<(S, Mat<S>)> {
    nodes
        .iter()
        .map(|(x, w)| {
            let xs = S::embed(x);
            let ws = w.map(|v| S::embed(v));
            let deformed = match flow {
                Flow::None => ws,
                Flow::T1 => ws.scale(&S::exp_factor(x)),
                Flow::T3 => {
                    let c = x.mul(x).mul(x);
                    ws.scale(&S::exp_factor(&c))
                }
            };
            (xs, deformed)
        })
        .collect()
}

impl DiscreteMeasure<Rational> {
    /// Same measure with node data rounded to f64, for float cross-checks.
    pub fn to_float(&self) -> DiscreteMeasure<Float64> {
        let conv = |nodes: &[(Rational, Mat<Rational>)]| {
            nodes
                .iter()
                .map(|(x, w)| (Float64(x.to_f64()), w.map(|v| Float64(v.to_f64()))))
                .collect::<Vec<_>>()
        };
        DiscreteMeasure {
            p: self.p,
            nodes: conv(&self.nodes),
            nodes2: self.nodes2.as_ref().map(|n| conv(n)),
            flow: self.flow,
        }
    }
}

/// Determinant over a field by elimination with pivot search; zero when
/// singular. Used only for small positivity checks.
fn det_field<B: BaseScalar>(m: &Mat<B>) -> B {
    let n = m.rows();
    let mut a = m.clone();
    let mut det = B::one();
    for col in 0..n {
        let mut pivot: Option<(usize, f64)> = None;
        for r in col..n {
            let w = a.at(r, col).pivot_weight();
            if w > 0.0 && pivot.map_or(true, |(_, bw)| w > bw) {
                pivot = Some((r, w));
            }
        }
        let Some((pr, _)) = pivot else {
            return B::zero();
        };
        if pr != col {
            for j in 0..n {
                let u = a.at(pr, j).clone();
                let v = a.at(col, j).clone();
                a.set(pr, j, v);
                a.set(col, j, u);
            }
            det = det.neg();
        }
        let piv = a.at(col, col).clone();
        det = det.mul(&piv);
        let pinv = piv.invert().expect("pivot invertible by construction");
        for r in col + 1..n {
            let f = a.at(r, col).mul(&pinv);
            if f.is_zero() {
                continue;
            }
            for j in col..n {
                let v = a.at(r, j).sub(&f.mul(a.at(col, j)));
                a.set(r, j, v);
            }
        }
    }
    det
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// Pair moments `m[i][j] = <x^i I, y^j I>` and single moments
/// `single[i] = integral of x^i W dx`, all `p × p`, for `0 <= i, j <= order`.
#[derive(Debug, Clone)]
pub struct MomentTable<S> {
    p: usize,
    order: usize,
    pair: Vec<Vec<Mat<S>>>,
    single: Vec<Mat<S>>,
    /// Second-family single moments in asymmetric mode.
    single2: Option<Vec<Mat<S>>>,
}

impl<S: Scalar> MomentTable<S> {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn pair(&self, i: usize, j: usize) -> &Mat<S> {
        &self.pair[i][j]
    }

    pub fn single(&self, i: usize) -> &Mat<S> {
        &self.single[i]
    }

    pub fn single2(&self, i: usize) -> &Mat<S> {
        match &self.single2 {
            Some(s) => &s[i],
            None => &self.single[i],
        }
    }

    pub fn is_asymmetric(&self) -> bool {
        self.single2.is_some()
    }

    /// Leading principal block minor `(m_{i,j})_{i,j=0..=k}` as one matrix.
    pub fn principal_minor(&self, k: usize) -> Mat<S> {
        let p = self.p;
        Mat::from_fn((k + 1) * p, (k + 1) * p, |r, c| {
            self.pair[r / p][c / p].at(r % p, c % p).clone()
        })
    }
}

/// Exact moment table of a deformed measure, through the given order.
pub fn moments<B: BaseScalar, S: MeasureScalar<B>>(
    mu: &DiscreteMeasure<B>,
    order: usize,
) -> MomentTable<S> {
    let nodes1 = mu.deformed_nodes::<S>();
    let nodes2 = mu.deformed_nodes2::<S>();
    let p = mu.p();

    let pows = |nodes: &[(S, Mat<S>)]| -> Vec<Vec<S>> {
        nodes
            .iter()
            .map(|(x, _)| {
                let mut row = Vec::with_capacity(order + 1);
                let mut acc = S::one();
                for _ in 0..=order {
                    row.push(acc.clone());
                    acc = acc.mul(x);
                }
                row
            })
            .collect()
    };
    let pow1 = pows(&nodes1);
    let pow2 = pows(&nodes2);

    // kernel coefficients and weight products, one per node pair
    let mut kernel: Vec<Vec<S>> = Vec::with_capacity(nodes1.len());
    let mut wprod: Vec<Vec<Mat<S>>> = Vec::with_capacity(nodes1.len());
    for (x1, w1) in &nodes1 {
        let mut krow = Vec::with_capacity(nodes2.len());
        let mut wrow = Vec::with_capacity(nodes2.len());
        for (x2, w2) in &nodes2 {
            let s = x1
                .add(x2)
                .invert()
                .expect("positive nodes make the kernel nonsingular");
            krow.push(s);
            wrow.push(w1.mul(w2));
        }
        kernel.push(krow);
        wprod.push(wrow);
    }

    let mut pair = Vec::with_capacity(order + 1);
    for i in 0..=order {
        let mut row = Vec::with_capacity(order + 1);
        for j in 0..=order {
            let mut acc = Mat::zeros(p, p);
            for k in 0..nodes1.len() {
                for l in 0..nodes2.len() {
                    let s = pow1[k][i].mul(&pow2[l][j]).mul(&kernel[k][l]);
                    acc = acc.add(&wprod[k][l].scale(&s));
                }
            }
            row.push(acc);
        }
        pair.push(row);
    }

    let singles = |nodes: &[(S, Mat<S>)], pw: &[Vec<S>]| -> Vec<Mat<S>> {
        (0..=order)
            .map(|i| {
                let mut acc = Mat::zeros(p, p);
                for (k, (_, w)) in nodes.iter().enumerate() {
                    acc = acc.add(&w.scale(&pw[k][i]));
                }
                acc
            })
            .collect()
    };
    let single = singles(&nodes1, &pow1);
    let single2 = if mu.is_symmetric_mode() {
        None
    } else {
        Some(singles(&nodes2, &pow2))
    };

    MomentTable {
        p,
        order,
        pair,
        single,
        single2,
    }
}

/// Moment-condition diagnostic: how far the leading principal block minors
/// stay invertible.
#[derive(Debug, Clone, Serialize)]
pub struct MomentConditionReport {
    pub requested: usize,
    /// Largest n with minors 0..=n all invertible; None if even the 0th fails.
    pub max_valid_n: Option<usize>,
    pub first_failure: Option<usize>,
}

pub fn moment_condition_check<S: Scalar>(
    table: &MomentTable<S>,
    n_max: usize,
) -> MomentConditionReport {
    let top = n_max.min(table.order());
    let mut max_valid = None;
    for k in 0..=top {
        if table.principal_minor(k).invert().is_ok() {
            max_valid = Some(k);
        } else {
            return MomentConditionReport {
                requested: n_max,
                max_valid_n: max_valid,
                first_failure: Some(k),
            };
        }
    }
    MomentConditionReport {
        requested: n_max,
        max_valid_n: max_valid,
        first_failure: None,
    }
}

// ---------------------------------------------------------------------------
// Measure files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct NodeFile {
    x: String,
    #[serde(rename = "W")]
    w: Vec<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureFile {
    p: usize,
    nodes: Vec<NodeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes2: Option<Vec<NodeFile>>,
    #[serde(default)]
    flow: Option<String>,
}

fn parse_node_list(p: usize, nodes: &[NodeFile]) -> Result<Vec<(Rational, Mat<Rational>)>, MeasureError> {
    nodes
        .iter()
        .map(|nf| {
            let x: Rational = nf
                .x
                .parse()
                .map_err(|e| MeasureError::Parse(format!("{e}")))?;
            if nf.w.len() != p || nf.w.iter().any(|row| row.len() != p) {
                return Err(MeasureError::BadShape(format!(
                    "weight for node {} is not {p}x{p}",
                    nf.x
                )));
            }
            let mut entries = Vec::with_capacity(p * p);
            for row in &nf.w {
                for cell in row {
                    entries.push(
                        cell.parse::<Rational>()
                            .map_err(|e| MeasureError::Parse(format!("{e}")))?,
                    );
                }
            }
            Ok((x, Mat::new(p, p, entries)))
        })
        .collect()
}

/// Parse the JSON measure format:
/// `{"p": 2, "nodes": [{"x": "1/2", "W": [["1","0"],["0","2"]]}], "flow": "t1"}`
/// with an optional `nodes2` list for the asymmetric mode.
pub fn parse_measure_json(s: &str) -> Result<DiscreteMeasure<Rational>, MeasureError> {
    let file: MeasureFile =
        serde_json::from_str(s).map_err(|e| MeasureError::Parse(e.to_string()))?;
    if file.p == 0 {
        return Err(MeasureError::BadShape("p must be at least 1".into()));
    }
    let flow = match file.flow.as_deref() {
        None | Some("none") => Flow::None,
        Some("t1") => Flow::T1,
        Some("t3") => Flow::T3,
        Some(other) => {
            return Err(MeasureError::Parse(format!(
                "flow must be \"t1\", \"t3\" or null, got {other:?}"
            )))
        }
    };
    let nodes = parse_node_list(file.p, &file.nodes)?;
    match &file.nodes2 {
        Some(n2) => {
            let nodes2 = parse_node_list(file.p, n2)?;
            DiscreteMeasure::new_asymmetric(file.p, nodes, nodes2, flow)
        }
        None => DiscreteMeasure::new(file.p, nodes, flow),
    }
}

/// Serialize a rational measure back into the JSON file format.
pub fn measure_to_json(mu: &DiscreteMeasure<Rational>) -> String {
    let conv = |nodes: &[(Rational, Mat<Rational>)]| {
        nodes
            .iter()
            .map(|(x, w)| NodeFile {
                x: x.to_string(),
                w: (0..w.rows())
                    .map(|i| (0..w.cols()).map(|j| w.at(i, j).to_string()).collect())
                    .collect(),
            })
            .collect::<Vec<_>>()
    };
    let file = MeasureFile {
        p: mu.p(),
        nodes: conv(&mu.nodes),
        nodes2: mu.nodes2.as_ref().map(|n| conv(n)),
        flow: match mu.flow {
            Flow::None => None,
            Flow::T1 => Some("t1".into()),
            Flow::T3 => Some("t3".into()),
        },
    };
    serde_json::to_string_pretty(&file).expect("measure serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Quadrature discretization (float only)
// ---------------------------------------------------------------------------

/// Named continuous weight families that can be folded into point-mass form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadFamily {
    /// `x^alpha e^{-x}` on the positive half-line, `alpha > -1`.
    Laguerre { alpha: f64 },
    /// `e^{-beta x}` on the positive half-line, `beta > 0`.
    ScaledExponential { beta: f64 },
}

/// Gauss-type discretization of a named weight family; weights become
/// `w_k * I_p`. Float backend only by construction.
pub fn discretize(
    family: QuadFamily,
    count: usize,
    p: usize,
) -> Result<DiscreteMeasure<Float64>, MeasureError> {
    assert!(p > 0, "block size must be positive");
    if count == 0 {
        return Err(MeasureError::EmptySupport);
    }
    let (xs, ws) = match family {
        QuadFamily::Laguerre { alpha } => {
            if !(alpha > -1.0) || !alpha.is_finite() {
                return Err(MeasureError::UnsupportedFamily(format!(
                    "laguerre alpha must exceed -1, got {alpha}"
                )));
            }
            gauss_laguerre(count, alpha)
        }
        QuadFamily::ScaledExponential { beta } => {
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(MeasureError::UnsupportedFamily(format!(
                    "scaled-exponential beta must be positive, got {beta}"
                )));
            }
            let (xs, ws) = gauss_laguerre(count, 0.0);
            (
                xs.iter().map(|x| x / beta).collect(),
                ws.iter().map(|w| w / beta).collect(),
            )
        }
    };
    let nodes = xs
        .into_iter()
        .zip(ws)
        .map(|(x, w)| {
            let wm = Mat::from_fn(p, p, |i, j| {
                Float64(if i == j { w } else { 0.0 })
            });
            (Float64(x), wm)
        })
        .collect();
    DiscreteMeasure::new(p, nodes, Flow::None)
}

/// Log-gamma via the Lanczos series (double precision, positive arguments).
fn ln_gamma(x: f64) -> f64 {
    const COF: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_9e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000_000_000_190_015;
    for c in COF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Generalized Gauss–Laguerre nodes and weights for the weight
/// `x^alpha e^{-x}`; Newton iteration on the degree-n polynomial.
fn gauss_laguerre(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * nf + 1.8 * alpha),
            1 => z + (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai)
                    + 1.26 * ai * alpha / (1.0 + 3.5 * ai))
                    * (z - xs[i - 2])
                    / (1.0 + 0.3 * alpha)
            }
        };
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0 + alpha - z) * p2 - (jf - 1.0 + alpha) * p3) / jf;
            }
            let pp = (nf * p1 - (nf + alpha) * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        let pp = (nf * p1 - (nf + alpha) * p2) / z;
        xs[i] = z;
        ws[i] = -((ln_gamma(alpha + nf) - ln_gamma(nf)).exp()) / (pp * nf * p2);
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Jet2;
    use crate::sample;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn scalar_weight(v: i64) -> Mat<Rational> {
        Mat::from_rows(vec![vec![Rational::from_int(v)]])
    }

    /// The two-point measure used throughout: nodes 1 and 2, unit weights.
    fn two_node() -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(
            1,
            vec![(q(1, 1), scalar_weight(1)), (q(2, 1), scalar_weight(1))],
            Flow::None,
        )
        .unwrap()
    }

    #[test]
    fn worked_two_node_moments() {
        let t: MomentTable<Rational> = moments(&two_node(), 2);
        assert_eq!(t.pair(0, 0).at(0, 0), &q(17, 12));
        assert_eq!(t.pair(1, 0).at(0, 0), &q(2, 1));
        assert_eq!(t.pair(0, 1).at(0, 0), &q(2, 1));
        assert_eq!(t.pair(1, 1).at(0, 0), &q(17, 6));
        assert_eq!(t.single(0).at(0, 0), &q(2, 1));
        assert_eq!(t.single(1).at(0, 0), &q(3, 1));
        assert_eq!(t.single(2).at(0, 0), &q(5, 1));
    }

    #[test]
    fn single_node_moments_constant() {
        let mu = DiscreteMeasure::new(1, vec![(q(1, 1), scalar_weight(1))], Flow::None).unwrap();
        let t: MomentTable<Rational> = moments(&mu, 3);
        for i in 0..=3 {
            for j in 0..=3 {
                assert_eq!(t.pair(i, j).at(0, 0), &q(1, 2));
            }
        }
    }

    #[test]
    fn jet_moment_worked_value() {
        let mu = two_node().with_flow(Flow::T1);
        let t: MomentTable<Jet2<Rational>> = moments(&mu, 1);
        let m00 = t.pair(0, 0).at(0, 0).clone();
        assert_eq!(m00, Jet2::new(q(17, 12), q(4, 1), q(6, 1)));
    }

    #[test]
    fn kernel_identity_exact_on_random_measures() {
        let mut r = sample::rng(11);
        for trial in 0..20 {
            let p = 1 + trial % 2;
            let mu = sample::measure(&mut r, p, 4, Flow::None);
            let t: MomentTable<Rational> = moments(&mu, 4);
            for i in 0..4 {
                for j in 0..4 {
                    let lhs = t.pair(i + 1, j).add(t.pair(i, j + 1));
                    let rhs = t.single(i).mul(t.single2(j));
                    assert_eq!(lhs, rhs, "kernel identity at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn kernel_identity_in_asymmetric_mode() {
        let mut r = sample::rng(13);
        let n1 = vec![
            (q(1, 1), sample::rational_mat(&mut r, 2, 2)),
            (q(2, 1), sample::rational_mat(&mut r, 2, 2)),
            (q(3, 1), sample::rational_mat(&mut r, 2, 2)),
        ];
        let n2 = vec![
            (q(1, 2), sample::rational_mat(&mut r, 2, 2)),
            (q(5, 2), sample::rational_mat(&mut r, 2, 2)),
        ];
        let mu = DiscreteMeasure::new_asymmetric(2, n1, n2, Flow::None).unwrap();
        let t: MomentTable<Rational> = moments(&mu, 3);
        assert!(t.is_asymmetric());
        for i in 0..3 {
            for j in 0..3 {
                let lhs = t.pair(i + 1, j).add(t.pair(i, j + 1));
                let rhs = t.single(i).mul(t.single2(j));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn transpose_symmetry_for_symmetric_weights() {
        let mut r = sample::rng(17);
        let mu = sample::measure(&mut r, 2, 4, Flow::None);
        let t: MomentTable<Rational> = moments(&mu, 3);
        for i in 0..=3 {
            for j in 0..=3 {
                assert_eq!(t.pair(i, j).transpose(), t.pair(j, i).clone());
            }
        }
    }

    #[test]
    fn jet_first_coefficient_is_the_t1_derivative() {
        let mut r = sample::rng(19);
        let mu = sample::measure(&mut r, 2, 3, Flow::T1);
        let t: MomentTable<Jet2<Rational>> = moments(&mu, 3);
        let plain: MomentTable<Rational> = moments(&mu, 4);
        for i in 0..=3 {
            for j in 0..=3 {
                let d = crate::blockmat::jet_deriv(t.pair(i, j));
                let expect = plain.pair(i + 1, j).add(plain.pair(i, j + 1));
                assert_eq!(d, expect, "t1 derivative of m[{i}][{j}]");
            }
        }
    }

    #[test]
    fn jet_first_coefficient_is_the_t3_derivative() {
        let mut r = sample::rng(23);
        let mu = sample::measure(&mut r, 1, 3, Flow::T3);
        let t: MomentTable<Jet2<Rational>> = moments(&mu, 2);
        // oracle: same double sum with an explicit (x^3 + y^3) factor
        let nodes: Vec<(Rational, Mat<Rational>)> = mu
            .deformed_nodes::<Rational>()
            .into_iter()
            .collect();
        for i in 0..=2 {
            for j in 0..=2 {
                let mut acc = Mat::zeros(1, 1);
                for (xk, wk) in &nodes {
                    for (xl, wl) in &nodes {
                        let cube = |v: &Rational| v.mul(v).mul(v);
                        let s = xk
                            .pow_u(i)
                            .mul(&xl.pow_u(j))
                            .mul(&Scalar::add(&cube(xk), &cube(xl)))
                            .mul(&xk.add(xl).invert().unwrap());
                        acc = acc.add(&wk.mul(wl).scale(&s));
                    }
                }
                assert_eq!(crate::blockmat::jet_deriv(t.pair(i, j)), acc);
            }
        }
    }

    #[test]
    fn moment_condition_worked_examples() {
        let single = DiscreteMeasure::new(1, vec![(q(1, 1), scalar_weight(1))], Flow::None).unwrap();
        let t: MomentTable<Rational> = moments(&single, 3);
        let rep = moment_condition_check(&t, 3);
        assert_eq!(rep.max_valid_n, Some(0));
        assert_eq!(rep.first_failure, Some(1));

        let t2: MomentTable<Rational> = moments(&two_node(), 3);
        let rep2 = moment_condition_check(&t2, 3);
        assert_eq!(rep2.max_valid_n, Some(1));
        assert_eq!(rep2.first_failure, Some(2));
    }

    #[test]
    fn moment_condition_full_rank_for_pd_measures() {
        let mut r = sample::rng(29);
        for &p in &[1usize, 2] {
            let mu = sample::measure(&mut r, p, 5, Flow::None);
            let t: MomentTable<Rational> = moments(&mu, 5);
            let rep = moment_condition_check(&t, 5);
            assert_eq!(rep.max_valid_n, Some(4), "p={p}");
            assert_eq!(rep.first_failure, Some(5));
        }
    }

    #[test]
    fn measure_validation_errors() {
        let w = scalar_weight(1);
        assert_eq!(
            DiscreteMeasure::<Rational>::new(1, vec![], Flow::None).unwrap_err(),
            MeasureError::EmptySupport
        );
        assert!(matches!(
            DiscreteMeasure::new(1, vec![(q(0, 1), w.clone())], Flow::None).unwrap_err(),
            MeasureError::NonPositiveNode(_)
        ));
        assert!(matches!(
            DiscreteMeasure::new(
                1,
                vec![(q(1, 1), w.clone()), (q(1, 1), w.clone())],
                Flow::None
            )
            .unwrap_err(),
            MeasureError::DuplicateNode(_)
        ));
        let asym = Mat::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(0, 1), q(1, 1)]]);
        assert_eq!(
            DiscreteMeasure::new(2, vec![(q(1, 1), asym.clone())], Flow::None).unwrap_err(),
            MeasureError::NonSymmetricWeight(0)
        );
        // the asymmetric mode accepts it
        assert!(DiscreteMeasure::new_asymmetric(
            2,
            vec![(q(1, 1), asym.clone())],
            vec![(q(2, 1), asym)],
            Flow::None
        )
        .is_ok());
    }

    #[test]
    fn lattice_validation_requires_positive_definite() {
        let indefinite = Mat::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(1, 1)]]);
        let mu = DiscreteMeasure::new(2, vec![(q(1, 1), indefinite)], Flow::None).unwrap();
        assert_eq!(
            mu.validate_for_lattice().unwrap_err(),
            MeasureError::NotPositiveDefinite(0)
        );
        let mut r = sample::rng(31);
        let good = sample::measure(&mut r, 2, 3, Flow::None);
        assert!(good.validate_for_lattice().is_ok());
    }

    #[test]
    fn measure_json_roundtrip() {
        let text = r#"{
            "p": 2,
            "nodes": [
                {"x": "1/2", "W": [["1", "0"], ["0", "2"]]},
                {"x": "3", "W": [["2", "1"], ["1", "2"]]}
            ],
            "flow": "t1"
        }"#;
        let mu = parse_measure_json(text).unwrap();
        assert_eq!(mu.p(), 2);
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.flow(), Flow::T1);
        let round = parse_measure_json(&measure_to_json(&mu)).unwrap();
        assert_eq!(round.p(), 2);
        assert_eq!(round.flow(), Flow::T1);
        assert_eq!(round.nodes()[1].0, q(3, 1));

        assert!(matches!(
            parse_measure_json(r#"{"p": 1, "nodes": [{"x": "1/0", "W": [["1"]]}]}"#),
            Err(MeasureError::Parse(_))
        ));
        assert!(matches!(
            parse_measure_json(r#"{"p": 2, "nodes": [{"x": "1", "W": [["1"]]}]}"#),
            Err(MeasureError::BadShape(_))
        ));
        assert!(matches!(
            parse_measure_json(r#"{"p": 1, "nodes": [{"x": "1", "W": [["1"]]}], "flow": "t2"}"#),
            Err(MeasureError::Parse(_))
        ));
    }

    // -- quadrature -----------------------------------------------------------

    #[test]
    fn gauss_laguerre_one_and_two_point_rules() {
        let (x, w) = gauss_laguerre(1, 0.0);
        assert!((x[0] - 1.0).abs() < 1e-13);
        assert!((w[0] - 1.0).abs() < 1e-13);

        let (x, w) = gauss_laguerre(2, 0.0);
        let r2 = 2.0_f64.sqrt();
        assert!((x[0] - (2.0 - r2)).abs() < 1e-12);
        assert!((x[1] - (2.0 + r2)).abs() < 1e-12);
        assert!((w[0] - (2.0 + r2) / 4.0).abs() < 1e-12);
        assert!((w[1] - (2.0 - r2) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_laguerre_integrates_polynomials_exactly() {
        // degree <= 2n-1 exactness: moments of x^k are k! for alpha = 0
        let (x, w) = gauss_laguerre(6, 0.0);
        let mut fact = 1.0;
        for k in 0..=11usize {
            if k > 0 {
                fact *= k as f64;
            }
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| xi.powi(k as i32) * wi).sum();
            assert!(
                (got - fact).abs() <= 1e-9 * fact.max(1.0),
                "k={k}: {got} vs {fact}"
            );
        }
        // alpha = 1: integral of x^k x e^-x = (k+1)!
        let (x, w) = gauss_laguerre(6, 1.0);
        let got: f64 = x.iter().zip(&w).map(|(xi, wi)| xi * wi).sum();
        assert!((got - 2.0).abs() < 1e-10); // k = 1 -> 2! = 2
    }

    #[test]
    fn discretized_single_moments_converge_fast() {
        // single moments are polynomial integrals: 16- and 32-node tables agree
        // to far better than 1e-10 relative for i <= 6
        let m16 = discretize(QuadFamily::Laguerre { alpha: 0.0 }, 16, 1).unwrap();
        let m32 = discretize(QuadFamily::Laguerre { alpha: 0.0 }, 32, 1).unwrap();
        let t16: MomentTable<Float64> = moments(&m16, 6);
        let t32: MomentTable<Float64> = moments(&m32, 6);
        for i in 0..=6 {
            let a = t16.single(i).at(0, 0).0;
            let b = t32.single(i).at(0, 0).0;
            assert!(((a - b) / b).abs() < 1e-10, "phi_{i}: {a} vs {b}");
        }
    }

    #[test]
    fn discretized_pair_moments_approach_the_continuum_values() {
        // For the unit Laguerre weight the continuum pair moments have the
        // closed form m_ij = i! j! / (i + j + 1); the Cauchy kernel makes the
        // discretized tables converge slowly but monotonically toward it.
        let fact = |k: usize| (1..=k).product::<usize>() as f64;
        for &(i, j) in &[(0usize, 0usize), (1, 1), (2, 2)] {
            let exact = fact(i) * fact(j) / (i + j + 1) as f64;
            let mut last_err = f64::INFINITY;
            for &n in &[8usize, 16, 32] {
                let mu = discretize(QuadFamily::Laguerre { alpha: 0.0 }, n, 1).unwrap();
                let t: MomentTable<Float64> = moments(&mu, i.max(j));
                let err = (t.pair(i, j).at(0, 0).0 - exact).abs();
                assert!(err < last_err, "({i},{j}) at {n} nodes: {err} !< {last_err}");
                last_err = err;
            }
        }
    }

    #[test]
    fn scaled_exponential_matches_rescaled_laguerre() {
        let beta = 2.5;
        let a = discretize(QuadFamily::ScaledExponential { beta }, 12, 1).unwrap();
        let b = discretize(QuadFamily::Laguerre { alpha: 0.0 }, 12, 1).unwrap();
        let ta: MomentTable<Float64> = moments(&a, 3);
        let tb: MomentTable<Float64> = moments(&b, 3);
        for i in 0..=3 {
            for j in 0..=3 {
                let lhs = ta.pair(i, j).at(0, 0).0;
                let rhs = tb.pair(i, j).at(0, 0).0 * beta.powi(-((i + j + 1) as i32));
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn discretize_rejects_bad_parameters() {
        assert!(matches!(
            discretize(QuadFamily::Laguerre { alpha: -1.5 }, 4, 1),
            Err(MeasureError::UnsupportedFamily(_))
        ));
        assert!(matches!(
            discretize(QuadFamily::ScaledExponential { beta: 0.0 }, 4, 1),
            Err(MeasureError::UnsupportedFamily(_))
        ));
        assert!(matches!(
            discretize(QuadFamily::Laguerre { alpha: 0.0 }, 0, 1),
            Err(MeasureError::EmptySupport)
        ));
    }
}
