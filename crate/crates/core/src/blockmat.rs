//! Dense matrices over a [`Scalar`] ring, with the noncommutative toolkit the
//! rest of the library is built on: exact Gaussian elimination, block-indexed
//! quasideterminants, and block linear solves.
//!
//! A quasideterminant of a square matrix `A`, boxed at position `(i, j)`, is
//!
//! ```text
//! |A|_{i,j} = a_{i,j} - r_i^j (A^{i,j})^{-1} c_j^i
//! ```
//!
//! where `A^{i,j}` deletes row i and column j, `r_i^j` is row i without entry
//! j, and `c_j^i` is column j without entry i. It is computed directly from
//! this definition (one inversion of the deleted submatrix), never through a
//! determinant. Block mode reindexes the same computation: a `(k·p) × (k·p)`
//! matrix viewed as a `k × k` grid of `p × p` blocks has quasideterminants
//! that are `p × p` matrices. Scalar mode is exactly block mode with `p = 1`.
//!
//! Everything is exact over exact scalars: elimination pivots on the first
//! invertible entry, and over floats on the entry of largest magnitude.

use crate::ring::{Jet2, Scalar};
use std::fmt;
use std::ops::Index;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatError {
    /// The matrix (or the value part, over jets) is not invertible.
    Singular,
    /// A quasideterminant whose deleted submatrix is not invertible.
    Undefined,
}

impl fmt::Display for MatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatError::Singular => write!(f, "singular matrix"),
            MatError::Undefined => write!(f, "quasideterminant undefined"),
        }
    }
}

impl std::error::Error for MatError {}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape/data mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| S::zero())
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Mat<S> {
        Mat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn add(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).add(rhs.at(i, j)))
    }

    pub fn sub(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).sub(rhs.at(i, j)))
    }

    pub fn neg(&self) -> Mat<S> {
        self.map(|v| v.neg())
    }

    pub fn mul(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        let mut out: Mat<S> = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let t = a.mul(rhs.at(k, j));
                    let cur = out.at(i, j).add(&t);
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    /// Entrywise scalar multiple (scalars commute; matrices do not).
    pub fn scale(&self, s: &S) -> Mat<S> {
        self.map(|v| v.mul(s))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    // -- block addressing ---------------------------------------------------

    /// Number of `p × p` blocks per side; panics unless square and divisible.
    pub fn block_dim(&self, p: usize) -> usize {
        assert_eq!(self.rows, self.cols, "blocked view needs a square matrix");
        assert!(p > 0 && self.rows % p == 0, "block size must divide the side");
        self.rows / p
    }

    pub fn block(&self, bi: usize, bj: usize, p: usize) -> Mat<S> {
        Mat::from_fn(p, p, |i, j| self.at(bi * p + i, bj * p + j).clone())
    }

    pub fn set_block(&mut self, bi: usize, bj: usize, b: &Mat<S>) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(bi * b.rows + i, bj * b.cols + j, b.at(i, j).clone());
            }
        }
    }

    /// Assemble from a rectangular grid of equally sized blocks.
    pub fn from_block_grid(grid: &[Vec<Mat<S>>]) -> Mat<S> {
        let br = grid.len();
        assert!(br > 0);
        let bc = grid[0].len();
        let (p, q) = (grid[0][0].rows, grid[0][0].cols);
        let mut out = Mat::zeros(br * p, bc * q);
        for (bi, row) in grid.iter().enumerate() {
            assert_eq!(row.len(), bc, "ragged block grid");
            for (bj, blk) in row.iter().enumerate() {
                assert_eq!((blk.rows, blk.cols), (p, q), "unequal blocks");
                for i in 0..p {
                    for j in 0..q {
                        out.set(bi * p + i, bj * q + j, blk.at(i, j).clone());
                    }
                }
            }
        }
        out
    }

    /// Assemble from a grid whose row heights and column widths may vary,
    /// as long as they are mutually consistent.
    pub fn concat_grid(grid: &[Vec<Mat<S>>]) -> Mat<S> {
        assert!(!grid.is_empty() && !grid[0].is_empty());
        let heights: Vec<usize> = grid.iter().map(|r| r[0].rows).collect();
        let widths: Vec<usize> = grid[0].iter().map(|b| b.cols).collect();
        let mut out = Mat::zeros(heights.iter().sum(), widths.iter().sum());
        let mut r0 = 0;
        for (bi, row) in grid.iter().enumerate() {
            assert_eq!(row.len(), widths.len(), "ragged block grid");
            let mut c0 = 0;
            for (bj, blk) in row.iter().enumerate() {
                assert_eq!(
                    (blk.rows, blk.cols),
                    (heights[bi], widths[bj]),
                    "inconsistent block at grid ({bi},{bj})"
                );
                for i in 0..blk.rows {
                    for j in 0..blk.cols {
                        out.set(r0 + i, c0 + j, blk.at(i, j).clone());
                    }
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        out
    }

    /// Delete block row `bi` and block column `bj`.
    pub fn delete_block(&self, bi: usize, bj: usize, p: usize) -> Mat<S> {
        let n = self.block_dim(p);
        let pick = |b: usize, skip: usize| if b >= skip { b + 1 } else { b };
        Mat::from_fn((n - 1) * p, (n - 1) * p, |i, j| {
            let (bi2, ri) = (pick(i / p, bi), i % p);
            let (bj2, rj) = (pick(j / p, bj), j % p);
            self.at(bi2 * p + ri, bj2 * p + rj).clone()
        })
    }

    /// Block row `bi` with block column `bj` removed (`p × (n-1)p`).
    fn block_row_without(&self, bi: usize, bj: usize, p: usize) -> Mat<S> {
        let n = self.block_dim(p);
        let pick = |b: usize| if b >= bj { b + 1 } else { b };
        Mat::from_fn(p, (n - 1) * p, |i, j| {
            self.at(bi * p + i, pick(j / p) * p + j % p).clone()
        })
    }

    /// Block column `bj` with block row `bi` removed (`(n-1)p × p`).
    fn block_col_without(&self, bj: usize, bi: usize, p: usize) -> Mat<S> {
        let n = self.block_dim(p);
        let pick = |b: usize| if b >= bi { b + 1 } else { b };
        Mat::from_fn((n - 1) * p, p, |i, j| {
            self.at(pick(i / p) * p + i % p, bj * p + j).clone()
        })
    }

    // -- elimination ---------------------------------------------------------

    /// Solve `self * X = rhs` by Gauss-Jordan elimination.
    ///
    /// Exact backends pivot on the first invertible entry in the column;
    /// floats on the entry of largest magnitude above the singularity floor.
    pub fn solve(&self, rhs: &Mat<S>) -> Result<Mat<S>, MatError> {
        assert_eq!(self.rows, self.cols, "solve needs a square matrix");
        assert_eq!(rhs.rows, self.rows, "rhs height mismatch");
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let mut pivot: Option<(usize, f64)> = None;
            for r in col..n {
                let w = a.at(r, col).pivot_weight();
                if w > 0.0 && pivot.map_or(true, |(_, bw)| w > bw) {
                    pivot = Some((r, w));
                }
            }
            let (pr, _) = pivot.ok_or(MatError::Singular)?;
            if pr != col {
                for j in 0..n {
                    a.data.swap(pr * n + j, col * n + j);
                }
                for j in 0..b.cols {
                    b.data.swap(pr * b.cols + j, col * b.cols + j);
                }
            }
            let pinv = a.at(col, col).invert().map_err(|_| MatError::Singular)?;
            for j in 0..n {
                let v = a.at(col, j).mul(&pinv);
                a.set(col, j, v);
            }
            for j in 0..b.cols {
                let v = b.at(col, j).mul(&pinv);
                b.set(col, j, v);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.at(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.at(r, j).sub(&f.mul(a.at(col, j)));
                    a.set(r, j, v);
                }
                for j in 0..b.cols {
                    let v = b.at(r, j).sub(&f.mul(b.at(col, j)));
                    b.set(r, j, v);
                }
            }
        }
        Ok(b)
    }

    pub fn invert(&self) -> Result<Mat<S>, MatError> {
        self.solve(&Mat::identity(self.rows))
    }

    /// Quasideterminant boxed at block position `(bi, bj)`, block size `p`.
    pub fn quasidet(&self, bi: usize, bj: usize, p: usize) -> Result<Mat<S>, MatError> {
        let n = self.block_dim(p);
        assert!(bi < n && bj < n, "box outside matrix");
        let corner = self.block(bi, bj, p);
        if n == 1 {
            return Ok(corner);
        }
        let inv = self
            .delete_block(bi, bj, p)
            .invert()
            .map_err(|_| MatError::Undefined)?;
        let r = self.block_row_without(bi, bj, p);
        let c = self.block_col_without(bj, bi, p);
        Ok(corner.sub(&r.mul(&inv).mul(&c)))
    }
}

impl<S: Scalar> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        self.at(i, j)
    }
}

impl<S: Scalar> fmt::Display for Mat<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.at(i, j))?;
            }
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// Block linear systems
// ---------------------------------------------------------------------------

/// Solve the block system `A x = xi` (`A` an `n×n` grid of `p×p` blocks, `x`
/// and `xi` block columns) by the quasideterminant inversion formula
/// `x_i = Σ_j |A|_{j,i}^{-1} xi_j`, falling back to block Gaussian
/// elimination whenever some required quasideterminant is undefined or
/// singular while the system itself is still solvable.
pub fn solve_nc<S: Scalar>(a: &Mat<S>, xi: &Mat<S>, p: usize) -> Result<Mat<S>, MatError> {
    match solve_nc_quasidet(a, xi, p) {
        Ok(x) => Ok(x),
        Err(_) => solve_nc_elim(a, xi, p),
    }
}

/// The quasideterminant route on its own; errs when any `|A|_{j,i}` is
/// undefined or not invertible.
pub fn solve_nc_quasidet<S: Scalar>(
    a: &Mat<S>,
    xi: &Mat<S>,
    p: usize,
) -> Result<Mat<S>, MatError> {
    let n = a.block_dim(p);
    assert_eq!(xi.rows, n * p, "rhs height mismatch");
    assert_eq!(xi.cols, p, "rhs must be one block column");
    let mut x = Mat::zeros(n * p, p);
    for i in 0..n {
        let mut acc = Mat::zeros(p, p);
        for j in 0..n {
            let q = a.quasidet(j, i, p)?;
            let qinv = q.invert().map_err(|_| MatError::Singular)?;
            let xi_j = Mat::from_fn(p, p, |r, c| xi.at(j * p + r, c).clone());
            acc = acc.add(&qinv.mul(&xi_j));
        }
        x.set_block(i, 0, &acc);
    }
    Ok(x)
}

/// The elimination route on its own.
pub fn solve_nc_elim<S: Scalar>(a: &Mat<S>, xi: &Mat<S>, p: usize) -> Result<Mat<S>, MatError> {
    let n = a.block_dim(p);
    assert_eq!(xi.rows, n * p, "rhs height mismatch");
    a.solve(xi)
}

/// Solve the row system `y A = b` (`y`, `b` block rows of width `n·p`) by
/// transposing to a column system.
pub fn solve_nc_right<S: Scalar>(a: &Mat<S>, b: &Mat<S>, p: usize) -> Result<Mat<S>, MatError> {
    let x = solve_nc(&a.transpose(), &b.transpose(), p)?;
    Ok(x.transpose())
}

/// Quasideterminant of `[[a, col], [row, corner]]` boxed at the corner block.
pub fn bordered_quasidet<S: Scalar>(
    a: &Mat<S>,
    col: &Mat<S>,
    row: &Mat<S>,
    corner: &Mat<S>,
    p: usize,
) -> Result<Mat<S>, MatError> {
    let m = Mat::concat_grid(&[
        vec![a.clone(), col.clone()],
        vec![row.clone(), corner.clone()],
    ]);
    let nb = m.block_dim(p);
    m.quasidet(nb - 1, nb - 1, p)
}

// ---------------------------------------------------------------------------
// Jet coefficient extraction
// ---------------------------------------------------------------------------

/// Value part of a jet matrix.
pub fn jet_value<S: Scalar>(m: &Mat<Jet2<S>>) -> Mat<S> {
    m.map(|v| v.c0.clone())
}

/// First-derivative part of a jet matrix.
pub fn jet_deriv<S: Scalar>(m: &Mat<Jet2<S>>) -> Mat<S> {
    m.map(|v| v.c1.clone())
}

/// Second Taylor coefficient (half the second derivative) of a jet matrix.
pub fn jet_c2<S: Scalar>(m: &Mat<Jet2<S>>) -> Mat<S> {
    m.map(|v| v.c2.clone())
}

/// Embed a plain matrix as a constant jet matrix.
pub fn jet_embed<S: Scalar>(m: &Mat<S>) -> Mat<Jet2<S>> {
    m.map(|v| Jet2::constant(v.clone()))
}
