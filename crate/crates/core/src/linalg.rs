//! Small dense helpers over `faer` shared by the field sampler and the
//! penalized fitting engine.

use faer::linalg::solvers::{DenseSolveCore, Llt, Solve};
use faer::{Col, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Diagonal jitter sequence tried in order when a Cholesky factorization
/// fails: none first, then 1e-10 escalating by a factor of 10 up to 1e-4.
pub const JITTER_LADDER: [f64; 8] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Cholesky factor of a symmetric positive definite matrix, with the jitter
/// that had to be added to its diagonal.
pub struct Cholesky {
    llt: Llt<f64>,
    pub jitter: f64,
}

impl Cholesky {
    pub fn factor(a: MatRef<'_, f64>, what: &'static str) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("{what}: matrix is not square")));
        }
        if a.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::Domain(format!("{what}: non-finite entry")));
        }
        for &jitter in JITTER_LADDER.iter() {
            let attempt = if jitter == 0.0 {
                a.llt(Side::Lower)
            } else {
                let mut shifted = a.to_owned();
                for i in 0..n {
                    shifted[(i, i)] += jitter;
                }
                shifted.llt(Side::Lower)
            };
            if let Ok(llt) = attempt {
                return Ok(Self { llt, jitter });
            }
        }
        Err(Error::Factorization {
            what,
            n,
            max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    pub fn l(&self) -> MatRef<'_, f64> {
        self.llt.L()
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.llt.solve(&rhs);
        x.iter().copied().collect()
    }

    pub fn solve_mat(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        self.llt.solve(b)
    }

    pub fn inverse(&self) -> Mat<f64> {
        let mut inv = self.llt.inverse();
        symmetrize(&mut inv);
        inv
    }
}

/// Replaces `a` by `(a + aᵀ) / 2`.
pub fn symmetrize(a: &mut Mat<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Symmetric eigendecomposition with eigenvalues in ascending order.
///
/// Each eigenvector is flipped so that its largest-magnitude entry is
/// positive (first such entry on ties), which makes the result independent
/// of the sign choices of the underlying solver.
pub fn sym_eigen(a: MatRef<'_, f64>, what: &'static str) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| {
        Error::SingularDesign(format!("{what}: eigendecomposition did not converge"))
    })?;
    let n = a.nrows();
    let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..n {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..n {
            let v = vectors[(i, j)].abs();
            if v > best_abs {
                best_abs = v;
                best = i;
            }
        }
        if vectors[(best, j)] < 0.0 {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    Ok((values, vectors))
}

/// `Xᵀ diag(w) X`, or `XᵀX` when `w` is `None`.
pub fn gram(x: MatRef<'_, f64>, w: Option<&[f64]>) -> Mat<f64> {
    use faer::linalg::matmul::triangular::{matmul, BlockStructure};
    let scaled;
    let xs = match w {
        None => x,
        Some(w) => {
            scaled = Mat::<f64>::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * w[i].sqrt());
            scaled.as_ref()
        }
    };
    let p = x.ncols();
    let mut g = Mat::<f64>::zeros(p, p);
    // lower triangle only, then mirrored
    matmul(
        g.as_mut(),
        BlockStructure::TriangularLower,
        faer::Accum::Replace,
        xs.transpose(),
        BlockStructure::Rectangular,
        xs,
        BlockStructure::Rectangular,
        1.0,
        faer::Par::Seq,
    );
    for j in 0..p {
        for i in (j + 1)..p {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

/// `Xᵀ diag(w) v`.
pub fn xt_wv(x: MatRef<'_, f64>, w: Option<&[f64]>, v: &[f64]) -> Vec<f64> {
    let col = Col::<f64>::from_fn(v.len(), |i| match w {
        Some(w) => w[i] * v[i],
        None => v[i],
    });
    let out = x.transpose() * &col;
    out.iter().copied().collect()
}

/// `X b`.
pub fn mat_vec(x: MatRef<'_, f64>, b: &[f64]) -> Vec<f64> {
    let col = Col::<f64>::from_fn(b.len(), |i| b[i]);
    let out = x * &col;
    out.iter().copied().collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
