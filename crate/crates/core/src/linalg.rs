//! Dense linear algebra shared by the engines: jittered Cholesky and the
//! penalized normal equations (X'X + diag(w)) β = X'y, solved either in the
//! p-dimensional primal form or through the n-dimensional Woodbury identity.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER_TRIES: usize = 9;

/// Cholesky factor of `a`, adding an escalating multiple of the mean diagonal
/// when the plain factorization fails. Returns the factor and the jitter used.
pub fn cholesky_jittered(a: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = a.nrows();
    let scale = (a.diagonal().iter().map(|v| v.abs()).sum::<f64>() / n.max(1) as f64).max(f64::MIN_POSITIVE);
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = 1e-12 * scale;
    for _ in 0..JITTER_TRIES {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(b) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    let min_diag = a.diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
    Err(Error::Numerical(format!(
        "Cholesky failed for {n}x{n} matrix after jitter up to {:e} (mean |diag| {scale:e}, min diag {min_diag:e})",
        jitter / 10.0
    )))
}

/// Solution of the penalized normal equations together with the diagonal of
/// (X'X + diag(w))⁻¹ and, when requested and cheap, the full inverse.
#[derive(Debug, Clone)]
pub struct PenalizedSolution {
    pub solution: DVector<f64>,
    pub inverse_diag: DVector<f64>,
    pub inverse: Option<DMatrix<f64>>,
}

/// Solve (X'X + diag(w)) β = X'y. Uses the primal p×p system when p ≤ n and
/// the Woodbury form with I + X diag(1/w) X' otherwise.
pub fn penalized_solve(
    x: &DMatrix<f64>,
    xtx: &DMatrix<f64>,
    xty: &DVector<f64>,
    w: &DVector<f64>,
    want_inverse: bool,
) -> Result<PenalizedSolution> {
    let (n, p) = x.shape();
    if p <= n {
        primal_solve(xtx, xty, w, want_inverse)
    } else {
        let d = w.map(|v| 1.0 / v.max(1e-300));
        dual_solve(x, xty, &d)
    }
}

fn primal_solve(xtx: &DMatrix<f64>, xty: &DVector<f64>, w: &DVector<f64>, want_inverse: bool) -> Result<PenalizedSolution> {
    let mut a = xtx.clone();
    for j in 0..a.nrows() {
        a[(j, j)] += w[j];
    }
    let (chol, _) = cholesky_jittered(a)?;
    let solution = chol.solve(xty);
    let inv = chol.inverse();
    let inverse_diag = inv.diagonal();
    Ok(PenalizedSolution {
        solution,
        inverse_diag,
        inverse: want_inverse.then_some(inv),
    })
}

/// I + X diag(d) X'.
pub fn dual_matrix(x: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut xd = x.clone();
    for (j, mut col) in xd.column_iter_mut().enumerate() {
        col *= d[j];
    }
    let mut m = xd * x.transpose();
    for i in 0..m.nrows() {
        m[(i, i)] += 1.0;
    }
    m
}

fn dual_solve(x: &DMatrix<f64>, xty: &DVector<f64>, d: &DVector<f64>) -> Result<PenalizedSolution> {
    let (chol, _) = cholesky_jittered(dual_matrix(x, d))?;
    // A⁻¹ = D − D X' M⁻¹ X D
    let s = d.component_mul(xty);
    let z = chol.solve(&(x * &s));
    let solution = &s - d.component_mul(&(x.transpose() * z));
    let l = chol.l();
    let zx = l
        .solve_lower_triangular(x)
        .ok_or_else(|| Error::Numerical("triangular solve failed in Woodbury diagonal".into()))?;
    let inverse_diag = DVector::from_iterator(
        d.len(),
        zx.column_iter().enumerate().map(|(j, c)| {
            let v = d[j] * (1.0 - d[j] * c.norm_squared());
            v.max(0.0)
        }),
    );
    Ok(PenalizedSolution {
        solution,
        inverse_diag,
        inverse: None,
    })
}
