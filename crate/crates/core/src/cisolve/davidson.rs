use nalgebra::{DMatrix, DVector};

use super::{CiError, HamiltonianOperator};
use crate::scalar::{tol, Real};

/// Subspaces up to this dimension are diagonalized densely.
pub const DENSE_FALLBACK_DIM: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DavidsonOptions {
    /// Residual-norm convergence threshold.
    pub tol: f64,
    pub max_iter: usize,
    /// Krylov space size before a thick restart.
    pub max_subspace: usize,
    pub dense_fallback: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            max_subspace: 40,
            dense_fallback: DENSE_FALLBACK_DIM,
        }
    }
}

/// Fixes the eigenvector sign so its largest-magnitude entry is positive.
fn fix_sign<T: Real>(v: &mut DVector<T>) {
    if v.is_empty() {
        return;
    }
    let k = v.iamax();
    if v[k] < T::zero() {
        v.neg_mut();
    }
}

/// Lowest eigenpair of a dense symmetric matrix.
pub fn dense_ground_state<T: Real>(h: &DMatrix<T>) -> (T, DVector<T>) {
    let eig = h.clone().symmetric_eigen();
    let mut k = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[k] {
            k = i;
        }
    }
    let mut v = eig.eigenvectors.column(k).into_owned();
    v /= v.norm();
    fix_sign(&mut v);
    (eig.eigenvalues[k], v)
}

/// Orthogonalizes `t` against the columns in `basis` (two passes) and
/// returns its remaining norm.
fn orthogonalize<T: Real>(t: &mut DVector<T>, basis: &[DVector<T>]) -> T {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(t);
            t.axpy(-c, b, T::one());
        }
    }
    t.norm()
}

/// Lowest eigenvalue and eigenvector of `op`.
///
/// Operators up to `opts.dense_fallback` in dimension are diagonalized
/// densely. Otherwise a Davidson iteration with diagonal preconditioning
/// starts from `guess`, or from the unit vector on the lowest diagonal
/// entry, and targets the lowest Ritz pair.
pub fn davidson_ground_state<T: Real, O: HamiltonianOperator<T> + ?Sized>(
    op: &O,
    guess: Option<&DVector<T>>,
    opts: &DavidsonOptions,
) -> Result<(T, DVector<T>), CiError> {
    let n = op.dim();
    if n == 0 {
        return Err(CiError::EmptySubspace);
    }
    if n <= opts.dense_fallback {
        return Ok(dense_ground_state(&op.to_dense()));
    }
    let diag = op.diagonal();
    let threshold: T = tol(opts.tol);
    let tiny = T::default_epsilon() * T::lit(1e3);

    let mut v0 = match guess {
        Some(g) if g.len() == n && g.norm() > T::zero() => g.clone(),
        _ => {
            let mut k = 0;
            for i in 1..n {
                if diag[i] < diag[k] {
                    k = i;
                }
            }
            let mut e = DVector::zeros(n);
            e[k] = T::one();
            e
        }
    };
    v0 /= v0.norm();

    let apply = |v: &DVector<T>| {
        let mut out = DVector::zeros(n);
        op.apply(v.as_slice(), out.as_mut_slice());
        out
    };

    let mut vs: Vec<DVector<T>> = vec![v0.clone()];
    let mut avs: Vec<DVector<T>> = vec![apply(&v0)];
    let mut prev: Option<DVector<T>> = None;
    let mut residual = T::max_value().unwrap_or(T::one());

    for _iter in 0..opts.max_iter {
        let k = vs.len();
        let g = DMatrix::from_fn(k, k, |i, j| {
            (vs[i].dot(&avs[j]) + vs[j].dot(&avs[i])) * T::lit(0.5)
        });
        let (theta, s) = dense_ground_state(&g);
        let mut x = DVector::zeros(n);
        let mut ax = DVector::zeros(n);
        for i in 0..k {
            x.axpy(s[i], &vs[i], T::one());
            ax.axpy(s[i], &avs[i], T::one());
        }
        let r = &ax - &x * theta;
        residual = r.norm();
        if residual < threshold {
            let nx = x.norm();
            x /= nx;
            fix_sign(&mut x);
            return Ok((theta, x));
        }

        if k >= opts.max_subspace {
            // Thick restart on the current and previous Ritz vectors, with
            // products recomputed so rounding does not accumulate.
            let mut nv: Vec<DVector<T>> = vec![&x / x.norm()];
            if let Some(px) = prev.take() {
                let mut t = px;
                if orthogonalize(&mut t, &nv) > tiny {
                    let nt = t.norm();
                    nv.push(t / nt);
                }
            }
            avs = nv.iter().map(&apply).collect();
            vs = nv;
        }
        prev = Some(x.clone());

        let mut t = DVector::from_fn(n, |i, _| {
            let mut den = diag[i] - theta;
            if den.abs() < T::lit(1e-8) {
                den = if den < T::zero() { T::lit(-1e-8) } else { T::lit(1e-8) };
            }
            r[i] / den
        });
        let mut nt = orthogonalize(&mut t, &vs);
        if nt <= tiny {
            t = r.clone();
            nt = orthogonalize(&mut t, &vs);
            if nt <= tiny {
                // The search space is invariant; the Ritz pair is exact.
                x /= x.norm();
                fix_sign(&mut x);
                return Ok((theta, x));
            }
        }
        t /= nt;
        let at = apply(&t);
        vs.push(t);
        avs.push(at);
    }
    Err(CiError::Convergence {
        iterations: opts.max_iter,
        residual: residual.to_f64_lossy(),
    })
}
