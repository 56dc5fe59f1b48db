use nalgebra::{DMatrix, DVector};

use super::{AmplitudeSet, LucjError};
use crate::scalar::{tol, Real};

/// Largest tolerated violation of the pair symmetry of t2.
const PAIR_SYMMETRY_TOL: f64 = 1e-10;

/// One term: an orthogonal orbital rotation and a symmetric Coulomb matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DfTerm<T> {
    /// `M × M` orthogonal, rows indexed by orbital.
    pub u: DMatrix<T>,
    /// `M × M` symmetric.
    pub j: DMatrix<T>,
    /// Eigenvalue of the `(ia)×(jb)` amplitude matrix this term came from.
    pub eigenvalue: T,
}

/// `t_ij^ab = Σ_μ Σ_pq J^μ_pq U^μ_ap U^μ_ip U^μ_bq U^μ_jq`, orbitals
/// numbered occupied first.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleFactorization<T> {
    pub n_occ: usize,
    pub n_virt: usize,
    /// Ordered by descending `|eigenvalue|`.
    pub terms: Vec<DfTerm<T>>,
}

impl<T: Real> DoubleFactorization<T> {
    pub fn norb(&self) -> usize {
        self.n_occ + self.n_virt
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }
}

/// Column permutation and sign gauge bringing `u` close to the identity:
/// greedy assignment of largest entries to the diagonal, positive diagonal,
/// and determinant `+1`. Applies the same permutation to `w`.
fn regauge<T: Real>(u: &mut DMatrix<T>, w: &mut DVector<T>) {
    let n = u.nrows();
    let mut perm = vec![usize::MAX; n];
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; n];
    for _ in 0..n {
        let mut best = (0, 0, -T::one());
        for r in (0..n).filter(|&r| !row_used[r]) {
            for c in (0..n).filter(|&c| !col_used[c]) {
                if u[(r, c)].abs() > best.2 {
                    best = (r, c, u[(r, c)].abs());
                }
            }
        }
        perm[best.0] = best.1;
        row_used[best.0] = true;
        col_used[best.1] = true;
    }
    let old_u = u.clone();
    let old_w = w.clone();
    for (r, &c) in perm.iter().enumerate() {
        let sign = if old_u[(r, c)] < T::zero() { -T::one() } else { T::one() };
        u.set_column(r, &(old_u.column(c) * sign));
        w[r] = old_w[c];
    }
    if n > 0 && u.determinant() < T::zero() {
        let mut k = 0;
        for i in 1..n {
            if u[(i, i)].abs() < u[(k, k)].abs() {
                k = i;
            }
        }
        let flipped = -u.column(k);
        u.set_column(k, &flipped);
    }
}

/// Exact double factorization of t2 through the eigendecomposition of the
/// symmetric `(ia)×(jb)` amplitude matrix.
///
/// Each eigenpair `(λ, y)` gives the symmetric matrix `X` with off-diagonal
/// blocks `X_ia = X_ai = y_ia`; with `X = U diag(w) Uᵀ` the term is
/// `(U, λ w wᵀ)`. Eigenvalues below the precision floor are dropped.
pub fn double_factorize_t2<T: Real>(
    amps: &AmplitudeSet<T>,
) -> Result<DoubleFactorization<T>, LucjError> {
    let (no, nv) = (amps.n_occ, amps.n_virt);
    let n = no + nv;
    let asym = amps.pair_asymmetry();
    if asym > tol::<T>(PAIR_SYMMETRY_TOL) {
        return Err(LucjError::Asymmetric {
            max_dev: asym.to_f64_lossy(),
        });
    }
    let dim = no * nv;
    let tm = DMatrix::from_fn(dim, dim, |ia, jb| {
        let (i, a) = (ia / nv, ia % nv);
        let (j, b) = (jb / nv, jb % nv);
        (amps.t2(i, j, a, b) + amps.t2(j, i, b, a)) * T::lit(0.5)
    });
    let mut terms = Vec::new();
    if dim > 0 {
        let eig = tm.symmetric_eigen();
        let scale = eig.eigenvalues.amax();
        let floor = T::default_epsilon() * T::lit(64.0) * scale;
        let mut order: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k].abs() > floor).collect();
        order.sort_by(|&x, &y| {
            eig.eigenvalues[y]
                .abs()
                .partial_cmp(&eig.eigenvalues[x].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.cmp(&y))
        });
        for k in order {
            let lambda = eig.eigenvalues[k];
            let y = eig.eigenvectors.column(k);
            let mut x = DMatrix::zeros(n, n);
            for i in 0..no {
                for a in 0..nv {
                    x[(i, no + a)] = y[i * nv + a];
                    x[(no + a, i)] = y[i * nv + a];
                }
            }
            let xe = x.symmetric_eigen();
            let mut u = xe.eigenvectors;
            let mut w = xe.eigenvalues;
            regauge(&mut u, &mut w);
            let j = &w * w.transpose() * lambda;
            terms.push(DfTerm {
                u,
                j,
                eigenvalue: lambda,
            });
        }
    }
    Ok(DoubleFactorization {
        n_occ: no,
        n_virt: nv,
        terms,
    })
}

/// `t̄` from the leading `n_terms` terms (all when `None`), in the layout
/// of `AmplitudeSet::t2`.
pub fn reconstruct_t2<T: Real>(df: &DoubleFactorization<T>, n_terms: Option<usize>) -> Vec<T> {
    let (no, nv) = (df.n_occ, df.n_virt);
    let n = no + nv;
    let mut out = vec![T::zero(); no * no * nv * nv];
    let take = n_terms.unwrap_or(df.terms.len()).min(df.terms.len());
    for term in &df.terms[..take] {
        // P_(ia),p = U_ap U_ip
        let pm = DMatrix::from_fn(no * nv, n, |ia, p| {
            let (i, a) = (ia / nv, ia % nv);
            term.u[(no + a, p)] * term.u[(i, p)]
        });
        let tb = &pm * &term.j * pm.transpose();
        for i in 0..no {
            for j in 0..no {
                for a in 0..nv {
                    for b in 0..nv {
                        out[((i * no + j) * nv + a) * nv + b] += tb[(i * nv + a, j * nv + b)];
                    }
                }
            }
        }
    }
    out
}

/// `χ = ½ Σ |t̄ − t|²` for a truncation to `n_terms` terms.
pub fn chi<T: Real>(df: &DoubleFactorization<T>, amps: &AmplitudeSet<T>, n_terms: Option<usize>) -> T {
    let tb = reconstruct_t2(df, n_terms);
    let s: T = tb
        .iter()
        .zip(&amps.t2)
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum();
    s * T::lit(0.5)
}
