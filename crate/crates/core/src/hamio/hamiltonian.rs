use nalgebra::DMatrix;

use super::HamIoError;
use crate::scalar::Real;

/// Second-quantized active-space Hamiltonian over `norb` spatial orbitals.
///
/// Holds the constant `e0`, one-body integrals `h[p][r]` and two-body
/// integrals `(pr|qs)` in chemists' notation. The two-body tensor is stored
/// densely with all eight permutational images populated.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterHamiltonian<T> {
    norb: usize,
    n_alpha: usize,
    n_beta: usize,
    e0: T,
    h: DMatrix<T>,
    eri: Vec<T>,
}

impl<T: Real> ClusterHamiltonian<T> {
    /// An all-zero Hamiltonian with the given sector.
    pub fn zeros(norb: usize, n_alpha: usize, n_beta: usize) -> Result<Self, HamIoError> {
        check_sector(norb, n_alpha, n_beta)?;
        Ok(Self {
            norb,
            n_alpha,
            n_beta,
            e0: T::zero(),
            h: DMatrix::zeros(norb, norb),
            eri: vec![T::zero(); norb.pow(4)],
        })
    }

    /// Builds a Hamiltonian from a dense `eri` tensor (row-major `p,r,q,s`),
    /// validating the one-body symmetry and the eight-fold two-body symmetry.
    pub fn new(
        n_alpha: usize,
        n_beta: usize,
        e0: T,
        h: DMatrix<T>,
        eri: Vec<T>,
    ) -> Result<Self, HamIoError> {
        let norb = h.nrows();
        if h.ncols() != norb || eri.len() != norb.pow(4) {
            return Err(HamIoError::Validation {
                invariant: "dimensions",
                detail: format!(
                    "h is {}x{}, eri has {} entries",
                    h.nrows(),
                    h.ncols(),
                    eri.len()
                ),
            });
        }
        check_sector(norb, n_alpha, n_beta)?;
        let ham = Self {
            norb,
            n_alpha,
            n_beta,
            e0,
            h,
            eri,
        };
        ham.validate_symmetry(T::symmetry_floor())?;
        Ok(ham)
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn n_elec(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    pub fn e0(&self) -> T {
        self.e0
    }

    pub fn set_e0(&mut self, e0: T) {
        self.e0 = e0;
    }

    pub fn h(&self) -> &DMatrix<T> {
        &self.h
    }

    #[inline]
    pub fn h_elem(&self, p: usize, r: usize) -> T {
        self.h[(p, r)]
    }

    /// Sets `h[p][r]` and `h[r][p]`.
    pub fn set_h(&mut self, p: usize, r: usize, value: T) {
        self.h[(p, r)] = value;
        self.h[(r, p)] = value;
    }

    #[inline]
    fn idx(&self, p: usize, r: usize, q: usize, s: usize) -> usize {
        ((p * self.norb + r) * self.norb + q) * self.norb + s
    }

    /// `(pr|qs)` in chemists' notation.
    #[inline]
    pub fn eri(&self, p: usize, r: usize, q: usize, s: usize) -> T {
        self.eri[self.idx(p, r, q, s)]
    }

    /// Dense two-body tensor, row-major over `p, r, q, s`.
    pub fn eri_slice(&self) -> &[T] {
        &self.eri
    }

    /// Sets `(pr|qs)` together with its seven symmetry images.
    pub fn set_eri(&mut self, p: usize, r: usize, q: usize, s: usize, value: T) {
        for (a, b, c, d) in eri_images(p, r, q, s) {
            let i = self.idx(a, b, c, d);
            self.eri[i] = value;
        }
    }

    /// Checks `h = hᵀ` and the eight-fold `eri` symmetry to `tol`.
    pub fn validate_symmetry(&self, tol: T) -> Result<(), HamIoError> {
        let n = self.norb;
        for p in 0..n {
            for r in 0..p {
                if (self.h[(p, r)] - self.h[(r, p)]).abs() > tol {
                    return Err(HamIoError::Validation {
                        invariant: "one-body symmetry",
                        detail: format!("h[{p}][{r}] != h[{r}][{p}]"),
                    });
                }
            }
        }
        for p in 0..n {
            for r in 0..n {
                for q in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, r, q, s);
                        for (a, b, c, d) in eri_images(p, r, q, s) {
                            if (self.eri(a, b, c, d) - v).abs() > tol {
                                return Err(HamIoError::Validation {
                                    invariant: "two-body symmetry",
                                    detail: format!("({p}{r}|{q}{s}) != ({a}{b}|{c}{d})"),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Closed-shell Fock matrix built from the lowest `n_alpha` orbitals.
    ///
    /// Requires `n_alpha == n_beta`; in a canonical orbital basis its diagonal
    /// holds the orbital energies.
    pub fn reference_fock(&self) -> DMatrix<T> {
        let n = self.norb;
        let nocc = self.n_alpha.min(self.n_beta);
        let two = T::lit(2.0);
        DMatrix::from_fn(n, n, |p, q| {
            let mut f = self.h[(p, q)];
            for i in 0..nocc {
                f += two * self.eri(p, q, i, i) - self.eri(p, i, i, q);
            }
            f
        })
    }

    /// Converts every scalar to another precision.
    pub fn cast<U: Real>(&self) -> ClusterHamiltonian<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        ClusterHamiltonian {
            norb: self.norb,
            n_alpha: self.n_alpha,
            n_beta: self.n_beta,
            e0: c(self.e0),
            h: self.h.map(c),
            eri: self.eri.iter().map(|&x| c(x)).collect(),
        }
    }

    /// Same integrals, different electron counts.
    pub fn with_sector(&self, n_alpha: usize, n_beta: usize) -> Result<Self, HamIoError> {
        check_sector(self.norb, n_alpha, n_beta)?;
        let mut out = self.clone();
        out.n_alpha = n_alpha;
        out.n_beta = n_beta;
        Ok(out)
    }
}

fn check_sector(norb: usize, n_alpha: usize, n_beta: usize) -> Result<(), HamIoError> {
    if n_alpha > norb || n_beta > norb {
        return Err(HamIoError::Validation {
            invariant: "electron count",
            detail: format!("n_alpha={n_alpha}, n_beta={n_beta} exceed {norb} orbitals"),
        });
    }
    Ok(())
}

/// The eight index permutations under which real `(pr|qs)` is invariant.
pub fn eri_images(
    p: usize,
    r: usize,
    q: usize,
    s: usize,
) -> [(usize, usize, usize, usize); 8] {
    [
        (p, r, q, s),
        (r, p, q, s),
        (p, r, s, q),
        (r, p, s, q),
        (q, s, p, r),
        (s, q, p, r),
        (q, s, r, p),
        (s, q, r, p),
    ]
}

/// Canonical representative of the symmetry class of `(pr|qs)`:
/// `p >= r`, `q >= s` and pair `(p,r) >= (q,s)`.
pub fn canonical_eri_index(
    p: usize,
    r: usize,
    q: usize,
    s: usize,
) -> (usize, usize, usize, usize) {
    let (p, r) = if p >= r { (p, r) } else { (r, p) };
    let (q, s) = if q >= s { (q, s) } else { (s, q) };
    if (p, r) >= (q, s) {
        (p, r, q, s)
    } else {
        (q, s, p, r)
    }
}
