use num_complex::Complex;
use rayon::prelude::*;

use super::{LucjError, LucjParams};
use crate::detcore::{enumerate_strings, sector_dimension, string_parity, Determinant, Sector};
use crate::scalar::Real;

/// Default cap on the statevector length.
pub const DEFAULT_STATEVECTOR_BUDGET: usize = 4_000_000;

/// Amplitudes over a full sector, stored as an `alpha × beta` string matrix
/// in the determinant order of `enumerate_space`.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector<T> {
    pub sector: Sector,
    pub alphas: Vec<u64>,
    pub betas: Vec<u64>,
    pub amps: Vec<Complex<T>>,
}

impl<T: Real> Statevector<T> {
    /// Unit amplitude on one determinant of the sector.
    pub fn basis_state(sector: Sector, d: Determinant) -> Result<Self, LucjError> {
        let alphas = enumerate_strings(sector.norb, sector.n_alpha).map_err(|e| LucjError::Domain(e.to_string()))?;
        let betas = enumerate_strings(sector.norb, sector.n_beta).map_err(|e| LucjError::Domain(e.to_string()))?;
        let ia = alphas.binary_search(&d.alpha).map_err(|_| LucjError::Domain("determinant outside sector".into()))?;
        let ib = betas.binary_search(&d.beta).map_err(|_| LucjError::Domain("determinant outside sector".into()))?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); alphas.len() * betas.len()];
        amps[ia * betas.len() + ib] = Complex::new(T::one(), T::zero());
        Ok(Self {
            sector,
            alphas,
            betas,
            amps,
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn determinant(&self, index: usize) -> Determinant {
        let nb = self.betas.len();
        Determinant::new(self.alphas[index / nb], self.betas[index % nb])
    }

    pub fn amplitude(&self, d: &Determinant) -> Complex<T> {
        let nb = self.betas.len();
        match (self.alphas.binary_search(&d.alpha), self.betas.binary_search(&d.beta)) {
            (Ok(a), Ok(b)) => self.amps[a * nb + b],
            _ => Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Born probabilities in determinant order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr().to_f64_lossy()).collect()
    }

    /// `⟨N̂_α⟩, ⟨N̂_β⟩`.
    pub fn spin_populations(&self) -> (T, T) {
        let mut na = T::zero();
        let mut nb = T::zero();
        for (i, c) in self.amps.iter().enumerate() {
            let d = self.determinant(i);
            let w = c.norm_sqr();
            na += w * T::lit(d.n_alpha() as f64);
            nb += w * T::lit(d.n_beta() as f64);
        }
        (na, nb)
    }
}

/// Rows `(J, ⟨I|K̂_σ|J⟩)` of a one-body operator over one spin's strings.
fn one_body_table<T: Real>(strings: &[u64], norb: usize, k: &nalgebra::DMatrix<T>) -> Vec<Vec<(u32, T)>> {
    strings
        .iter()
        .enumerate()
        .map(|(ii, &s)| {
            let mut row = Vec::new();
            let mut diag = T::zero();
            for p in (0..norb).filter(|&p| s >> p & 1 == 1) {
                diag += k[(p, p)];
                for r in (0..norb).filter(|&r| s >> r & 1 == 0) {
                    let v = k[(p, r)];
                    if v == T::zero() {
                        continue;
                    }
                    let j = s ^ (1 << p) ^ (1 << r);
                    let jj = strings.binary_search(&j).expect("sector closed under singles");
                    row.push((jj as u32, v * T::lit(string_parity(j, r, p))));
                }
            }
            if diag != T::zero() {
                row.push((ii as u32, diag));
            }
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Axis {
    Alpha,
    Beta,
}

/// `y = Op x` along one spin axis of the `na × nb` amplitude matrix.
fn apply_table<T: Real>(
    table: &[Vec<(u32, T)>],
    axis: Axis,
    nb: usize,
    x: &[Complex<T>],
    y: &mut [Complex<T>],
) {
    match axis {
        Axis::Alpha => y.par_chunks_mut(nb).enumerate().for_each(|(ia, yrow)| {
            yrow.iter_mut().for_each(|v| *v = Complex::new(T::zero(), T::zero()));
            for &(ja, v) in &table[ia] {
                let xrow = &x[ja as usize * nb..(ja as usize + 1) * nb];
                for (yv, xv) in yrow.iter_mut().zip(xrow) {
                    *yv += xv * v;
                }
            }
        }),
        Axis::Beta => y
            .par_chunks_mut(nb)
            .zip(x.par_chunks(nb))
            .for_each(|(yrow, xrow)| {
                for (ib, yv) in yrow.iter_mut().enumerate() {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for &(jb, v) in &table[ib] {
                        acc += xrow[jb as usize] * v;
                    }
                    *yv = acc;
                }
            }),
    }
}

/// `x ← exp(sign · Op) x` by a scaled Taylor series.
fn apply_exp<T: Real>(table: &[Vec<(u32, T)>], axis: Axis, nb: usize, sign: T, x: &mut Vec<Complex<T>>) {
    let bound = table
        .iter()
        .map(|r| r.iter().map(|e| e.1.abs()).sum::<T>())
        .fold(T::zero(), |a, b| a.max(b));
    if bound == T::zero() {
        return;
    }
    let steps = bound.ceil().to_f64_lossy().max(1.0) as usize;
    let h = sign / T::lit(steps as f64);
    let eps = T::default_epsilon();
    let mut term = vec![Complex::new(T::zero(), T::zero()); x.len()];
    let mut next = term.clone();
    for _ in 0..steps {
        term.copy_from_slice(x);
        for k in 1..=60 {
            apply_table(table, axis, nb, &term, &mut next);
            let f = h / T::lit(k as f64);
            let mut size = T::zero();
            for (xi, ni) in x.iter_mut().zip(next.iter_mut()) {
                *ni *= f;
                *xi += *ni;
                size = size.max(ni.norm_sqr());
            }
            std::mem::swap(&mut term, &mut next);
            if size.sqrt() < eps * T::lit(1e-2) {
                break;
            }
        }
    }
}

/// Exact LUCJ state `Π_μ e^{K̂_μ} e^{iĴ_μ} e^{−K̂_μ} |x_RHF⟩` over the full
/// sector; the last layer acts first.
pub fn prepare_lucj_state<T: Real>(
    sector: Sector,
    params: &LucjParams<T>,
    budget: usize,
) -> Result<Statevector<T>, LucjError> {
    let dim = sector_dimension(&sector);
    if dim > budget as u128 {
        return Err(LucjError::Capacity { dim, budget });
    }
    if params.norb != sector.norb {
        return Err(LucjError::Domain(format!(
            "parameters for {} orbitals, sector has {}",
            params.norb, sector.norb
        )));
    }
    let mut psi = Statevector::basis_state(sector, sector.hartree_fock())?;
    let nb = psi.betas.len();
    let n = sector.norb;
    let occ: Vec<Vec<usize>> = (0..psi.dim())
        .map(|i| {
            let d = psi.determinant(i);
            (0..n)
                .filter(|&p| d.alpha >> p & 1 == 1)
                .chain((0..n).filter(|&p| d.beta >> p & 1 == 1).map(|p| p + n))
                .collect()
        })
        .collect();
    for layer in params.layers.iter().rev() {
        let ta = one_body_table(&psi.alphas, n, &layer.k);
        let tb = one_body_table(&psi.betas, n, &layer.k);
        apply_exp(&ta, Axis::Alpha, nb, -T::one(), &mut psi.amps);
        apply_exp(&tb, Axis::Beta, nb, -T::one(), &mut psi.amps);
        psi.amps.par_iter_mut().zip(occ.par_iter()).for_each(|(c, o)| {
            let mut phi = T::zero();
            for &a in o {
                for &b in o {
                    phi += layer.j[(a, b)];
                }
            }
            *c *= Complex::new(phi.cos(), phi.sin());
        });
        apply_exp(&ta, Axis::Alpha, nb, T::one(), &mut psi.amps);
        apply_exp(&tb, Axis::Beta, nb, T::one(), &mut psi.amps);
    }
    Ok(psi)
}
