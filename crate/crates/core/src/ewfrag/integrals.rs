use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::scalar::Real;

/// One quarter step: contracts the last index of a row-major
/// `d0 × d1 × d2 × n` tensor with `c` (`n × m`) and rotates it to the front,
/// giving `m × d0 × d1 × d2`.
fn quarter<T: Real>(t: &[T], dims: [usize; 3], n: usize, c: &DMatrix<T>) -> Vec<T> {
    let m = c.ncols();
    let inner = dims[0] * dims[1] * dims[2];
    let mut out = vec![T::zero(); m * inner];
    out.par_chunks_mut(inner).enumerate().for_each(|(l, block)| {
        for (k, v) in block.iter_mut().enumerate() {
            let row = &t[k * n..(k + 1) * n];
            let mut acc = T::zero();
            for (s, &x) in row.iter().enumerate() {
                acc += x * c[(s, l)];
            }
            *v = acc;
        }
    });
    out
}

/// `(pr|qs)` over four coefficient sets: row-major tensor of shape
/// `c[0].ncols() × … × c[3].ncols()`.
pub fn transform_eri4<T: Real>(eri: &[T], n: usize, c: [&DMatrix<T>; 4]) -> Vec<T> {
    assert_eq!(eri.len(), n.pow(4));
    let m: Vec<usize> = c.iter().map(|x| x.ncols()).collect();
    // each step contracts the trailing index and moves the new one first
    let t = quarter(eri, [n, n, n], n, c[3]);
    let t = quarter(&t, [m[3], n, n], n, c[2]);
    let t = quarter(&t, [m[2], m[3], n], n, c[1]);
    quarter(&t, [m[1], m[2], m[3]], n, c[0])
}

pub fn transform_eri<T: Real>(eri: &[T], n: usize, c: &DMatrix<T>) -> Vec<T> {
    transform_eri4(eri, n, [c, c, c, c])
}

/// Coulomb and exchange matrices of a density: `J_pq = Σ (pq|rs) D_rs`,
/// `K_pq = Σ (pr|qs) D_rs`.
pub fn coulomb_exchange<T: Real>(eri: &[T], n: usize, d: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let mut j = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            let mut sj = T::zero();
            let mut sk = T::zero();
            for r in 0..n {
                for s in 0..n {
                    let drs = d[(r, s)];
                    if drs == T::zero() {
                        continue;
                    }
                    sj += eri[((p * n + q) * n + r) * n + s] * drs;
                    sk += eri[((p * n + r) * n + q) * n + s] * drs;
                }
            }
            j[(p, q)] = sj;
            k[(p, q)] = sk;
        }
    }
    (j, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_index_transform_matches_direct_sum() {
        let n = 3;
        let eri: Vec<f64> = (0..81).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let c1 = DMatrix::from_fn(n, 2, |i, j| (i + 2 * j) as f64 * 0.3 - 0.4);
        let c2 = DMatrix::from_fn(n, 1, |i, _| i as f64 - 1.0);
        let c3 = DMatrix::from_fn(n, 3, |i, j| ((i * j) % 3) as f64 + 0.5);
        let c4 = DMatrix::from_fn(n, 2, |i, j| (i as f64 - j as f64) * 0.7);
        let t = transform_eri4(&eri, n, [&c1, &c2, &c3, &c4]);
        for a in 0..2 {
            for b in 0..1 {
                for c in 0..3 {
                    for d in 0..2 {
                        let mut s = 0.0;
                        for p in 0..n {
                            for r in 0..n {
                                for q in 0..n {
                                    for u in 0..n {
                                        s += eri[((p * n + r) * n + q) * n + u]
                                            * c1[(p, a)]
                                            * c2[(r, b)]
                                            * c3[(q, c)]
                                            * c4[(u, d)];
                                    }
                                }
                            }
                        }
                        let got = t[((a * 1 + b) * 3 + c) * 2 + d];
                        assert!((got - s).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
