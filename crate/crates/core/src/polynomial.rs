//! The constraints tensor, the constraints polynomial, its natural square
//! flattening and the symmetrized flattening.
//!
//! Matrices here are indexed by tuple codes (see [`crate::tuple`]): a matrix
//! with side exponent `q` is `n^q x n^q`. Stored values are signs, halves of
//! signs, and products of those, all exact in `f64`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::instance::{check_arity, Assignment, Instance};
use crate::spectral::LinearOperator;
use crate::tuple;

/// Order-`k` tensor over `[n]`, stored as tuple code -> sign.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    pub n: usize,
    pub k: usize,
    pub entries: BTreeMap<u64, i8>,
}

impl SparseTensor {
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

pub fn constraints_tensor(inst: &Instance) -> SparseTensor {
    let entries = inst
        .constraints()
        .iter()
        .map(|c| (tuple::encode(&c.tuple, inst.n()), c.sign.value() as i8))
        .collect();
    SparseTensor {
        n: inst.n(),
        k: inst.k(),
        entries,
    }
}

/// `f(x) = <T, x^{(x)k}> = sum_a eta_a prod_i x[S_a,i]`, straight from the
/// constraint list.
pub fn eval_polynomial(inst: &Instance, x: &Assignment) -> Result<i64> {
    inst.check_assignment(x)?;
    Ok(inst
        .constraints()
        .iter()
        .map(|c| c.sign.value() * c.parity(x))
        .sum())
}

/// Row-major `x^{(x)q}`: entry at code(I) is `prod_t x[I_t]`.
pub fn tensor_power(x: &[f64], q: usize) -> Vec<f64> {
    let mut v = vec![1.0];
    for _ in 0..q {
        let mut next = Vec::with_capacity(v.len() * x.len());
        for &a in &v {
            next.extend(x.iter().map(|&xi| a * xi));
        }
        v = next;
    }
    v
}

/// Square sparse matrix over `q`-tuple codes; no symmetry promise.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    side_exponent: usize,
    /// Sorted by `(row, col)`, unique, nonzero.
    entries: Vec<(u64, u64, f64)>,
}

impl SparseMatrix {
    pub fn from_triplets(
        n: usize,
        side_exponent: usize,
        triplets: impl IntoIterator<Item = (u64, u64, f64)>,
    ) -> Result<Self> {
        let side = tuple::checked_side(n, side_exponent)?;
        let mut map: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= side || c >= side {
                return Err(Error::DimensionMismatch {
                    expected: side as usize,
                    got: r.max(c) as usize,
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({r}, {c})")));
            }
            *map.entry((r, c)).or_insert(0.0) += v;
        }
        Ok(SparseMatrix {
            n,
            side_exponent,
            entries: map
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side_exponent(&self) -> usize {
        self.side_exponent
    }

    pub fn side(&self) -> u64 {
        (self.n as u64).pow(self.side_exponent as u32)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u64, u64, f64)] {
        &self.entries
    }

    pub fn get(&self, row: u64, col: u64) -> f64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or(0.0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|&(r, c, v)| self.get(c, r) == v)
    }

    /// `v^T M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, a)| v[r as usize] * a * v[c as usize])
            .sum()
    }

    pub fn to_dense(&self, cap: usize) -> Result<DMatrix<f64>> {
        let side = self.side();
        if side > cap as u64 {
            return Err(Error::DenseTooLarge {
                side: side as u128,
                cap: cap as u128,
            });
        }
        let mut m = DMatrix::zeros(side as usize, side as usize);
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] = v;
        }
        Ok(m)
    }
}

/// Sparse matrix with exact symmetry: `(i, j)` stored iff `(j, i)` is, with
/// the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix(SparseMatrix);

impl SparseSymMatrix {
    pub fn try_from_matrix(m: SparseMatrix) -> Result<Self> {
        for &(r, c, v) in m.entries() {
            let w = m.get(c, r);
            if w != v {
                return Err(Error::NotSymmetric {
                    row: r as usize,
                    col: c as usize,
                    diff: (v - w).abs(),
                });
            }
        }
        Ok(SparseSymMatrix(m))
    }

    /// Caller guarantees symmetry (used by constructions that preserve it).
    pub(crate) fn from_symmetric_unchecked(m: SparseMatrix) -> Self {
        debug_assert!(m.is_symmetric());
        SparseSymMatrix(m)
    }

    pub fn as_matrix(&self) -> &SparseMatrix {
        &self.0
    }
}

impl std::ops::Deref for SparseSymMatrix {
    type Target = SparseMatrix;

    fn deref(&self) -> &SparseMatrix {
        &self.0
    }
}

/// Natural `n^{k/2} x n^{k/2}` flattening: the first `k/2` coordinates index
/// the row, the last `k/2` the column.
pub fn flatten(t: &SparseTensor) -> Result<SparseMatrix> {
    check_arity(t.k)?;
    let half = t.k / 2;
    let block = (t.n as u64).pow(half as u32);
    SparseMatrix::from_triplets(
        t.n,
        half,
        t.entries
            .iter()
            .map(|(&code, &s)| (code / block, code % block, s as f64)),
    )
}

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &SparseMatrix) -> SparseSymMatrix {
    let mut acc: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for &(r, c, v) in m.entries() {
        *acc.entry((r, c)).or_insert(0.0) += 0.5 * v;
        *acc.entry((c, r)).or_insert(0.0) += 0.5 * v;
    }
    let entries = acc
        .into_iter()
        .filter(|&(_, v)| v != 0.0)
        .map(|((r, c), v)| (r, c, v))
        .collect();
    SparseSymMatrix(SparseMatrix {
        n: m.n,
        side_exponent: m.side_exponent,
        entries,
    })
}

/// `S^Phi` for an instance.
pub fn symmetric_flattening(inst: &Instance) -> Result<SparseSymMatrix> {
    Ok(symmetrize(&flatten(&constraints_tensor(inst))?))
}

impl LinearOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.side() as usize
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(r, c, a) in self.entries() {
            out[r as usize] += a * v[c as usize];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random, Constraint};
    use rand::Rng;

    fn one(n: usize, k: usize, cs: &[(&[usize], i64)]) -> Instance {
        Instance::new(
            n,
            k,
            cs.iter()
                .map(|(t, s)| Constraint::one_based(t, *s).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tensor_transcribes_constraints() {
        let t = constraints_tensor(&one(2, 2, &[(&[1, 2], 1)]));
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[&1], 1);
        let empty = constraints_tensor(&Instance::new(3, 2, vec![]).unwrap());
        assert_eq!(empty.nnz(), 0);
    }

    #[test]
    fn tensor_nnz_counts_constraints() {
        let mut seed = 0;
        let inst = loop {
            let g = generate_random(5, 4, 0.032, seed).unwrap();
            if g.m() == 20 {
                break g;
            }
            seed += 1;
        };
        assert_eq!(constraints_tensor(&inst).nnz(), 20);
    }

    #[test]
    fn polynomial_examples() {
        let a = one(2, 2, &[(&[1, 2], 1)]);
        let x = Assignment::new(vec![1, -1]).unwrap();
        assert_eq!(eval_polynomial(&a, &x).unwrap(), -1);
        let c = one(2, 2, &[(&[1, 2], 1), (&[2, 1], -1)]);
        for bits in 0..4 {
            assert_eq!(eval_polynomial(&c, &Assignment::from_bits(2, bits)).unwrap(), 0);
        }
    }

    #[test]
    fn polynomial_matches_sat_identity() {
        // 2m (sat - 1/2) = f, in integers: 2 * satisfied - m = f.
        for seed in 0..20 {
            let g = generate_random(6, 4, 0.02, seed).unwrap();
            if g.m() == 0 {
                continue;
            }
            for bits in 0..64 {
                let x = Assignment::from_bits(6, bits);
                let s = g.sat_fraction(&x).unwrap();
                let f = eval_polynomial(&g, &x).unwrap();
                assert_eq!(2 * s.satisfied as i64 - g.m() as i64, f);
            }
        }
    }

    #[test]
    fn flatten_examples() {
        let m = flatten(&constraints_tensor(&one(2, 2, &[(&[1, 2], 1)]))).unwrap();
        assert_eq!(m.entries(), &[(0, 1, 1.0)]);
        let m4 = flatten(&constraints_tensor(&one(4, 4, &[(&[1, 2, 3, 4], -1)]))).unwrap();
        assert_eq!(m4.side_exponent(), 2);
        assert_eq!(
            m4.entries(),
            &[(tuple::encode(&[0, 1], 4), tuple::encode(&[2, 3], 4), -1.0)]
        );
        let odd = SparseTensor {
            n: 2,
            k: 3,
            entries: BTreeMap::new(),
        };
        assert_eq!(flatten(&odd), Err(Error::UnsupportedArity(3)));
    }

    #[test]
    fn flatten_is_a_matrix_representation() {
        let g = generate_random(5, 4, 0.1, 3).unwrap();
        let m = flatten(&constraints_tensor(&g)).unwrap();
        let mut rng = crate::seed::stream_rng(5, 0);
        for _ in 0..100 {
            let x = Assignment::random(5, &mut rng);
            let v = tensor_power(&x.as_f64(), 2);
            let f = eval_polynomial(&g, &x).unwrap() as f64;
            assert_eq!(m.quadratic_form(&v), f);
        }
        let mut vals: Vec<f64> = m.entries().iter().map(|e| e.2).collect();
        let mut signs: Vec<f64> = g.constraints().iter().map(|c| c.sign.value() as f64).collect();
        vals.sort_by(f64::total_cmp);
        signs.sort_by(f64::total_cmp);
        assert_eq!(vals, signs);
    }

    #[test]
    fn symmetrize_examples() {
        let m = SparseMatrix::from_triplets(2, 1, [(0, 1, 1.0)]).unwrap();
        let s = symmetrize(&m);
        assert_eq!(s.entries(), &[(0, 1, 0.5), (1, 0, 0.5)]);
        let sym = SparseMatrix::from_triplets(3, 1, [(0, 2, 2.0), (2, 0, 2.0), (1, 1, -1.0)]).unwrap();
        assert_eq!(symmetrize(&sym).as_matrix(), &sym);
    }

    #[test]
    fn symmetrize_preserves_quadratic_form() {
        let g = generate_random(4, 4, 0.3, 8).unwrap();
        let m = flatten(&constraints_tensor(&g)).unwrap();
        let s = symmetrize(&m);
        assert!(s.is_symmetric());
        let mut rng = crate::seed::stream_rng(9, 0);
        for _ in 0..100 {
            let v: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = m.quadratic_form(&v);
            let b = s.quadratic_form(&v);
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn try_from_matrix_rejects_asymmetry() {
        let m = SparseMatrix::from_triplets(2, 1, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            SparseSymMatrix::try_from_matrix(m),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn cancelling_pair_gives_zero_symmetrization() {
        let s = symmetric_flattening(&one(2, 2, &[(&[1, 2], 1), (&[2, 1], -1)])).unwrap();
        assert_eq!(s.nnz(), 0);
    }
}
