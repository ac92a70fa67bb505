//! Higher-order type-symmetric matrix representations.
//!
//! `S^{Phi,d}` is the d-th Kronecker power of the symmetrized flattening,
//! indexed by `q = kd/2`-tuples. Averaging it over all row and column
//! permutations of `S_q` gives `R^{Phi,d}`, whose `(I, J)` entry depends only
//! on the types (sorted copies) of `I` and `J`. [`TypeSymMatrix`] stores one
//! value per nonzero `(row type, col type)` bucket.
//!
//! The permutation double average over `S_q x S_q` equals the plain mean of
//! `S^{Phi,d}` over the type class `{(I', J') : type(I') = type(I),
//! type(J') = type(J)}`: each distinct rearrangement of `I` is hit by exactly
//! `mult(I)!` permutations. The class of a type `alpha` has
//! `q! / mult(alpha)!` members, so building `R` is one pass over the nonzeros
//! of `S^{Phi,d}` followed by a division per bucket.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::instance::{check_arity, Assignment};
use crate::polynomial::{SparseMatrix, SparseSymMatrix};
use crate::spectral::LinearOperator;
use crate::tuple;

/// Default cap on the number of generated Kronecker-power nonzeros.
pub const DEFAULT_NNZ_BUDGET: u128 = 200_000_000;

/// Default cap on the side of a materialized dense matrix.
pub const DEFAULT_DENSE_CAP: usize = 8192;

/// Multiplicity vector of a tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Histogram {
    counts: Vec<u32>,
}

impl Histogram {
    /// Histogram of a 0-based tuple over `0..n`.
    pub fn of(tuple: &[usize], n: usize) -> Result<Self> {
        if let Some(&s) = tuple.iter().find(|&&s| s >= n) {
            return Err(Error::IndexOutOfRange { coord: s + 1, n });
        }
        Ok(Histogram {
            counts: tuple::multiplicities(tuple, n),
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Tuple length.
    pub fn total(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn max_count(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0) as usize
    }

    /// `mult(I)! = prod_i counts_i!`, exact.
    pub fn factorial_weight(&self) -> BigUint {
        self.counts
            .iter()
            .fold(BigUint::one(), |acc, &c| acc * factorial(c as usize))
    }

    /// `sqrt(mult(I)!)`.
    pub fn hist_value(&self) -> f64 {
        weight_f64(&self.counts).sqrt()
    }

    /// Number of distinct rearrangements of the tuple, `q! / mult(I)!`.
    pub fn class_size(&self) -> BigUint {
        factorial(self.total()) / self.factorial_weight()
    }
}

pub fn histogram(tuple: &[usize], n: usize) -> Result<Histogram> {
    Histogram::of(tuple, n)
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

fn weight_f64(counts: &[u32]) -> f64 {
    counts
        .iter()
        .map(|&c| (1..=c).map(f64::from).product::<f64>())
        .product()
}

/// `sum_{I in [n]^q} mult(I)! = (q + n - 1)! / (n - 1)! = n (n+1) ... (n+q-1)`.
pub fn hist_sum(n: usize, q: usize) -> BigUint {
    (n..n + q).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// `hist_sum(n, q)^(1/d)` as a float, without overflowing for large `q`.
pub fn hist_sum_root(n: usize, q: usize, d: usize) -> f64 {
    let exact = hist_sum(n, q);
    match exact.to_f64() {
        Some(v) if v.is_finite() => v.powf(1.0 / d as f64),
        _ => ((n..n + q).map(|i| (i as f64).ln()).sum::<f64>() / d as f64).exp(),
    }
}

/// Default trimming threshold `ceil(10 ln n)`, at least 1.
pub fn default_trim_threshold(n: usize) -> usize {
    ((10.0 * (n as f64).ln()).ceil() as usize).max(1)
}

/// Stream every nonzero of the d-th Kronecker power of `s` to `f` as
/// `(row, col, value)`. Row `(U_1, .., U_d)` is the concatenation of the
/// factor rows.
pub fn for_each_kron_entry(s: &SparseMatrix, d: usize, mut f: impl FnMut(u64, u64, f64)) {
    let entries = s.entries();
    if d == 0 || entries.is_empty() {
        return;
    }
    let base = s.side();
    let mut idx = vec![0usize; d];
    loop {
        let mut row = 0u64;
        let mut col = 0u64;
        let mut val = 1.0;
        for &i in &idx {
            let (r, c, v) = entries[i];
            row = row * base + r;
            col = col * base + c;
            val *= v;
        }
        f(row, col, val);

        let mut pos = d;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < entries.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn check_power_budget(s: &SparseMatrix, d: usize, budget: u128) -> Result<()> {
    tuple::checked_side(s.n(), s.side_exponent() * d)?;
    let needed = (s.nnz() as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::budget("Kronecker power nonzeros", needed, budget));
    }
    Ok(())
}

/// `S^{(x)d}` with entry `((U_1..U_d), (V_1..V_d)) = prod_s S[U_s, V_s]`.
pub fn kron_power(s: &SparseSymMatrix, d: usize, budget: u128) -> Result<SparseSymMatrix> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    check_power_budget(s, d, budget)?;
    let mut triplets = Vec::with_capacity(s.nnz().pow(d as u32));
    for_each_kron_entry(s, d, |r, c, v| triplets.push((r, c, v)));
    let m = SparseMatrix::from_triplets(s.n(), s.side_exponent() * d, triplets)?;
    Ok(SparseSymMatrix::from_symmetric_unchecked(m))
}

/// Type-bucketed `R^{Phi,d}` and its trimmed / rescaled variants.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeSymMatrix {
    n: usize,
    k: usize,
    d: usize,
    q: usize,
    /// (row type, col type) -> implied entry value. Type keys are codes of
    /// sorted q-tuples. Absent means zero.
    buckets: BTreeMap<(u64, u64), f64>,
    trim_threshold: Option<usize>,
    rescaled: bool,
}

/// Class size `q!/mult!` of a sorted tuple code, as `f64`.
fn class_size_f64(sorted: &[usize], n: usize) -> f64 {
    let counts = tuple::multiplicities(sorted, n);
    let q = sorted.len();
    (1..=q).map(|i| i as f64).product::<f64>() / weight_f64(&counts)
}

/// Lookup tables for the fast accumulation path.
struct TypeTable {
    /// code -> type id
    id_of_code: Vec<u32>,
    /// type id -> sorted code
    codes: Vec<u64>,
}

const TABLE_MAX_SIDE: u64 = 1 << 22;
const DENSE_ACC_MAX_TYPES: usize = 4096;

impl TypeTable {
    fn build(n: usize, q: usize) -> Option<Self> {
        let side = tuple::checked_side(n, q).ok()?;
        if side > TABLE_MAX_SIDE {
            return None;
        }
        let mut sorted_to_id: HashMap<u64, u32> = HashMap::new();
        let mut codes = Vec::new();
        let mut id_of_code = Vec::with_capacity(side as usize);
        let mut scratch = Vec::new();
        for code in 0..side {
            let s = tuple::sorted_code(code, n, q, &mut scratch);
            let next = codes.len() as u32;
            let id = *sorted_to_id.entry(s).or_insert_with(|| {
                codes.push(s);
                next
            });
            id_of_code.push(id);
        }
        if codes.len() > DENSE_ACC_MAX_TYPES {
            return None;
        }
        Some(TypeTable { id_of_code, codes })
    }
}

impl TypeSymMatrix {
    /// `R^{Phi,d}` from `S^Phi` without materializing `S^{Phi,d}`.
    pub fn from_symmetric_power(
        s: &SparseSymMatrix,
        k: usize,
        d: usize,
        budget: u128,
    ) -> Result<Self> {
        check_arity(k)?;
        if d == 0 {
            return Err(Error::InvalidArgument("d must be at least 1".into()));
        }
        if s.side_exponent() != k / 2 {
            return Err(Error::DimensionMismatch {
                expected: k / 2,
                got: s.side_exponent(),
            });
        }
        check_power_budget(s, d, budget)?;
        let n = s.n();
        let q = k * d / 2;
        let sums = match TypeTable::build(n, q) {
            Some(table) => accumulate_dense(s, d, &table),
            None => {
                let mut acc: HashMap<(u64, u64), f64> = HashMap::new();
                let mut scratch = Vec::new();
                for_each_kron_entry(s, d, |r, c, v| {
                    let a = tuple::sorted_code(r, n, q, &mut scratch);
                    let b = tuple::sorted_code(c, n, q, &mut scratch);
                    *acc.entry((a, b)).or_insert(0.0) += v;
                });
                acc.into_iter().collect()
            }
        };
        Ok(Self::from_class_sums(n, k, d, sums))
    }

    fn from_class_sums(n: usize, k: usize, d: usize, sums: Vec<((u64, u64), f64)>) -> Self {
        let q = k * d / 2;
        let mut sizes: HashMap<u64, f64> = HashMap::new();
        let mut size = |code: u64| {
            *sizes
                .entry(code)
                .or_insert_with(|| class_size_f64(&tuple::decode(code, n, q), n))
        };
        let buckets = sums
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((a, b), v)| {
                let denom = size(a) * size(b);
                ((a, b), v / denom)
            })
            .collect();
        TypeSymMatrix {
            n,
            k,
            d,
            q,
            buckets,
            trim_threshold: None,
            rescaled: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Tuple length `kd/2` of row and column indices.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn side(&self) -> u64 {
        (self.n as u64).pow(self.q as u32)
    }

    pub fn buckets(&self) -> &BTreeMap<(u64, u64), f64> {
        &self.buckets
    }

    pub fn trim_threshold(&self) -> Option<usize> {
        self.trim_threshold
    }

    pub fn is_rescaled(&self) -> bool {
        self.rescaled
    }

    /// Implied entry at 0-based index tuples `(I, J)`.
    pub fn entry(&self, row: &[usize], col: &[usize]) -> f64 {
        let mut a = row.to_vec();
        let mut b = col.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        let key = (tuple::encode(&a, self.n), tuple::encode(&b, self.n));
        self.buckets.get(&key).copied().unwrap_or(0.0)
    }

    /// Implied entry at tuple codes.
    pub fn entry_at(&self, row: u64, col: u64) -> f64 {
        let mut s = Vec::new();
        let key = (
            tuple::sorted_code(row, self.n, self.q, &mut s),
            tuple::sorted_code(col, self.n, self.q, &mut s),
        );
        self.buckets.get(&key).copied().unwrap_or(0.0)
    }

    /// Drop every bucket whose row or column type has a multiplicity above
    /// `tau`. This zeroes the corresponding rows and columns.
    pub fn trim(&self, tau: usize) -> Result<Self> {
        if self.trim_threshold.is_some() {
            return Err(Error::InvalidArgument("matrix is already trimmed".into()));
        }
        if tau == 0 {
            return Err(Error::InvalidArgument("trim threshold must be positive".into()));
        }
        let keep = |code: u64| tuple::max_multiplicity(&tuple::decode(code, self.n, self.q)) <= tau;
        let buckets = self
            .buckets
            .iter()
            .filter(|(&(a, b), _)| keep(a) && keep(b))
            .map(|(&key, &v)| (key, v))
            .collect();
        Ok(TypeSymMatrix {
            buckets,
            trim_threshold: Some(tau),
            ..self.clone()
        })
    }

    /// `D_hist^{-1} R D_hist^{-1}` with `hist_I = sqrt(mult(I)!)`.
    pub fn rescale(&self) -> Result<Self> {
        if self.rescaled {
            return Err(Error::InvalidArgument("matrix is already rescaled".into()));
        }
        let hist = |code: u64| {
            let counts = tuple::multiplicities(&tuple::decode(code, self.n, self.q), self.n);
            weight_f64(&counts).sqrt()
        };
        let buckets = self
            .buckets
            .iter()
            .map(|(&(a, b), &v)| ((a, b), v / (hist(a) * hist(b))))
            .collect();
        Ok(TypeSymMatrix {
            buckets,
            rescaled: true,
            ..self.clone()
        })
    }

    /// Distinct types appearing in some bucket, ascending.
    fn active_types(&self) -> Vec<u64> {
        let mut t: Vec<u64> = self
            .buckets
            .keys()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Full `n^q x n^q` matrix.
    pub fn materialize_dense(&self, cap: usize) -> Result<DMatrix<f64>> {
        let side = self.side();
        if side > cap as u64 {
            return Err(Error::DenseTooLarge {
                side: side as u128,
                cap: cap as u128,
            });
        }
        let op = TypeSymOperator::new(self, Execution::Sequential)?;
        let side = side as usize;
        let t = op.types.len();
        let mut values = vec![0.0; t * t];
        for &(a, b, v) in &op.links {
            values[a as usize * t + b as usize] = v;
        }
        let mut m = DMatrix::zeros(side, side);
        for j in 0..side {
            let tj = op.type_of[j];
            if tj == NO_TYPE {
                continue;
            }
            for i in 0..side {
                let ti = op.type_of[i];
                if ti != NO_TYPE {
                    m[(i, j)] = values[ti as usize * t + tj as usize];
                }
            }
        }
        Ok(m)
    }

    /// Matrix-vector product with the implied full matrix.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let op = TypeSymOperator::new(self, Execution::Sequential)?;
        if v.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; v.len()];
        op.apply(v, &mut out);
        Ok(out)
    }

    /// The `T x T` matrix `C^{1/2} B C^{1/2}` over the active types, where
    /// `B` holds bucket values and `C` the class sizes. The implied full
    /// matrix equals `U (C^{1/2} B C^{1/2}) U^T` with `U` having orthonormal
    /// columns (normalized class indicators), so both share their nonzero
    /// spectrum.
    pub fn quotient_matrix(&self) -> DMatrix<f64> {
        let types = self.active_types();
        let index: HashMap<u64, usize> = types.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let root: Vec<f64> = types
            .iter()
            .map(|&c| class_size_f64(&tuple::decode(c, self.n, self.q), self.n).sqrt())
            .collect();
        let t = types.len();
        let mut m = DMatrix::zeros(t, t);
        for (&(a, b), &v) in &self.buckets {
            let (i, j) = (index[&a], index[&b]);
            m[(i, j)] = root[i] * v * root[j];
        }
        m
    }

    /// `(D x^{(x)q})^T M (D x^{(x)q})` where `D = D_hist` if `hist_weighted`
    /// and the identity otherwise, computed from class sums:
    /// every member of a type class has the same monomial `x^alpha`.
    pub fn tensor_quadratic_form(&self, x: &Assignment, hist_weighted: bool) -> f64 {
        let xs = x.values();
        let mut cache: HashMap<u64, f64> = HashMap::new();
        let mut weight = |code: u64| -> f64 {
            *cache.entry(code).or_insert_with(|| {
                let t = tuple::decode(code, self.n, self.q);
                let sign: f64 = t.iter().map(|&i| xs[i] as f64).product();
                let counts = tuple::multiplicities(&t, self.n);
                let mut w = sign * class_size_f64(&t, self.n);
                if hist_weighted {
                    w *= weight_f64(&counts).sqrt();
                }
                w
            })
        };
        self.buckets
            .iter()
            .map(|(&(a, b), &v)| weight(a) * v * weight(b))
            .sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.buckets
            .iter()
            .all(|(&(a, b), &v)| self.buckets.get(&(b, a)) == Some(&v))
    }
}

fn accumulate_dense(s: &SparseMatrix, d: usize, table: &TypeTable) -> Vec<((u64, u64), f64)> {
    let t = table.codes.len();
    let mut acc = vec![0.0f64; t * t];
    let ids = &table.id_of_code;
    for_each_kron_entry(s, d, |r, c, v| {
        acc[ids[r as usize] as usize * t + ids[c as usize] as usize] += v;
    });
    acc.into_iter()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .map(|(i, v)| ((table.codes[i / t], table.codes[i % t]), v))
        .collect()
}

/// `R^{Phi,d}` from an explicit `S^{Phi,d}`.
pub fn type_symmetrize(sd: &SparseSymMatrix, k: usize, d: usize) -> Result<TypeSymMatrix> {
    check_arity(k)?;
    let q = k * d / 2;
    if sd.side_exponent() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: sd.side_exponent(),
        });
    }
    let n = sd.n();
    let mut acc: HashMap<(u64, u64), f64> = HashMap::new();
    let mut scratch = Vec::new();
    for &(r, c, v) in sd.entries() {
        let a = tuple::sorted_code(r, n, q, &mut scratch);
        let b = tuple::sorted_code(c, n, q, &mut scratch);
        *acc.entry((a, b)).or_insert(0.0) += v;
    }
    Ok(TypeSymMatrix::from_class_sums(n, k, d, acc.into_iter().collect()))
}

const NO_TYPE: u32 = u32::MAX;

/// Matrix-free operator for a [`TypeSymMatrix`].
///
/// `apply` first sums `v` over every active type class, then pushes each
/// bucket's contribution to its row class: `O(n^q + buckets)` per product.
pub struct TypeSymOperator {
    dim: usize,
    types: Vec<u64>,
    type_of: Vec<u32>,
    links: Vec<(u32, u32, f64)>,
    exec: Execution,
}

/// Largest side accepted by the matrix-free operator.
pub const OPERATOR_MAX_SIDE: u64 = 1 << 26;

impl TypeSymOperator {
    pub fn new(r: &TypeSymMatrix, exec: Execution) -> Result<Self> {
        let side = r.side();
        if side > OPERATOR_MAX_SIDE {
            return Err(Error::budget("operator dimension", side as u128, OPERATOR_MAX_SIDE as u128));
        }
        let types = r.active_types();
        let index: HashMap<u64, u32> = types
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32))
            .collect();
        let (n, q) = (r.n, r.q);
        let mut type_of = vec![NO_TYPE; side as usize];
        exec.fill(&mut type_of, |code| {
            let mut s = Vec::with_capacity(q);
            let key = tuple::sorted_code(code as u64, n, q, &mut s);
            index.get(&key).copied().unwrap_or(NO_TYPE)
        });
        let links = r
            .buckets
            .iter()
            .map(|(&(a, b), &v)| (index[&a], index[&b], v))
            .collect();
        Ok(TypeSymOperator {
            dim: side as usize,
            types,
            type_of,
            links,
            exec,
        })
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }
}

impl LinearOperator for TypeSymOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let t = self.types.len();
        let mut class_sums = vec![0.0; t];
        for (i, &ti) in self.type_of.iter().enumerate() {
            if ti != NO_TYPE {
                class_sums[ti as usize] += v[i];
            }
        }
        let mut w = vec![0.0; t];
        for &(a, b, val) in &self.links {
            w[a as usize] += val * class_sums[b as usize];
        }
        let type_of = &self.type_of;
        self.exec.fill(out, |i| {
            let ti = type_of[i];
            if ti == NO_TYPE {
                0.0
            } else {
                w[ti as usize]
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random, Constraint, Instance};
    use crate::polynomial::{eval_polynomial, symmetric_flattening, tensor_power};
    use crate::seed::stream_rng;
    use rand::Rng;

    fn single(n: usize) -> Instance {
        Instance::new(n, 2, vec![Constraint::one_based(&[1, 2], 1).unwrap()]).unwrap()
    }

    fn build(inst: &Instance, d: usize) -> TypeSymMatrix {
        let s = symmetric_flattening(inst).unwrap();
        TypeSymMatrix::from_symmetric_power(&s, inst.k(), d, DEFAULT_NNZ_BUDGET).unwrap()
    }

    /// Permutations of `0..q` (oracle helper).
    fn perms(q: usize) -> Vec<Vec<usize>> {
        if q == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(q - 1) {
            for pos in 0..=p.len() {
                let mut np = p.clone();
                np.insert(pos, q - 1);
                out.push(np);
            }
        }
        out
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[0, 1, 2], 3).unwrap();
        assert_eq!(h.counts(), &[1, 1, 1]);
        assert_eq!(h.factorial_weight(), BigUint::from(1u32));
        let h = histogram(&[1, 1, 1], 3).unwrap();
        assert_eq!(h.counts(), &[0, 3, 0]);
        assert_eq!(h.factorial_weight(), BigUint::from(6u32));
        let h = histogram(&[0, 0, 2, 2], 4).unwrap();
        assert_eq!(h.factorial_weight(), BigUint::from(4u32));
        assert_eq!(h.class_size(), BigUint::from(6u32));
        assert!(histogram(&[3], 3).is_err());
    }

    #[test]
    fn hist_value_squares_to_weight() {
        let h = histogram(&[0, 0, 0, 1, 1], 2).unwrap();
        let w = h.factorial_weight().to_f64().unwrap();
        assert_eq!(w, 12.0);
        assert!((h.hist_value().powi(2) - w).abs() < 1e-12);
    }

    #[test]
    fn hist_sum_examples() {
        assert_eq!(hist_sum(2, 2), BigUint::from(6u32));
        for q in 0..8 {
            assert_eq!(hist_sum(1, q), factorial(q));
        }
        assert_eq!(hist_sum_root(2, 1, 1), 2.0);
    }

    #[test]
    fn hist_sum_root_survives_huge_values() {
        let r = hist_sum_root(50, 400, 100);
        let expect = ((50..450).map(|i| (i as f64).ln()).sum::<f64>() / 100.0).exp();
        assert!((r - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn kron_power_examples() {
        let s = symmetric_flattening(&single(2)).unwrap();
        assert_eq!(kron_power(&s, 1, 100).unwrap(), s);
        let s2 = kron_power(&s, 2, 100).unwrap();
        assert_eq!(s2.nnz(), s.nnz().pow(2));
        let row = tuple::encode(&[0, 0], 2);
        let col = tuple::encode(&[1, 1], 2);
        assert_eq!(s2.get(row, col), 0.25);
        assert!(s2.is_symmetric());
    }

    #[test]
    fn kron_power_respects_budget() {
        let g = generate_random(4, 2, 0.5, 1).unwrap();
        let s = symmetric_flattening(&g).unwrap();
        let err = kron_power(&s, 3, 10).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn singleton_orbits_give_s_itself() {
        let r = build(&single(2), 1);
        assert_eq!(r.entry(&[0], &[1]), 0.5);
        assert_eq!(r.entry(&[1], &[0]), 0.5);
        assert_eq!(r.entry(&[0], &[0]), 0.0);
        let dense = r.materialize_dense(16).unwrap();
        assert_eq!(dense, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
    }

    #[test]
    fn class_of_size_one() {
        let r = build(&single(2), 2);
        assert_eq!(r.entry(&[0, 0], &[1, 1]), 0.25);
        // ((0,1),(0,1)) averages S^{(x)2} over a 2x2 class.
        let s = symmetric_flattening(&single(2)).unwrap();
        let s2 = kron_power(&s, 2, 100).unwrap();
        let mut sum = 0.0;
        for a in [[0, 1], [1, 0]] {
            for b in [[0, 1], [1, 0]] {
                sum += s2.get(tuple::encode(&a, 2), tuple::encode(&b, 2));
            }
        }
        assert_eq!(r.entry(&[0, 1], &[1, 0]), sum / 4.0);
    }

    #[test]
    fn streaming_matches_explicit_power() {
        for seed in 0..5 {
            let g = generate_random(3, 2, 0.6, seed).unwrap();
            let s = symmetric_flattening(&g).unwrap();
            for d in 1..=3 {
                let streamed = TypeSymMatrix::from_symmetric_power(&s, 2, d, DEFAULT_NNZ_BUDGET).unwrap();
                let explicit = type_symmetrize(&kron_power(&s, d, DEFAULT_NNZ_BUDGET).unwrap(), 2, d).unwrap();
                assert_eq!(streamed, explicit);
            }
        }
    }

    #[test]
    fn permutation_double_sum_oracle() {
        // Entry (I, J) against the literal (1/|S_q|^2) sum over pi, sigma.
        for (n, k, d, seed) in [(2, 2, 2, 1u64), (3, 2, 3, 2), (3, 2, 2, 3), (2, 4, 1, 4), (3, 2, 1, 5)] {
            let g = generate_random(n, k, 0.7, seed).unwrap();
            let s = symmetric_flattening(&g).unwrap();
            let sd = kron_power(&s, d, DEFAULT_NNZ_BUDGET).unwrap();
            let r = type_symmetrize(&sd, k, d).unwrap();
            let q = k * d / 2;
            let ps = perms(q);
            let norm = (ps.len() * ps.len()) as f64;
            for i in tuple::Tuples::new(n, q) {
                for j in tuple::Tuples::new(n, q) {
                    let mut sum = 0.0;
                    for p in &ps {
                        let pi: Vec<usize> = p.iter().map(|&t| i[t]).collect();
                        for sg in &ps {
                            let sj: Vec<usize> = sg.iter().map(|&t| j[t]).collect();
                            sum += sd.get(tuple::encode(&pi, n), tuple::encode(&sj, n));
                        }
                    }
                    let want = sum / norm;
                    assert!((r.entry(&i, &j) - want).abs() <= 1e-12, "{i:?} {j:?}");
                }
            }
        }
    }

    #[test]
    fn dense_and_hashed_accumulation_agree() {
        let g = generate_random(4, 2, 0.5, 9).unwrap();
        let s = symmetric_flattening(&g).unwrap();
        let fast = TypeSymMatrix::from_symmetric_power(&s, 2, 3, DEFAULT_NNZ_BUDGET).unwrap();
        let slow = type_symmetrize(&kron_power(&s, 3, DEFAULT_NNZ_BUDGET).unwrap(), 2, 3).unwrap();
        assert_eq!(fast, slow);
    }

    #[test]
    fn type_symmetry_is_bit_exact() {
        let g = generate_random(4, 4, 0.2, 17).unwrap();
        let r = build(&g, 2);
        let dense = r.materialize_dense(1 << 10).unwrap();
        let mut rng = stream_rng(3, 0);
        let q = r.q();
        for _ in 0..1000 {
            let i: Vec<usize> = (0..q).map(|_| rng.random_range(0..4)).collect();
            let j: Vec<usize> = (0..q).map(|_| rng.random_range(0..4)).collect();
            let mut i2 = i.clone();
            let mut j2 = j.clone();
            // random rearrangements
            for t in (1..q).rev() {
                i2.swap(t, rng.random_range(0..=t));
                j2.swap(t, rng.random_range(0..=t));
            }
            let a = dense[(tuple::encode(&i, 4) as usize, tuple::encode(&j, 4) as usize)];
            let b = dense[(tuple::encode(&i2, 4) as usize, tuple::encode(&j2, 4) as usize)];
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(r.is_symmetric());
        assert_eq!(dense, dense.transpose());
    }

    #[test]
    fn representation_identities() {
        let g = generate_random(4, 4, 0.25, 21).unwrap();
        for d in 1..=2 {
            let r = build(&g, d);
            let rt = r.rescale().unwrap();
            let q = r.q();
            let mut rng = stream_rng(4, d as u64);
            for _ in 0..50 {
                let x = Assignment::random(4, &mut rng);
                let f = eval_polynomial(&g, &x).unwrap() as f64;
                let want = f.powi(d as i32);
                let v = tensor_power(&x.as_f64(), q);
                let plain: f64 = r.apply(&v).unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
                assert!((plain - want).abs() <= 1e-9 * want.abs().max(1.0));
                assert!((r.tensor_quadratic_form(&x, false) - want).abs() <= 1e-9 * want.abs().max(1.0));
                let dv: Vec<f64> = v
                    .iter()
                    .enumerate()
                    .map(|(c, &a)| a * histogram(&tuple::decode(c as u64, 4, q), 4).unwrap().hist_value())
                    .collect();
                let resc: f64 = rt.apply(&dv).unwrap().iter().zip(&dv).map(|(a, b)| a * b).sum();
                assert!((resc - want).abs() <= 1e-9 * want.abs().max(1.0));
                assert!((rt.tensor_quadratic_form(&x, true) - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn trim_examples() {
        let g = generate_random(3, 2, 0.8, 5).unwrap();
        let r = build(&g, 2);
        let same = r.trim(2).unwrap();
        assert_eq!(same.buckets(), r.buckets());
        assert_eq!(same.trim_threshold(), Some(2));
        let t = r.trim(1).unwrap();
        for &(a, b) in t.buckets().keys() {
            assert!(tuple::max_multiplicity(&tuple::decode(a, 3, 2)) <= 1);
            assert!(tuple::max_multiplicity(&tuple::decode(b, 3, 2)) <= 1);
        }
        assert!(t.trim(1).is_err());
        assert!(r.trim(0).is_err());
    }

    #[test]
    fn rescale_examples() {
        let r = build(&single(2), 2);
        let rt = r.rescale().unwrap();
        assert!((rt.entry(&[0, 0], &[1, 1]) - 0.25 / 2.0).abs() < 1e-15);
        assert!((rt.entry(&[0, 1], &[1, 0]) - r.entry(&[0, 1], &[1, 0])).abs() == 0.0);
        assert!(rt.rescale().is_err());
        assert!(rt.is_rescaled());
    }

    #[test]
    fn apply_matches_dense_columns() {
        let g = generate_random(4, 4, 0.3, 2).unwrap();
        let r = build(&g, 2).rescale().unwrap();
        let dense = r.materialize_dense(256).unwrap();
        for col in [0usize, 5, 17, 100, 255] {
            let mut e = vec![0.0; 256];
            e[col] = 1.0;
            let out = r.apply(&e).unwrap();
            for row in 0..256 {
                assert_eq!(out[row], dense[(row, col)]);
            }
        }
        assert!(r.apply(&vec![0.0; 256]).unwrap().iter().all(|&v| v == 0.0));
        assert!(r.apply(&[1.0]).is_err());
    }

    #[test]
    fn apply_quadratic_form_matches_dense_and_is_even() {
        let g = generate_random(3, 2, 0.6, 12).unwrap();
        let r = build(&g, 3);
        let dense = r.materialize_dense(64).unwrap();
        let mut rng = stream_rng(8, 0);
        for _ in 0..50 {
            let v: Vec<f64> = (0..27).map(|_| rng.random_range(-1.0..1.0)).collect();
            let av = r.apply(&v).unwrap();
            let a: f64 = av.iter().zip(&v).map(|(x, y)| x * y).sum();
            let dv = nalgebra::DVector::from_vec(v.clone());
            let b = dv.dot(&(&dense * &dv));
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let an: f64 = r.apply(&neg).unwrap().iter().zip(&neg).map(|(x, y)| x * y).sum();
            assert!((a - an).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let g = generate_random(4, 4, 0.3, 2).unwrap();
        let r = build(&g, 2);
        assert!(matches!(
            r.materialize_dense(100),
            Err(Error::DenseTooLarge { side: 256, cap: 100 })
        ));
    }

    #[test]
    fn quadratic_forms_agree_with_kron_power_on_tensor_powers() {
        let g = generate_random(3, 4, 0.2, 6).unwrap();
        let s = symmetric_flattening(&g).unwrap();
        let sd = kron_power(&s, 2, DEFAULT_NNZ_BUDGET).unwrap();
        let r = type_symmetrize(&sd, 4, 2).unwrap();
        for bits in 0..8 {
            let x = Assignment::from_bits(3, bits);
            let v = tensor_power(&x.as_f64(), 4);
            let a = sd.quadratic_form(&v);
            let b = r.tensor_quadratic_form(&x, false);
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
