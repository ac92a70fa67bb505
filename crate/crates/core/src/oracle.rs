//! Brute-force and exhaustive-enumeration oracles.
//!
//! Everything here trades speed for directness: assignments are enumerated,
//! permutations are listed, set partitions are generated one by one. Each
//! oracle takes an explicit budget and fails with `BudgetExceeded` rather than
//! sampling.
//!
//! Trace-method scenarios: for `l >= 1` and `q = kd/2`, a scenario is a
//! cyclic sequence of `2l` index tuples `I_j in [n]^q` with row permutations
//! `pi_j` and column permutations `sigma_j` in `S_q`. Each `I_j` splits into
//! `d` blocks `U_{j,s}` of length `k/2`. The index `(j, s)` refers to the
//! entry `S[pi_j(U_{j,s}), sigma_j(U_{j+1,s})]`, and two indices are
//! equivalent when they name the same unordered pair of blocks, hence the same
//! entry of the symmetric matrix `S^Phi`.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::certify::representation;
use crate::error::{Error, Result};
use crate::exec::{chunks, Execution};
use crate::instance::{check_arity, generate_random, Assignment, Instance, SatFraction};
use crate::polynomial::{eval_polynomial, symmetric_flattening, tensor_power};
use crate::repmatrix::{factorial, hist_sum, TypeSymOperator, DEFAULT_DENSE_CAP, DEFAULT_NNZ_BUDGET};
use crate::seed::{derive_seed, stream_rng};
use crate::spectral::{trace_power, LinearOperator};
use crate::tuple;

/// Largest `n` accepted by [`brute_force_max_sat`].
pub const MAX_BRUTE_FORCE_VARS: usize = 24;

/// Default cap on enumerated scenarios for the claim checkers.
pub const DEFAULT_ENUM_BUDGET: u128 = 10_000_000;

/// Largest set handled by [`count_even_partitions`].
pub const MAX_PARTITION_SET: usize = 12;

// ---------------------------------------------------------------------------
// Assignments

/// Exact `max_x sat(x)` over all `2^n` assignments, with the first maximizer
/// in enumeration order (bit `i` set means `x_i = -1`).
pub fn brute_force_max_sat(inst: &Instance) -> Result<(SatFraction, Assignment)> {
    brute_force_max_sat_with(inst, Execution::default())
}

pub fn brute_force_max_sat_with(
    inst: &Instance,
    exec: Execution,
) -> Result<(SatFraction, Assignment)> {
    let n = inst.n();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::budget(
            "brute-force assignments",
            1u128 << n.min(127),
            1u128 << MAX_BRUTE_FORCE_VARS,
        ));
    }
    if inst.m() == 0 {
        return Err(Error::EmptyInstance);
    }
    // x_i^2 = 1, so a constraint's parity only sees coordinates of odd
    // multiplicity. Bit i of the mask set iff i occurs an odd number of times.
    let masks: Vec<(u32, bool)> = inst
        .constraints()
        .iter()
        .map(|c| {
            let mask = c.tuple.iter().fold(0u32, |m, &s| m ^ (1 << s));
            (mask, c.sign.value() == 1)
        })
        .collect();
    let count = |bits: u32| {
        masks
            .iter()
            .filter(|&&(mask, plus)| (mask & bits).count_ones().is_multiple_of(2) == plus)
            .count()
    };
    let total = 1u64 << n;
    let parts = chunks(total, 1 << 12);
    let best = exec
        .map_slice(&parts, |&(lo, hi)| {
            let mut best = (0usize, lo);
            for bits in lo..hi {
                let c = count(bits as u32);
                if c > best.0 {
                    best = (c, bits);
                }
            }
            best
        })
        .into_iter()
        .fold((0usize, 0u64), |acc, b| if b.0 > acc.0 { b } else { acc });
    Ok((
        SatFraction {
            satisfied: best.0,
            total: inst.m(),
        },
        Assignment::from_bits(n, best.1),
    ))
}

/// `max_x |sat(x) - 1/2|`; by `x -> -x` symmetry for even `k` this is just
/// the larger of the best and worst fractions' distances to 1/2.
pub fn brute_force_max_excess(inst: &Instance) -> Result<f64> {
    let (best, _) = brute_force_max_sat(inst)?;
    let (worst, _) = brute_force_max_sat(&inst.negated())?;
    Ok(best.excess().max(worst.excess()))
}

/// `sum_{I in [n]^q} mult(I)!` by enumerating every tuple.
pub fn hist_sum_enumerated(n: usize, q: usize, budget: u128) -> Result<BigUint> {
    let side = tuple::checked_side(n, q)?;
    if side as u128 > budget {
        return Err(Error::budget("histogram tuples", side as u128, budget));
    }
    let mut total = BigUint::zero();
    for t in tuple::Tuples::new(n, q) {
        let w: u128 = tuple::multiplicities(&t, n)
            .iter()
            .map(|&c| (1..=c as u128).product::<u128>())
            .product();
        total += BigUint::from(w);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Permutations

/// All permutations of `0..q` in lexicographic order.
pub fn permutations(q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..q).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..q).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..q).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// `perm(I)`: the tuple `(I[perm[0]], .., I[perm[q-1]])`.
pub fn permute(perm: &[usize], t: &[usize]) -> Vec<usize> {
    perm.iter().map(|&p| t[p]).collect()
}

pub fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Array composition `(a . b)[t] = a[b[t]]`, so that
/// `permute(compose(a, b), I) = permute(b, permute(a, I))`.
pub fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&t| a[t]).collect()
}

// ---------------------------------------------------------------------------
// Partitions of the scenario index set

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionScenario {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub ell: usize,
    /// `2l` tuples of length `kd/2`, 0-based.
    pub tuples: Vec<Vec<usize>>,
    pub row_perms: Vec<Vec<usize>>,
    pub col_perms: Vec<Vec<usize>>,
}

impl PartitionScenario {
    pub fn new(
        n: usize,
        k: usize,
        d: usize,
        ell: usize,
        tuples: Vec<Vec<usize>>,
        row_perms: Vec<Vec<usize>>,
        col_perms: Vec<Vec<usize>>,
    ) -> Result<Self> {
        check_arity(k)?;
        if d == 0 || ell == 0 {
            return Err(Error::InvalidArgument("d and l must be positive".into()));
        }
        let q = k * d / 2;
        let len = 2 * ell;
        if tuples.len() != len || row_perms.len() != len || col_perms.len() != len {
            return Err(Error::InvalidArgument(format!("expected {len} tuples and permutations")));
        }
        for t in &tuples {
            if t.len() != q || t.iter().any(|&s| s >= n) {
                return Err(Error::InvalidArgument(format!("bad tuple {t:?}")));
            }
        }
        for p in row_perms.iter().chain(&col_perms) {
            let mut seen = vec![false; q];
            if p.len() != q || p.iter().any(|&x| x >= q || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::InvalidArgument(format!("{p:?} is not a permutation of 0..{q}")));
            }
        }
        Ok(PartitionScenario {
            n,
            k,
            d,
            ell,
            tuples,
            row_perms,
            col_perms,
        })
    }

    /// Identity row permutations.
    pub fn with_identity_rows(
        n: usize,
        k: usize,
        d: usize,
        ell: usize,
        tuples: Vec<Vec<usize>>,
        col_perms: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let q = k * d / 2;
        let id: Vec<usize> = (0..q).collect();
        Self::new(n, k, d, ell, tuples, vec![id; 2 * ell], col_perms)
    }

    /// Block pairs `(pi_j(U_{j,s}), sigma_j(U_{j+1,s}))` as codes, in
    /// lexicographic `(j, s)` order.
    pub fn entry_pairs(&self) -> Vec<(u64, u64)> {
        entry_pairs(
            self.n,
            self.k / 2,
            self.d,
            &self.tuples,
            &self.row_perms,
            &self.col_perms,
        )
    }
}

fn entry_pairs(
    n: usize,
    half: usize,
    d: usize,
    tuples: &[Vec<usize>],
    row_perms: &[Vec<usize>],
    col_perms: &[Vec<usize>],
) -> Vec<(u64, u64)> {
    let len = tuples.len();
    let mut out = Vec::with_capacity(len * d);
    for j in 0..len {
        let rows = permute(&row_perms[j], &tuples[j]);
        let cols = permute(&col_perms[j], &tuples[(j + 1) % len]);
        for s in 0..d {
            let a = tuple::encode(&rows[s * half..(s + 1) * half], n);
            let b = tuple::encode(&cols[s * half..(s + 1) * half], n);
            out.push((a, b));
        }
    }
    out
}

/// A partition of `{(j, s)}` as a restricted growth string over the
/// lexicographic order: `labels[i]` is the class of the i-th index, and
/// classes are numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IndexPartition {
    labels: Vec<u8>,
}

impl IndexPartition {
    pub fn from_labels(labels: Vec<u8>) -> Self {
        // Canonicalize to first-appearance numbering.
        let mut map: HashMap<u8, u8> = HashMap::new();
        let labels = labels
            .into_iter()
            .map(|l| {
                let next = map.len() as u8;
                *map.entry(l).or_insert(next)
            })
            .collect();
        IndexPartition { labels }
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0)
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_classes()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Classes as lists of positions in the lexicographic index order.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    pub fn is_even(&self) -> bool {
        self.class_sizes().iter().all(|s| s % 2 == 0)
    }
}

fn partition_of_pairs(pairs: &[(u64, u64)]) -> IndexPartition {
    let mut ids: HashMap<(u64, u64), u8> = HashMap::new();
    let labels = pairs
        .iter()
        .map(|&(a, b)| {
            let key = (a.min(b), a.max(b));
            let next = ids.len() as u8;
            *ids.entry(key).or_insert(next)
        })
        .collect();
    IndexPartition { labels }
}

/// `Par({I_j}, {pi_j}, {sigma_j})`: `(j,s) ~ (j',s')` iff the ordered block
/// pairs agree directly or after swapping.
pub fn compute_partition(sc: &PartitionScenario) -> IndexPartition {
    partition_of_pairs(&sc.entry_pairs())
}

// ---------------------------------------------------------------------------
// Scenario enumeration shared by the claim checkers

struct Space {
    n: usize,
    half: usize,
    d: usize,
    q: usize,
    len: usize,
    perms: Vec<Vec<usize>>,
}

impl Space {
    fn new(n: usize, k: usize, d: usize, ell: usize) -> Result<Self> {
        check_arity(k)?;
        if n == 0 || d == 0 || ell == 0 {
            return Err(Error::InvalidArgument("n, d and l must be positive".into()));
        }
        let q = k * d / 2;
        if 2 * ell * d > u8::MAX as usize {
            return Err(Error::InvalidArgument("index set too large".into()));
        }
        Ok(Space {
            n,
            half: k / 2,
            d,
            q,
            len: 2 * ell,
            perms: permutations(q),
        })
    }

    fn tuple_collections(&self) -> Result<u128> {
        (self.n as u128)
            .checked_pow((self.q * self.len) as u32)
            .ok_or_else(|| Error::budget("tuple collections", u128::MAX, u128::MAX))
    }

    fn perm_collections(&self) -> u128 {
        (self.perms.len() as u128).pow(self.len as u32)
    }

    fn tuples_at(&self, index: u128) -> Vec<Vec<usize>> {
        let side = (self.n as u128).pow(self.q as u32);
        let mut rest = index;
        let mut out = vec![Vec::new(); self.len];
        for slot in out.iter_mut().rev() {
            *slot = tuple::decode((rest % side) as u64, self.n, self.q);
            rest /= side;
        }
        out
    }

    fn perms_at(&self, index: u128) -> Vec<Vec<usize>> {
        let base = self.perms.len() as u128;
        let mut rest = index;
        let mut out = vec![Vec::new(); self.len];
        for slot in out.iter_mut().rev() {
            *slot = self.perms[(rest % base) as usize].clone();
            rest /= base;
        }
        out
    }

    fn partition(&self, tuples: &[Vec<usize>], rows: &[Vec<usize>], cols: &[Vec<usize>]) -> IndexPartition {
        partition_of_pairs(&entry_pairs(self.n, self.half, self.d, tuples, rows, cols))
    }

    fn identity_rows(&self) -> Vec<Vec<usize>> {
        vec![(0..self.q).collect(); self.len]
    }

    /// For each tuple collection (by index), the map `Q -> #{sigma}` with
    /// identity rows.
    fn sigma_counts(&self, exec: Execution) -> Result<Vec<BTreeMap<IndexPartition, u64>>> {
        let collections = self.tuple_collections()?;
        let rows = self.identity_rows();
        let sigmas = self.perm_collections();
        Ok(exec.map_range(collections as usize, |t| {
            let tuples = self.tuples_at(t as u128);
            let mut map = BTreeMap::new();
            for s in 0..sigmas {
                let cols = self.perms_at(s);
                *map.entry(self.partition(&tuples, &rows, &cols)).or_insert(0) += 1;
            }
            map
        }))
    }
}

fn mult_factorial_product(tuples: &[Vec<usize>], n: usize) -> u128 {
    tuples
        .iter()
        .map(|t| {
            tuple::multiplicities(t, n)
                .iter()
                .map(|&c| (1..=c as u128).product::<u128>())
                .product::<u128>()
        })
        .product()
}

// ---------------------------------------------------------------------------
// Row-permutation invariance: num(Q | {id}) = num(Q | {pi_j})

#[derive(Debug, Clone, Serialize)]
pub struct Claim1Report {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub ell: usize,
    pub row_perm_choices: u128,
    pub partitions: usize,
    pub scenarios: u128,
    pub mismatches: usize,
    pub pass: bool,
}

pub fn verify_claim1(n: usize, k: usize, d: usize, ell: usize, budget: u128, exec: Execution) -> Result<Claim1Report> {
    let sp = Space::new(n, k, d, ell)?;
    let per = sp.tuple_collections()?.saturating_mul(sp.perm_collections());
    let total = per.saturating_mul(sp.perm_collections());
    if total > budget {
        return Err(Error::budget("claim 1 scenarios", total, budget));
    }
    let collections = sp.tuple_collections()? as usize;
    let sigmas = sp.perm_collections();
    let counts_for = |rows: &[Vec<usize>]| -> BTreeMap<IndexPartition, u64> {
        let parts = exec.map_range(collections, |t| {
            let tuples = sp.tuples_at(t as u128);
            let mut map: BTreeMap<IndexPartition, u64> = BTreeMap::new();
            for s in 0..sigmas {
                *map.entry(sp.partition(&tuples, rows, &sp.perms_at(s))).or_insert(0) += 1;
            }
            map
        });
        let mut out = BTreeMap::new();
        for m in parts {
            for (q, c) in m {
                *out.entry(q).or_insert(0) += c;
            }
        }
        out
    };
    let reference = counts_for(&sp.identity_rows());
    let mut mismatches = 0;
    for r in 0..sp.perm_collections() {
        if counts_for(&sp.perms_at(r)) != reference {
            mismatches += 1;
        }
    }
    Ok(Claim1Report {
        n,
        k,
        d,
        ell,
        row_perm_choices: sp.perm_collections(),
        partitions: reference.len(),
        scenarios: total,
        mismatches,
        pass: mismatches == 0,
    })
}

/// The relabeling behind row-permutation invariance: with `rho_j = pi_{j+1}^{-1} . sigma_j`
/// (array composition), `Par({I_j}, {pi_j}, {sigma_j})` equals
/// `Par({pi_j(I_j)}, {id}, {rho_j})`. Checked for every scenario.
pub fn verify_relabeling(n: usize, k: usize, d: usize, ell: usize, budget: u128) -> Result<u128> {
    let sp = Space::new(n, k, d, ell)?;
    let total = sp
        .tuple_collections()?
        .saturating_mul(sp.perm_collections())
        .saturating_mul(sp.perm_collections());
    if total > budget {
        return Err(Error::budget("relabeling scenarios", total, budget));
    }
    let id = sp.identity_rows();
    let mut checked = 0u128;
    for t in 0..sp.tuple_collections()? {
        let tuples = sp.tuples_at(t);
        for r in 0..sp.perm_collections() {
            let rows = sp.perms_at(r);
            let moved: Vec<Vec<usize>> = tuples.iter().zip(&rows).map(|(t, p)| permute(p, t)).collect();
            for s in 0..sp.perm_collections() {
                let cols = sp.perms_at(s);
                let relabeled: Vec<Vec<usize>> = (0..sp.len)
                    .map(|j| compose(&inverse(&rows[(j + 1) % sp.len]), &cols[j]))
                    .collect();
                let a = sp.partition(&tuples, &rows, &cols);
                let b = sp.partition(&moved, &id, &relabeled);
                if a != b {
                    return Err(Error::InvalidArgument(format!(
                        "relabeling mismatch at tuples {tuples:?} rows {rows:?} cols {cols:?}"
                    )));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

// ---------------------------------------------------------------------------
// Counting bounds for sigma choices and tuple collections

#[derive(Debug, Clone, Serialize)]
pub struct Claim2Report {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub ell: usize,
    /// (even Q, Q-valid collection) pairs checked.
    pub checks: u64,
    /// Largest `count / bound` seen.
    pub max_ratio: f64,
    pub violations: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Claim3Report {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub ell: usize,
    pub even_partitions: usize,
    pub max_ratio: f64,
    pub violations: u64,
    pub pass: bool,
    /// `(|Q|, number of Q-valid collections, bound)` per even partition.
    pub counts: Vec<(usize, u64, u128)>,
}

fn claims_budget(sp: &Space, budget: u128) -> Result<()> {
    let total = sp.tuple_collections()?.saturating_mul(sp.perm_collections());
    if total > budget {
        return Err(Error::budget("claim scenarios", total, budget));
    }
    Ok(())
}

/// For every even `Q` and `Q`-valid `{I_j}`:
/// `#{sigma : Par({I_j}, {id}, {sigma_j}) = Q} <= q^{k|Q|/2} prod_j mult(I_j)!`.
pub fn verify_claim2(n: usize, k: usize, d: usize, ell: usize, budget: u128, exec: Execution) -> Result<Claim2Report> {
    let sp = Space::new(n, k, d, ell)?;
    claims_budget(&sp, budget)?;
    let counts = sp.sigma_counts(exec)?;
    let (mut checks, mut violations, mut max_ratio) = (0u64, 0u64, 0.0f64);
    for (t, map) in counts.iter().enumerate() {
        let weight = mult_factorial_product(&sp.tuples_at(t as u128), n);
        for (part, &count) in map {
            if !part.is_even() {
                continue;
            }
            let bound = (sp.q as u128)
                .checked_pow((k * part.num_classes() / 2) as u32)
                .and_then(|b| b.checked_mul(weight))
                .unwrap_or(u128::MAX);
            checks += 1;
            max_ratio = max_ratio.max(count as f64 / bound as f64);
            if count as u128 > bound {
                violations += 1;
            }
        }
    }
    Ok(Claim2Report {
        n,
        k,
        d,
        ell,
        checks,
        max_ratio,
        violations,
        pass: violations == 0,
    })
}

/// For every even `Q`: `#{Q-valid {I_j}} <= n^{k(|Q|+d)/2}`.
pub fn verify_claim3(n: usize, k: usize, d: usize, ell: usize, budget: u128, exec: Execution) -> Result<Claim3Report> {
    let sp = Space::new(n, k, d, ell)?;
    claims_budget(&sp, budget)?;
    let counts = sp.sigma_counts(exec)?;
    let mut valid: BTreeMap<IndexPartition, u64> = BTreeMap::new();
    for map in &counts {
        for part in map.keys().filter(|p| p.is_even()) {
            *valid.entry(part.clone()).or_insert(0) += 1;
        }
    }
    let (mut violations, mut max_ratio) = (0u64, 0.0f64);
    let mut rows = Vec::new();
    for (part, &count) in &valid {
        let size = part.num_classes();
        let bound = (n as u128)
            .checked_pow((k * (size + d) / 2) as u32)
            .unwrap_or(u128::MAX);
        max_ratio = max_ratio.max(count as f64 / bound as f64);
        if count as u128 > bound {
            violations += 1;
        }
        rows.push((size, count, bound));
    }
    Ok(Claim3Report {
        n,
        k,
        d,
        ell,
        even_partitions: valid.len(),
        max_ratio,
        violations,
        pass: violations == 0,
        counts: rows,
    })
}

// ---------------------------------------------------------------------------
// Even set partitions

#[derive(Debug, Clone, Serialize)]
pub struct EvenPartitionCount {
    pub set_size: usize,
    pub classes: usize,
    /// `N_M` by enumeration.
    pub count: u128,
    /// `N_M` by the first-block recurrence.
    pub recurrence: u128,
    /// `C(set_size, M) * M^{set_size - M}`.
    pub bound: u128,
    pub pass: bool,
}

/// Number of set partitions of `0..set_size` into exactly `M` classes, all of
/// even size, indexed by `M`. Enumerates restricted growth strings.
pub fn even_partition_counts(set_size: usize) -> Result<Vec<u128>> {
    if set_size > MAX_PARTITION_SET {
        return Err(Error::budget(
            "set partitions",
            set_size as u128,
            MAX_PARTITION_SET as u128,
        ));
    }
    let mut counts = vec![0u128; set_size + 1];
    if set_size == 0 {
        counts[0] = 1;
        return Ok(counts);
    }
    // a[i] <= 1 + max(a[..i])
    let mut a = vec![0usize; set_size];
    let mut sizes = vec![0usize; set_size];
    loop {
        sizes.iter_mut().for_each(|s| *s = 0);
        let mut blocks = 0;
        for &x in &a {
            sizes[x] += 1;
            blocks = blocks.max(x + 1);
        }
        if sizes[..blocks].iter().all(|s| s % 2 == 0) {
            counts[blocks] += 1;
        }
        // increment
        let mut i = set_size - 1;
        loop {
            if i == 0 {
                return Ok(counts);
            }
            let max_prefix = a[..i].iter().copied().max().unwrap_or(0);
            if a[i] <= max_prefix {
                a[i] += 1;
                a[i + 1..].iter_mut().for_each(|x| *x = 0);
                break;
            }
            i -= 1;
        }
    }
}

/// Count by choosing the (even) block that contains the first element.
fn even_partitions_recurrence(set_size: usize, classes: usize) -> u128 {
    let mut table = vec![vec![0u128; classes + 1]; set_size + 1];
    table[0][0] = 1;
    for s in 1..=set_size {
        for m in 1..=classes {
            let mut total = 0u128;
            let mut j = 1;
            while j < s {
                total += binom(s as u128 - 1, j as u128) * table[s - 1 - j][m - 1];
                j += 2;
            }
            table[s][m] = total;
        }
    }
    table[set_size][classes]
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

pub fn count_even_partitions(set_size: usize, classes: usize) -> Result<EvenPartitionCount> {
    let counts = even_partition_counts(set_size)?;
    let count = counts.get(classes).copied().unwrap_or(0);
    let bound = binom(set_size as u128, classes as u128)
        * (classes as u128).pow((set_size.saturating_sub(classes)) as u32);
    let recurrence = even_partitions_recurrence(set_size, classes);
    Ok(EvenPartitionCount {
        set_size,
        classes,
        count,
        recurrence,
        bound,
        pass: count == recurrence && count <= bound,
    })
}

// ---------------------------------------------------------------------------
// Trace moments: E tr(R^{2l}) against the enumerated right-hand side

#[derive(Debug, Clone, Serialize)]
pub struct Theorem13Report {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub ell: usize,
    pub p: f64,
    pub trials: usize,
    pub mc_mean: f64,
    pub mc_std_err: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Right-hand side
/// `(1/|S_q|^{2l}) sum_{Q even} (p q^{k/2})^{|Q|} sum_{Q-valid {I_j}} prod_j mult(I_j)!`
/// by exhaustive enumeration.
pub fn theorem13_rhs(n: usize, k: usize, d: usize, ell: usize, p: f64, budget: u128, exec: Execution) -> Result<f64> {
    let sp = Space::new(n, k, d, ell)?;
    claims_budget(&sp, budget)?;
    let counts = sp.sigma_counts(exec)?;
    let base = p * (sp.q as f64).powf(k as f64 / 2.0);
    let mut total = 0.0;
    for (t, map) in counts.iter().enumerate() {
        let weight = mult_factorial_product(&sp.tuples_at(t as u128), n) as f64;
        let inner: f64 = map
            .keys()
            .filter(|q| q.is_even())
            .map(|q| base.powi(q.num_classes() as i32))
            .sum();
        total += weight * inner;
    }
    let perms = factorial(sp.q).to_f64().unwrap_or(f64::INFINITY);
    Ok(total / perms.powi(sp.len as i32))
}

#[allow(clippy::too_many_arguments)]
pub fn verify_theorem13(
    n: usize,
    k: usize,
    d: usize,
    ell: usize,
    p: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Theorem13Report> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let rhs = theorem13_rhs(n, k, d, ell, p, DEFAULT_ENUM_BUDGET, exec)?;
    let cap = 4096usize;
    let samples: Vec<Result<f64>> = exec.map_range(trials, |t| {
        let inst = generate_random(n, k, p, derive_seed(seed, &[t as u64]))?;
        let r = representation(&inst, d, DEFAULT_NNZ_BUDGET)?;
        trace_power(&r.materialize_dense(cap)?, ell)
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    let (mean, se) = mean_and_std_err(&samples);
    Ok(Theorem13Report {
        n,
        k,
        d,
        ell,
        p,
        trials,
        mc_mean: mean,
        mc_std_err: se,
        rhs,
        pass: mean - 3.0 * se <= rhs,
    })
}

pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo mean of `prod_{(j,s)} S^Phi[pi_j(U_{j,s}), sigma_j(U_{j+1,s})]`
/// over random instances, with its standard error.
pub fn scenario_product_mean(
    sc: &PartitionScenario,
    p: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64)> {
    let pairs = sc.entry_pairs();
    let samples: Vec<Result<f64>> = exec.map_range(trials, |t| {
        let inst = generate_random(sc.n, sc.k, p, derive_seed(seed, &[t as u64]))?;
        let s = symmetric_flattening(&inst)?;
        Ok(pairs.iter().map(|&(a, b)| s.get(a, b)).product())
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(mean_and_std_err(&samples))
}

// ---------------------------------------------------------------------------
// Representation identities on a concrete instance

#[derive(Debug, Clone, Serialize)]
pub struct RepresentationReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub m: usize,
    pub trials: usize,
    pub max_rel_err_plain: f64,
    pub max_rel_err_rescaled: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const REPRESENTATION_TOL: f64 = 1e-9;

/// Check `f(x)^d = (x^{(x)q})^T R x^{(x)q}` and
/// `f(x)^d = (D x^{(x)q})^T R~ (D x^{(x)q})` on `trials` assignments (the
/// first is all-ones, the rest random), through the full-vector operator.
pub fn verify_representation(
    inst: &Instance,
    d: usize,
    trials: usize,
    seed: u64,
    dense_cap: usize,
) -> Result<RepresentationReport> {
    let r = representation(inst, d, DEFAULT_NNZ_BUDGET)?;
    let side = r.side();
    if side > dense_cap as u64 {
        return Err(Error::DenseTooLarge {
            side: side as u128,
            cap: dense_cap as u128,
        });
    }
    let rt = r.rescale()?;
    let (n, q) = (inst.n(), r.q());
    let plain_op = TypeSymOperator::new(&r, Execution::Sequential)?;
    let resc_op = TypeSymOperator::new(&rt, Execution::Sequential)?;
    let hist: Vec<f64> = (0..side)
        .map(|c| {
            let counts = tuple::multiplicities(&tuple::decode(c, n, q), n);
            counts
                .iter()
                .map(|&m| (1..=m).map(f64::from).product::<f64>())
                .product::<f64>()
                .sqrt()
        })
        .collect();

    let mut rng = stream_rng(seed, 3);
    let mut out = vec![0.0; side as usize];
    let (mut worst_plain, mut worst_resc) = (0.0f64, 0.0f64);
    for t in 0..trials {
        let x = if t == 0 {
            Assignment::all_ones(n)
        } else {
            Assignment::random(n, &mut rng)
        };
        let f = eval_polynomial(inst, &x)? as f64;
        let want = f.powi(d as i32);
        let v = tensor_power(&x.as_f64(), q);
        plain_op.apply(&v, &mut out);
        let plain: f64 = out.iter().zip(&v).map(|(a, b)| a * b).sum();
        let dv: Vec<f64> = v.iter().zip(&hist).map(|(a, h)| a * h).collect();
        resc_op.apply(&dv, &mut out);
        let resc: f64 = out.iter().zip(&dv).map(|(a, b)| a * b).sum();
        let scale = want.abs().max(1.0);
        worst_plain = worst_plain.max((plain - want).abs() / scale);
        worst_resc = worst_resc.max((resc - want).abs() / scale);
    }
    Ok(RepresentationReport {
        n,
        k: inst.k(),
        d,
        m: inst.m(),
        trials,
        max_rel_err_plain: worst_plain,
        max_rel_err_rescaled: worst_resc,
        tolerance: REPRESENTATION_TOL,
        pass: worst_plain <= REPRESENTATION_TOL && worst_resc <= REPRESENTATION_TOL,
    })
}

// ---------------------------------------------------------------------------
// Structural inequalities on a concrete instance

#[derive(Debug, Clone, Serialize)]
pub struct StructuralReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub norm_plain: f64,
    pub norm_rescaled: f64,
    /// `(tau, ||trim(R, tau)||)`.
    pub norm_trimmed: Vec<(usize, f64)>,
    pub norm_flattening: f64,
    pub norm_kron_power: f64,
    /// `| ||S^{Phi,d}|| - ||S^Phi||^d | / max(1, ||S^Phi||^d)`.
    pub kron_rel_err: f64,
    /// `(l, ||R~||^{2l}, tr(R~^{2l}))`.
    pub trace_checks: Vec<(usize, f64, f64)>,
    /// Whether the traces came from the full materialized `R~` rather than
    /// its type quotient.
    pub trace_materialized: bool,
    pub pass: bool,
}

pub const KRON_TOL: f64 = 1e-8;

fn le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + 1e-9) + 1e-12
}

/// `||R~|| <= ||R||`, `||trim(R, tau)|| <= ||R||` for `tau in {1, 2, q}`,
/// `||S^{Phi,d}|| = ||S^Phi||^d`, and `||R~||^{2l} <= tr(R~^{2l})` for
/// `l = 1, 2, 3`. Matrices with side above `dense_cap` go through Lanczos
/// and the type quotient instead of dense eigensolves.
pub fn verify_structural(inst: &Instance, d: usize, dense_cap: usize) -> Result<StructuralReport> {
    use crate::certify::{spectral_norm, CertifyOptions};
    use crate::repmatrix::kron_power;
    use crate::spectral::{spectral_norm_dense, spectral_norm_iterative, IterativeOptions};

    let r = representation(inst, d, DEFAULT_NNZ_BUDGET)?;
    let quotient = CertifyOptions::default();
    let norm = |m: &crate::repmatrix::TypeSymMatrix| spectral_norm(m, &quotient).map(|x| x.0);
    let norm_plain = norm(&r)?;
    let rt = r.rescale()?;
    let norm_rescaled = norm(&rt)?;
    let mut taus = vec![1, 2, r.q()];
    taus.dedup();
    let norm_trimmed = taus
        .iter()
        .map(|&t| Ok((t, norm(&r.trim(t)?)?)))
        .collect::<Result<Vec<_>>>()?;

    let s = symmetric_flattening(inst)?;
    let norm_flattening = spectral_norm_dense(&s.to_dense(DEFAULT_DENSE_CAP)?)?.norm_estimate;
    let sd = kron_power(&s, d, DEFAULT_NNZ_BUDGET)?;
    let norm_kron_power = if sd.side() <= dense_cap as u64 {
        spectral_norm_dense(&sd.to_dense(dense_cap)?)?.norm_estimate
    } else {
        let opts = IterativeOptions {
            tol: 1e-12,
            ..IterativeOptions::default()
        };
        spectral_norm_iterative(&sd, &opts)?.norm_estimate
    };
    let want = norm_flattening.powi(d as i32);
    let kron_rel_err = (norm_kron_power - want).abs() / want.max(1.0);

    // R = E B E^T with E^T E = C, so tr(R^j) = tr((C^{1/2} B C^{1/2})^j)
    // and the quotient stands in once the full matrix is too large.
    let materialized = rt.side() <= dense_cap as u64;
    let traced = if materialized {
        rt.materialize_dense(dense_cap)?
    } else {
        rt.quotient_matrix()
    };
    let trace_checks = (1..=3)
        .map(|l| Ok((l, norm_rescaled.powi(2 * l as i32), trace_power(&traced, l)?)))
        .collect::<Result<Vec<_>>>()?;

    let pass = le(norm_rescaled, norm_plain)
        && norm_trimmed.iter().all(|&(_, t)| le(t, norm_plain))
        && kron_rel_err <= KRON_TOL
        && trace_checks.iter().all(|&(_, a, b)| le(a, b));
    Ok(StructuralReport {
        n: inst.n(),
        k: inst.k(),
        d,
        norm_plain,
        norm_rescaled,
        norm_trimmed,
        norm_flattening,
        norm_kron_power,
        kron_rel_err,
        trace_checks,
        trace_materialized: materialized,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Bundled suite

/// `(n, k, d, l)` grid for the claim checkers.
pub const CLAIM_CONFIGS: [(usize, usize, usize, usize); 5] =
    [(2, 2, 1, 1), (2, 2, 1, 2), (2, 4, 1, 1), (3, 2, 1, 1), (3, 4, 1, 1)];

/// `(n, k, d, l, p)` grid for the trace-moment check.
pub const THEOREM13_CONFIGS: [(usize, usize, usize, usize, f64); 3] =
    [(2, 2, 1, 1, 0.5), (3, 2, 1, 1, 1.0 / 3.0), (2, 4, 1, 1, 0.25)];

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub budget: u128,
    pub theorem13_trials: usize,
    pub seed: u64,
    pub max_partition_set: usize,
    pub exec: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            budget: DEFAULT_ENUM_BUDGET,
            theorem13_trials: 2000,
            seed: 0,
            max_partition_set: 10,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub claim1: Vec<Claim1Report>,
    pub relabeling_checked: Vec<u128>,
    pub claim2: Vec<Claim2Report>,
    pub claim3: Vec<Claim3Report>,
    pub claim4: Vec<EvenPartitionCount>,
    pub hist_sum: HistSumReport,
    pub theorem13: Vec<Theorem13Report>,
    pub pass: bool,
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut claim1 = Vec::new();
    let mut relabeling_checked = Vec::new();
    let mut claim2 = Vec::new();
    let mut claim3 = Vec::new();
    for &(n, k, d, l) in &CLAIM_CONFIGS {
        claim1.push(verify_claim1(n, k, d, l, cfg.budget, cfg.exec)?);
        relabeling_checked.push(verify_relabeling(n, k, d, l, cfg.budget)?);
        claim2.push(verify_claim2(n, k, d, l, cfg.budget, cfg.exec)?);
        claim3.push(verify_claim3(n, k, d, l, cfg.budget, cfg.exec)?);
    }
    let mut claim4 = Vec::new();
    for size in 2..=cfg.max_partition_set {
        for m in 1..=size / 2 {
            claim4.push(count_even_partitions(size, m)?);
        }
    }
    let hist = verify_hist_sum(6, 6)?;
    let theorem13 = THEOREM13_CONFIGS
        .iter()
        .enumerate()
        .map(|(i, &(n, k, d, l, p))| {
            verify_theorem13(n, k, d, l, p, cfg.theorem13_trials, derive_seed(cfg.seed, &[i as u64]), cfg.exec)
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = claim1.iter().all(|r| r.pass)
        && claim2.iter().all(|r| r.pass)
        && claim3.iter().all(|r| r.pass)
        && claim4.iter().all(|r| r.pass)
        && hist.pass
        && theorem13.iter().all(|r| r.pass);
    Ok(SuiteReport {
        claim1,
        relabeling_checked,
        claim2,
        claim3,
        claim4,
        hist_sum: hist,
        theorem13,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Histogram-sum closed form

#[derive(Debug, Clone, Serialize)]
pub struct HistSumReport {
    pub checked: usize,
    pub mismatches: Vec<(usize, usize)>,
    pub bound_violations: Vec<(usize, usize, usize)>,
    pub pass: bool,
}

/// Closed form against enumeration for all `1 <= n <= max_n`,
/// `1 <= q <= max_q`; and, for every even `k <= 2 max_q` and `d <= n` with
/// `kd/2 <= max_q`, the bound `hist_sum <= (k/2+1)^q n^q`.
pub fn verify_hist_sum(max_n: usize, max_q: usize) -> Result<HistSumReport> {
    let mut mismatches = Vec::new();
    let mut violations = Vec::new();
    let mut checked = 0;
    for n in 1..=max_n {
        for q in 1..=max_q {
            checked += 1;
            if hist_sum(n, q) != hist_sum_enumerated(n, q, DEFAULT_ENUM_BUDGET)? {
                mismatches.push((n, q));
            }
        }
        for k in (2..=2 * max_q).step_by(2) {
            for d in 1..=n {
                let q = k * d / 2;
                if q > max_q {
                    break;
                }
                let bound = BigUint::from(k / 2 + 1).pow(q as u32) * BigUint::from(n).pow(q as u32);
                if hist_sum(n, q) > bound {
                    violations.push((n, k, d));
                }
            }
        }
    }
    Ok(HistSumReport {
        checked,
        pass: mismatches.is_empty() && violations.is_empty(),
        mismatches,
        bound_violations: violations,
    })
}

/// Distinct types (multisets) of `q`-tuples over `0..n`, by enumeration.
pub fn count_types(n: usize, q: usize) -> usize {
    let mut seen = HashSet::new();
    for t in tuple::Tuples::new(n, q) {
        let mut s = t;
        s.sort_unstable();
        seen.insert(s);
    }
    seen.len()
}
