//! Row-major base-n coding of tuples over `0..n`.
//!
//! A tuple `(s_1, .., s_q)` maps to `sum_i s_i * n^(q-i)`. Coordinates here
//! are 0-based; the instance file format is the only place that uses 1-based
//! coordinates.

use crate::error::{Error, Result};

/// `n^q` as `u64`, or `BudgetExceeded` if it does not fit.
pub fn checked_side(n: usize, q: usize) -> Result<u64> {
    (n as u64)
        .checked_pow(q as u32)
        .ok_or_else(|| Error::budget(format!("index space {n}^{q}"), u128::MAX, u64::MAX as u128))
}

pub fn encode(tuple: &[usize], n: usize) -> u64 {
    tuple
        .iter()
        .fold(0u64, |acc, &s| acc * n as u64 + s as u64)
}

pub fn decode(code: u64, n: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0usize; len];
    decode_into(code, n, &mut out);
    out
}

pub fn decode_into(mut code: u64, n: usize, out: &mut [usize]) {
    let n = n as u64;
    for slot in out.iter_mut().rev() {
        *slot = (code % n) as usize;
        code /= n;
    }
}

/// Code of the sorted (non-decreasing) rearrangement of the tuple with the
/// given code. This is the type key of a row or column index.
pub fn sorted_code(code: u64, n: usize, len: usize, scratch: &mut Vec<usize>) -> u64 {
    scratch.resize(len, 0);
    decode_into(code, n, scratch);
    scratch.sort_unstable();
    encode(scratch, n)
}

/// Concatenate codes of blocks, each of `block_len` coordinates.
pub fn concat(parts: &[u64], n: usize, block_len: usize) -> u64 {
    let base = (n as u64).pow(block_len as u32);
    parts.iter().fold(0u64, |acc, &c| acc * base + c)
}

/// Multiplicity vector of a tuple over `0..n`.
pub fn multiplicities(tuple: &[usize], n: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for &s in tuple {
        counts[s] += 1;
    }
    counts
}

/// Largest multiplicity of any value in the tuple.
pub fn max_multiplicity(tuple: &[usize]) -> usize {
    // Works on unsorted input; tuples are short.
    let mut best = 0;
    for (i, &a) in tuple.iter().enumerate() {
        let c = tuple[i..].iter().filter(|&&b| b == a).count();
        best = best.max(c);
    }
    best
}

/// Iterator over all tuples of `0..n` of length `len`, in code order.
pub struct Tuples {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Tuples {
    pub fn new(n: usize, len: usize) -> Self {
        let current = if n == 0 && len > 0 {
            None
        } else {
            Some(vec![0; len])
        };
        Tuples { n, current }
    }
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < self.n {
                break;
            }
            cur[i] = 0;
        }
        Some(out)
    }
}
