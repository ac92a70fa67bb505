//! k-XOR instances: the random tuple model, evaluation, and the text format.
//!
//! An instance over `n` variables holds distinct ordered `k`-tuples, each with
//! a sign `eta`. The constraint on tuple `S` is `prod_i x[S_i] = eta`. Tuples
//! may repeat a coordinate; `(1, 1, 3, 3)` is as valid as `(1, 2, 3, 4)`.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, mix64, stream_rng};
use crate::tuple;

pub const FILE_HEADER: &str = "# xor-instance v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::BadSign(other.to_string())),
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// One parity constraint. `tuple` holds 0-based variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub tuple: Vec<usize>,
    pub sign: Sign,
}

impl Constraint {
    pub fn new(tuple: Vec<usize>, sign: Sign) -> Self {
        Constraint { tuple, sign }
    }

    /// Build from 1-based coordinates, as written in files and in the
    /// mathematical notation.
    pub fn one_based(tuple: &[usize], sign: i64) -> Result<Self> {
        let sign = Sign::from_value(sign)?;
        let tuple = tuple
            .iter()
            .map(|&s| {
                s.checked_sub(1)
                    .ok_or(Error::IndexOutOfRange { coord: s, n: 0 })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Constraint { tuple, sign })
    }

    /// `prod_i x[S_i]`.
    pub fn parity(&self, x: &Assignment) -> i64 {
        self.tuple.iter().map(|&s| x.values[s] as i64).product()
    }

    pub fn is_satisfied(&self, x: &Assignment) -> bool {
        self.parity(x) == self.sign.value()
    }
}

/// A point of `{+1, -1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<i8>,
}

impl Assignment {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::BadSign(bad.to_string()));
        }
        Ok(Assignment { values })
    }

    pub fn all_ones(n: usize) -> Self {
        Assignment { values: vec![1; n] }
    }

    /// Bit `i` of `bits` set means `x_i = -1`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        let values = (0..n)
            .map(|i| if (bits >> i) & 1 == 1 { -1 } else { 1 })
            .collect();
        Assignment { values }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let values = (0..n)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Assignment { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn negated(&self) -> Self {
        Assignment {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Exact satisfied fraction `satisfied / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SatFraction {
    pub satisfied: usize,
    pub total: usize,
}

impl SatFraction {
    pub fn as_f64(self) -> f64 {
        self.satisfied as f64 / self.total as f64
    }

    /// `|sat - 1/2|` as a float; exact inputs, one rounding.
    pub fn excess(self) -> f64 {
        (2.0 * self.satisfied as f64 - self.total as f64).abs() / (2.0 * self.total as f64)
    }
}

impl PartialOrd for SatFraction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        let a = self.satisfied as u128 * other.total as u128;
        let b = other.satisfied as u128 * self.total as u128;
        Some(a.cmp(&b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    k: usize,
    constraints: Vec<Constraint>,
    seed: Option<u64>,
    p: Option<f64>,
}

impl Instance {
    /// Validates arity, coordinate range and tuple distinctness.
    pub fn new(n: usize, k: usize, constraints: Vec<Constraint>) -> Result<Self> {
        check_arity(k)?;
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        tuple::checked_side(n, k)?;
        let mut seen = HashSet::with_capacity(constraints.len());
        for c in &constraints {
            if c.tuple.len() != k {
                return Err(Error::InvalidArgument(format!(
                    "constraint has {} coordinates, expected k={k}",
                    c.tuple.len()
                )));
            }
            if let Some(&s) = c.tuple.iter().find(|&&s| s >= n) {
                return Err(Error::IndexOutOfRange { coord: s + 1, n });
            }
            if !seen.insert(&c.tuple) {
                return Err(Error::DuplicateConstraint {
                    tuple: c.tuple.iter().map(|s| s + 1).collect(),
                });
            }
        }
        Ok(Instance {
            n,
            k,
            constraints,
            seed: None,
            p: None,
        })
    }

    pub fn with_provenance(mut self, seed: Option<u64>, p: Option<f64>) -> Self {
        self.seed = seed;
        self.p = p;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    /// Expected constraints per `n^(k-1)`, when `p` is known.
    pub fn density(&self) -> Option<f64> {
        self.p.map(|p| p * (self.n as f64).powi(self.k as i32 - 1))
    }

    /// Same tuples with every sign flipped.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.constraints {
            c.sign = c.sign.negate();
        }
        out
    }

    pub fn sat_fraction(&self, x: &Assignment) -> Result<SatFraction> {
        if self.constraints.is_empty() {
            return Err(Error::EmptyInstance);
        }
        self.check_assignment(x)?;
        let satisfied = self
            .constraints
            .iter()
            .filter(|c| c.is_satisfied(x))
            .count();
        Ok(SatFraction {
            satisfied,
            total: self.m(),
        })
    }

    pub(crate) fn check_assignment(&self, x: &Assignment) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_arity(k: usize) -> Result<()> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::UnsupportedArity(k));
    }
    Ok(())
}

/// Sample from the random k-XOR model: each of the `n^k` ordered tuples is
/// kept independently with probability `p` and gets an independent uniform
/// sign.
///
/// The tuple count is drawn from `Binomial(n^k, p)` and that many distinct
/// codes are chosen uniformly, which has the same law as per-tuple coin flips.
/// Signs are a hash of `(seed, code)`, so a tuple's sign does not depend on
/// which other tuples were drawn.
pub fn generate_random(n: usize, k: usize, p: f64, seed: u64) -> Result<Instance> {
    check_arity(k)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let total = tuple::checked_side(n, k)?;
    let mut rng = stream_rng(seed, 0);
    let m = Binomial::new(total, p)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(&mut rng);

    let mut codes = if m <= total / 2 {
        floyd_sample(&mut rng, total, m)
    } else {
        let excluded: HashSet<u64> = floyd_sample(&mut rng, total, total - m).into_iter().collect();
        (0..total).filter(|c| !excluded.contains(c)).collect()
    };
    codes.sort_unstable();

    let sign_key = derive_seed(seed, &[1]);
    let constraints = codes
        .into_iter()
        .map(|code| {
            let sign = if mix64(sign_key ^ code) & 1 == 0 {
                Sign::Plus
            } else {
                Sign::Minus
            };
            Constraint::new(tuple::decode(code, n, k), sign)
        })
        .collect();

    Ok(Instance {
        n,
        k,
        constraints,
        seed: Some(seed),
        p: Some(p),
    })
}

/// Floyd's algorithm: `count` distinct values from `0..total`.
fn floyd_sample<R: Rng + ?Sized>(rng: &mut R, total: u64, count: u64) -> Vec<u64> {
    let mut chosen = HashSet::with_capacity(count as usize);
    let mut out = Vec::with_capacity(count as usize);
    for j in (total - count)..total {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out
}

/// Serialize in the `# xor-instance v1` text format.
pub fn save_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(FILE_HEADER);
    out.push('\n');
    let _ = writeln!(out, "n={} k={}", inst.n, inst.k);
    match (inst.seed, inst.p) {
        (None, None) => {}
        (seed, p) => {
            out.push_str("# provenance");
            if let Some(s) = seed {
                let _ = write!(out, " seed={s}");
            }
            if let Some(p) = p {
                let _ = write!(out, " p={p:?}");
            }
            out.push('\n');
        }
    }
    for c in &inst.constraints {
        for s in &c.tuple {
            let _ = write!(out, "{} ", s + 1);
        }
        let _ = writeln!(out, "{}", c.sign);
    }
    out
}

/// Parse the `# xor-instance v1` text format.
pub fn load_instance(text: &str) -> Result<Instance> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    match lines.next() {
        Some((_, FILE_HEADER)) => {}
        Some((line, other)) => {
            return Err(Error::Parse {
                line,
                msg: format!("expected header {FILE_HEADER:?}, found {other:?}"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty input".into(),
            })
        }
    }

    let mut seed = None;
    let mut p = None;
    let mut dims: Option<(usize, usize)> = None;
    let mut constraints = Vec::new();
    let mut seen = HashSet::new();

    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            if let Some(prov) = rest.trim().strip_prefix("provenance") {
                parse_provenance(prov, line, &mut seed, &mut p)?;
            }
            continue;
        }
        let Some((n, k)) = dims else {
            let parsed = parse_dims(l, line)?;
            check_arity(parsed.1)?;
            if parsed.0 == 0 {
                return Err(Error::Parse {
                    line,
                    msg: "n must be at least 1".into(),
                });
            }
            tuple::checked_side(parsed.0, parsed.1)?;
            dims = Some(parsed);
            continue;
        };

        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != k + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {k} coordinates and a sign, found {} fields", tokens.len()),
            });
        }
        let mut tup = Vec::with_capacity(k);
        for tok in &tokens[..k] {
            let coord: usize = tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad coordinate {tok:?}"),
            })?;
            if coord == 0 || coord > n {
                return Err(Error::IndexOutOfRange { coord, n });
            }
            tup.push(coord - 1);
        }
        let sign = match tokens[k] {
            "+1" => Sign::Plus,
            "-1" => Sign::Minus,
            other => return Err(Error::BadSign(other.to_string())),
        };
        if !seen.insert(tup.clone()) {
            return Err(Error::DuplicateConstraint {
                tuple: tup.iter().map(|s| s + 1).collect(),
            });
        }
        constraints.push(Constraint::new(tup, sign));
    }

    let Some((n, k)) = dims else {
        return Err(Error::Parse {
            line: 2,
            msg: "missing `n=<int> k=<int>` line".into(),
        });
    };
    Ok(Instance {
        n,
        k,
        constraints,
        seed,
        p,
    })
}

fn parse_dims(l: &str, line: usize) -> Result<(usize, usize)> {
    let mut n = None;
    let mut k = None;
    for tok in l.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected key=value, found {tok:?}"),
        })?;
        let val: usize = val.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad integer in {tok:?}"),
        })?;
        match key {
            "n" => n = Some(val),
            "k" => k = Some(val),
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key {key:?}"),
                })
            }
        }
    }
    match (n, k) {
        (Some(n), Some(k)) => Ok((n, k)),
        _ => Err(Error::Parse {
            line,
            msg: "expected `n=<int> k=<int>`".into(),
        }),
    }
}

fn parse_provenance(
    rest: &str,
    line: usize,
    seed: &mut Option<u64>,
    p: &mut Option<f64>,
) -> Result<()> {
    for tok in rest.split_whitespace() {
        let bad = || Error::Parse {
            line,
            msg: format!("bad provenance field {tok:?}"),
        };
        match tok.split_once('=') {
            Some(("seed", v)) => *seed = Some(v.parse().map_err(|_| bad())?),
            Some(("p", v)) => *p = Some(v.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    Ok(())
}
