//! Integer partitions in exponent form `1^{i_1} 2^{i_2} …`, the S-weighted
//! sets `ℋ_{rk}`, and bracket values `[π]`.

use crate::error::{Error, Result};
use crate::ring::{factorial, Coeff, Q};
use num_traits::One;
use std::fmt;
use std::str::FromStr;

/// `S(k) = k` for `k ≤ 2`, `k - 2` for `k ≥ 3`.
pub fn s_weight(k: usize) -> Result<usize> {
    match k {
        0 => Err(Error::Domain("S-weight is defined for parts ≥ 1".into())),
        1 | 2 => Ok(k),
        _ => Ok(k - 2),
    }
}

fn s_of(k: usize) -> usize {
    if k <= 2 {
        k
    } else {
        k - 2
    }
}

/// A multiset of positive parts, stored as ascending `(part, multiplicity)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Partition {
    parts: Vec<(usize, usize)>,
}

impl Partition {
    pub fn from_parts(mut ps: Vec<usize>) -> Result<Self> {
        if ps.contains(&0) {
            return Err(Error::Domain("partition parts must be positive".into()));
        }
        ps.sort_unstable();
        let mut parts: Vec<(usize, usize)> = Vec::new();
        for p in ps {
            match parts.last_mut() {
                Some((q, m)) if *q == p => *m += 1,
                _ => parts.push((p, 1)),
            }
        }
        Ok(Partition { parts })
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.parts
    }

    pub fn multiplicity(&self, k: usize) -> usize {
        self.parts.iter().find(|(p, _)| *p == k).map_or(0, |&(_, m)| m)
    }

    /// Sum of the parts.
    pub fn size(&self) -> usize {
        self.parts.iter().map(|&(p, m)| p * m).sum()
    }

    /// `Σ S(k) i_k`.
    pub fn weight(&self) -> usize {
        self.parts.iter().map(|&(p, m)| s_of(p) * m).sum()
    }

    /// Number of parts counted with multiplicity.
    pub fn count(&self) -> usize {
        self.parts.iter().map(|&(_, m)| m).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn largest(&self) -> usize {
        self.parts.last().map_or(0, |&(p, _)| p)
    }

    /// Parts listed with repetition, ascending.
    pub fn flat(&self) -> Vec<usize> {
        self.parts.iter().flat_map(|&(p, m)| std::iter::repeat_n(p, m)).collect()
    }

    /// `Π i_k!`.
    pub fn multiplicity_factorial(&self) -> Q {
        self.parts.iter().fold(Q::one(), |acc, &(_, m)| acc * factorial(m))
    }

    /// Add parts (e.g. to form `2π` from `π`).
    pub fn with_parts(&self, extra: &[usize]) -> Partition {
        let mut v = self.flat();
        v.extend_from_slice(extra);
        Partition::from_parts(v).expect("parts are positive")
    }
}

impl Ord for Partition {
    /// Size, then fewer parts first, then lexicographic on descending parts.
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        let mut a = self.flat();
        let mut b = o.flat();
        a.reverse();
        b.reverse();
        self.size().cmp(&o.size()).then(a.len().cmp(&b.len())).then_with(|| b.cmp(&a))
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Partition {
    /// Canonical text: parts ascending, `^m` for multiplicity above one,
    /// e.g. `1^2 3^2`; the empty partition prints as `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "()");
        }
        for (n, &(p, m)) in self.parts.iter().enumerate() {
            if n > 0 {
                write!(f, " ")?;
            }
            if m == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{m}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts the canonical text form.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "()" || s.is_empty() {
            return Ok(Partition::default());
        }
        let mut v = Vec::new();
        for tok in s.split_whitespace() {
            let (p, m) = match tok.split_once('^') {
                Some((p, m)) => (p, m),
                None => (tok, "1"),
            };
            let p: usize = p.parse().map_err(|_| Error::Parse(format!("bad part in {s:?}")))?;
            let m: usize =
                m.parse().map_err(|_| Error::Parse(format!("bad multiplicity in {s:?}")))?;
            v.extend(std::iter::repeat_n(p, m));
        }
        Partition::from_parts(v)
    }
}

/// All partitions of `k`.
pub fn partitions_of(k: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(rem: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition::from_parts(cur.clone()).unwrap());
            return;
        }
        for p in min..=rem {
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    rec(k, 1, &mut cur, &mut out);
    out
}

/// `ℋ_{rk}`: partitions of `k` with S-weight `r`, by DFS with weight pruning.
pub fn hset(r: usize, k: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if k < r || k > 3 * r || (k - r) % 2 == 1 {
        return out;
    }
    let mut cur = Vec::new();
    fn rec(
        rem_size: usize,
        rem_w: usize,
        min: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Partition>,
    ) {
        if rem_size == 0 {
            if rem_w == 0 {
                out.push(Partition::from_parts(cur.clone()).unwrap());
            }
            return;
        }
        for p in min..=rem_size {
            let w = s_of(p);
            if w > rem_w {
                continue;
            }
            // each remaining unit of size carries at most weight 1 and at least 1/3
            let rem_after = rem_size - p;
            let w_after = rem_w - w;
            if w_after > rem_after || 3 * w_after < rem_after {
                continue;
            }
            cur.push(p);
            rec(rem_after, w_after, p, cur, out);
            cur.pop();
        }
    }
    rec(k, r, 1, &mut cur, &mut out);
    out.sort();
    out
}

/// Every partition of S-weight `r` (the union of `ℋ_{rk}` over `k`).
pub fn weight_partitions(r: usize) -> Vec<Partition> {
    (r..=3 * r).step_by(2).flat_map(|k| hset(r, k)).collect()
}

/// `[π] = Π L_k^{i_k}/i_k!`.
pub fn bracket<T: Coeff>(pi: &Partition, l: &crate::bell::Seq<T>) -> Result<T> {
    let mut acc = T::unit();
    for &(p, m) in pi.exponents() {
        acc = acc.times(&l.get(p)?.powi(m as u32));
    }
    Ok(acc.scale(&(Q::one() / pi.multiplicity_factorial())))
}

/// Truncated power series in `n^{-1}` for each `L_k`.
#[derive(Clone, Debug)]
pub struct LSeries<T> {
    /// `series[k-1][j]` is the `n^{-j}` coefficient of `L_k`.
    series: Vec<Vec<T>>,
    order: usize,
}

impl<T: Coeff> LSeries<T> {
    /// Every `L_k` must carry exactly `order + 1` coefficients.
    pub fn new(series: Vec<Vec<T>>, order: usize) -> Result<Self> {
        if series.iter().any(|s| s.len() != order + 1) {
            return Err(Error::Domain("L-series truncation must be uniform".into()));
        }
        Ok(LSeries { series, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn max_index(&self) -> usize {
        self.series.len()
    }

    pub fn coeff(&self, k: usize, j: usize) -> Result<&T> {
        if j > self.order {
            return Err(Error::Truncation { want: j, have: self.order });
        }
        let s = self
            .series
            .get(k.wrapping_sub(1))
            .ok_or(Error::Length { needed: k, available: self.series.len() })?;
        Ok(&s[j])
    }

    /// Leading terms `L_0`.
    pub fn leading(&self) -> crate::bell::Seq<T> {
        crate::bell::Seq::new(self.series.iter().map(|s| s[0].clone()).collect())
    }
}

fn series_mul<T: Coeff>(a: &[T], b: &[T], upto: usize) -> Vec<T> {
    let mut out = vec![T::nil(); upto + 1];
    for (i, x) in a.iter().enumerate().take(upto + 1) {
        if x.is_nil() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(upto + 1 - i) {
            out[i + j] = out[i + j].plus(&x.times(y));
        }
    }
    out
}

/// `[π]_i`: the `n^{-i}` coefficient of `Π L_k(n)^{i_k}/i_k!`.
pub fn bracket_series_coeff<T: Coeff>(pi: &Partition, l: &LSeries<T>, i: usize) -> Result<T> {
    if i > l.order() {
        return Err(Error::Truncation { want: i, have: l.order() });
    }
    let mut acc = vec![T::unit()];
    acc.resize(i + 1, T::nil());
    for &(p, m) in pi.exponents() {
        let s: Vec<T> = (0..=i).map(|j| l.coeff(p, j).cloned()).collect::<Result<_>>()?;
        for _ in 0..m {
            acc = series_mul(&acc, &s, i);
        }
    }
    Ok(acc[i].scale(&(Q::one() / pi.multiplicity_factorial())))
}
