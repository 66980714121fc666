//! Symbolic algebra over the generalized Hermite functions
//! `H_r = p^{-1}(-D)^r p`: the derivative `D`, the Hill–Davis ladder
//! objects `c_k` and `D_k`, and the conversions between the `H`, `a`
//! (`a_r = D^r(-ln p)`) and `b` (`b_r = (H_1 + D)^r 1`) sequences.

use crate::bell::{ExpBellTable, Seq};
use crate::error::Result;
use crate::poly::{Poly, Var};
use crate::ring::{binomial, factorial, qi};
use std::collections::BTreeMap;

/// Polynomial in `H_1, H_2, …` (and possibly other symbols treated as constants).
pub type HPoly = Poly;

pub fn hp_diff(p: &HPoly) -> HPoly {
    p.diff()
}

fn h_seq(n: usize) -> Seq<Poly> {
    Seq::new((1..=n).map(Poly::h).collect())
}

fn a_seq(n: usize) -> Seq<Poly> {
    Seq::new((1..=n).map(|k| Poly::var(Var::A(k as u16))).collect())
}

/// `H_r` in terms of `a`: `(-1)^r B_r(-a)`.
pub fn h_from_a(r: usize) -> Result<Poly> {
    if r == 0 {
        return Ok(Poly::one());
    }
    let neg = a_seq(r).map(|_, v| -v);
    let c = crate::bell::complete_bell(r, &neg)?;
    Ok(if r % 2 == 1 { -c } else { c })
}

/// `a_r` in terms of `H`: `Σ_j (-1)^{r-j} (j-1)! B_{rj}(H)`.
pub fn a_from_h(r: usize) -> Result<Poly> {
    let table = ExpBellTable::new(&h_seq(r), r)?;
    let mut acc = Poly::zero();
    for j in 1..=r {
        let s = if (r - j) % 2 == 0 { 1 } else { -1 };
        acc = acc + table.get(r, j)?.scale_q(&(factorial(j - 1) * qi(s)));
    }
    Ok(acc)
}

/// `b_r = B_r(a)` in terms of `a`.
pub fn b_from_a(r: usize) -> Result<Poly> {
    crate::bell::complete_bell(r, &a_seq(r.max(1)))
}

/// `b_r = (H_1 + D)^r 1` in terms of `H`.
pub fn b_in_h(r: usize) -> Poly {
    let mut b = Poly::one();
    let h1 = Poly::h(1);
    for _ in 0..r {
        b = &h1 * &b + b.diff();
    }
    b
}

/// Rewrite an `a`-polynomial in the `H` basis.
pub fn a_to_h(p: &Poly) -> Result<Poly> {
    let mut cache = BTreeMap::new();
    for v in p.variables() {
        if let Var::A(k) = v {
            cache.insert(k, a_from_h(k as usize)?);
        }
    }
    Ok(p.substitute(|v| match v {
        Var::A(k) => cache.get(&k).cloned(),
        _ => None,
    }))
}

/// Rewrite an `H`-polynomial in the `a` basis.
pub fn h_to_a(p: &Poly) -> Result<Poly> {
    let mut cache = BTreeMap::new();
    for v in p.variables() {
        if let Var::H(k) = v {
            cache.insert(k, h_from_a(k as usize)?);
        }
    }
    Ok(p.substitute(|v| match v {
        Var::H(k) => cache.get(&k).cloned(),
        _ => None,
    }))
}

/// `H_{r·k} = D^k H_r = Σ_i C(k,i) (-1)^i b_{k-i} H_{r+i}`.
pub fn hermite_derivative(r: usize, k: usize) -> Poly {
    let mut acc = Poly::zero();
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        let t = &b_in_h(k - i) * &Poly::h(r + i);
        acc = acc + t.scale_q(&(binomial(k, i) * qi(sign)));
    }
    acc
}

/// Classical probabilists' Hermite polynomial `He_r(x)`.
pub fn hermite_he(r: usize) -> Poly {
    let mut prev = Poly::one();
    if r == 0 {
        return prev;
    }
    let mut cur = Poly::x();
    for k in 1..r {
        let next = &Poly::x() * &cur - prev.scale_q(&qi(k as i64));
        prev = cur;
        cur = next;
    }
    cur
}

/// Specialize an `H`-polynomial to the normal base, `H_r = He_r(x)`.
pub fn to_normal(p: &Poly) -> Poly {
    p.substitute(|v| match v {
        Var::H(k) => Some(hermite_he(k as usize)),
        _ => None,
    })
}

/// Hill–Davis `c_1, …, c_k`: `c_1 = 1`, `c_{j+1} = j H_1 c_j + D c_j`.
pub fn c_functions(k: usize) -> Vec<Poly> {
    let mut out = vec![Poly::one()];
    for m in 1..k {
        let prev = &out[m - 1];
        let next = Poly::h(1).scale_q(&qi(m as i64)) * prev.clone() + prev.diff();
        out.push(next);
    }
    out.truncate(k);
    out
}

/// Hill–Davis `c_k`.
pub fn c_function(k: usize) -> Poly {
    assert!(k >= 1, "c_k is defined for k ≥ 1");
    c_functions(k).pop().expect("k ≥ 1")
}

/// `J_m p = m H_1 p - D p`.
pub fn apply_j(m: usize, p: &Poly) -> Poly {
    Poly::h(1).scale_q(&qi(m as i64)) * p.clone() - p.diff()
}

/// `D_k p` with `D_1 = id` and `D_k = J_1 ∘ J_2 ∘ … ∘ J_{k-1}`: `J_{k-1}`
/// acts first and `J_1` last.
pub fn apply_dk(k: usize, p: &Poly) -> Poly {
    assert!(k >= 1, "D_k is defined for k ≥ 1");
    let mut out = p.clone();
    for m in (1..k).rev() {
        out = apply_j(m, &out);
    }
    out
}
