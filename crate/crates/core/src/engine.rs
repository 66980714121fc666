//! The expansion core.
//!
//! `P_n(x) ≈ P(x) - p(x) Σ n^{-r/2} h_r(x)`, with forward and inverse
//! quantile maps `x - Σ n^{-r/2} f_r(x)` and `x + Σ n^{-r/2} g_r(x)`.
//! Each `e_r` (`e = h, f, g`) is first built formally as a polynomial in the
//! adjusted cumulants `L_k` and the Hermite functions `H_k`, then
//! specialized to standardized cumulant coefficients `A_{ri}`.

use crate::basedist::BaseDistribution;
use crate::bell::{BellTable, Seq};
use crate::cumulants::CoeffTable;
use crate::error::{Error, Result};
use crate::hbasis::{apply_dk, c_functions};
use crate::partitions::{bracket, bracket_series_coeff, hset, s_weight, LSeries, Partition};
use crate::poly::{Poly, Var};
use crate::ring::{factorial, Coeff, Field, Q};
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

/// Default bound on the expansion order.
pub const DEFAULT_MAX_ORDER: usize = 12;

/// Order bound, overridable through `CFX_MAX_ORDER`.
pub fn max_order() -> usize {
    std::env::var("CFX_MAX_ORDER").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_MAX_ORDER)
}

fn guard(r: usize) -> Result<()> {
    let max = max_order();
    if r > max {
        return Err(Error::OrderGuard { requested: r, max });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionKind {
    /// Distribution function correction.
    H,
    /// Forward quantile map `P^{-1}∘P_n`.
    F,
    /// Inverse quantile map `P_n^{-1}∘P`.
    G,
}

impl fmt::Display for ExpansionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionKind::H => "h",
            ExpansionKind::F => "f",
            ExpansionKind::G => "g",
        })
    }
}

impl FromStr for ExpansionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" | "H" => Ok(ExpansionKind::H),
            "f" | "F" => Ok(ExpansionKind::F),
            "g" | "G" => Ok(ExpansionKind::G),
            other => Err(Error::Parse(format!("unknown expansion kind {other:?}"))),
        }
    }
}

/// Symbolic `L_1, …, L_n`.
pub fn l_symbols(n: usize) -> Seq<Poly> {
    Seq::new((1..=n).map(|k| Poly::var(Var::L(k as u16))).collect())
}

/// `C_{rk} = Σ {[π] : π ∈ ℋ_{rk}}`.
pub fn crk<T: Coeff>(r: usize, k: usize, l: &Seq<T>) -> Result<T> {
    let mut acc = T::nil();
    for pi in hset(r, k) {
        acc = acc.plus(&bracket(&pi, l)?);
    }
    Ok(acc)
}

/// `C_{rk}` from `C_{rr} = Σ_i [1^{r-2i} 2^i]` and
/// `C_{r,r+2i} = Σ_j C_{jj} b_{r-j,i}(L̄)`, `L̄_i = L_{i+2}`.
pub fn crk_recurrence<T: Coeff>(r: usize, k: usize, l: &Seq<T>) -> Result<T> {
    if k < r || k > 3 * r || (k - r) % 2 == 1 {
        return Ok(T::nil());
    }
    let diag = |j: usize| -> Result<T> {
        let mut acc = T::nil();
        for i in 0..=j / 2 {
            let mut parts = vec![1; j - 2 * i];
            parts.extend(std::iter::repeat_n(2, i));
            acc = acc.plus(&bracket(&Partition::from_parts(parts)?, l)?);
        }
        Ok(acc)
    };
    let i = (k - r) / 2;
    if i == 0 {
        return diag(r);
    }
    let shifted: Vec<T> = l.values().iter().skip(2).cloned().collect();
    let table = BellTable::new(&Seq::new(shifted), r)?;
    let mut acc = T::nil();
    for j in 0..=r - i {
        acc = acc.plus(&diag(j)?.times(&table.b(r - j, i)?));
    }
    Ok(acc)
}

type Cache = Mutex<HashMap<(ExpansionKind, usize), Arc<Poly>>>;
type TableCache = Mutex<HashMap<(ExpansionKind, usize), Arc<Vec<(Partition, Poly)>>>>;

fn formal_cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(Default::default)
}

fn table_cache() -> &'static TableCache {
    static C: OnceLock<TableCache> = OnceLock::new();
    C.get_or_init(Default::default)
}

fn cached(kind: ExpansionKind, r: usize, build: impl FnOnce() -> Result<Poly>) -> Result<Arc<Poly>> {
    if let Some(p) = formal_cache().lock().expect("cache lock").get(&(kind, r)) {
        return Ok(p.clone());
    }
    let p = Arc::new(build()?);
    formal_cache().lock().expect("cache lock").insert((kind, r), p.clone());
    Ok(p)
}

/// `h_r(x, L) = Σ_{k = r, r+2, …, 3r} C_{rk} H_{k-1}`.
pub fn h_formal(r: usize) -> Result<Arc<Poly>> {
    guard(r)?;
    cached(ExpansionKind::H, r, || {
        if r == 0 {
            return Ok(Poly::zero());
        }
        let l = l_symbols(3 * r);
        let mut acc = Poly::zero();
        for k in (r..=3 * r).step_by(2) {
            acc = acc + crk(r, k, &l)? * Poly::h(k - 1);
        }
        Ok(acc)
    })
}

fn h_seq_formal(r: usize) -> Result<Seq<Poly>> {
    Ok(Seq::new((1..=r).map(|j| h_formal(j).map(|p| (*p).clone())).collect::<Result<_>>()?))
}

/// `f_r = Σ_k (-1)^{k-1} c_k b_{rk}(h)` or `g_r = Σ_k (-1)^{k-1} D_k b_{rk}(h)`.
pub fn fg_formal(kind: ExpansionKind, r: usize) -> Result<Arc<Poly>> {
    guard(r)?;
    match kind {
        ExpansionKind::H => h_formal(r),
        _ => cached(kind, r, || {
            if r == 0 {
                return Ok(Poly::zero());
            }
            let table = BellTable::new(&h_seq_formal(r)?, r)?;
            let cs = c_functions(r);
            let mut acc = Poly::zero();
            for k in 1..=r {
                let b = table.b(r, k)?;
                let t = match kind {
                    ExpansionKind::F => &cs[k - 1] * &b,
                    _ => apply_dk(k, &b),
                };
                acc = if k % 2 == 1 { acc + t } else { acc - t };
            }
            Ok(acc)
        }),
    }
}

/// `e_r(x, L)` for any kind.
pub fn formal(kind: ExpansionKind, r: usize) -> Result<Arc<Poly>> {
    fg_formal(kind, r)
}

/// Partition of an `L`-monomial: `L_k^e` contributes `e` parts equal to `k`.
fn mono_partition(m: &crate::poly::Mono) -> Result<Partition> {
    let mut parts = Vec::new();
    for &(v, e) in m.factors() {
        let Var::L(k) = v else {
            return Err(Error::Domain(format!("expected an L monomial, found {v}")));
        };
        parts.extend(std::iter::repeat_n(k as usize, e as usize));
    }
    Partition::from_parts(parts)
}

/// The pairs `(π, e(π))` with `e_r(x, L) = Σ [π] e(π)`, in partition order.
pub fn coefficient_table(kind: ExpansionKind, r: usize) -> Result<Arc<Vec<(Partition, Poly)>>> {
    guard(r)?;
    if let Some(t) = table_cache().lock().expect("cache lock").get(&(kind, r)) {
        return Ok(t.clone());
    }
    let e = formal(kind, r)?;
    let mut out = Vec::new();
    for (m, coeff) in e.split_by(Var::is_l) {
        if coeff.is_zero() {
            continue;
        }
        let pi = mono_partition(&m)?;
        out.push((pi.clone(), coeff.scale_q(&pi.multiplicity_factorial())));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    let out = Arc::new(out);
    table_cache().lock().expect("cache lock").insert((kind, r), out.clone());
    Ok(out)
}

/// `e(π)` for one partition, zero when absent from the expansion.
pub fn coefficient(kind: ExpansionKind, pi: &Partition) -> Result<Poly> {
    let r = pi.weight();
    Ok(coefficient_table(kind, r)?
        .iter()
        .find(|(p, _)| p == pi)
        .map(|(_, e)| e.clone())
        .unwrap_or_else(Poly::zero))
}

/// Source of standardized coefficients `A_{ri}` in some ring.
pub trait ASource<T> {
    fn a(&self, r: usize, i: usize) -> Result<T>;
}

impl<T: Field> ASource<T> for CoeffTable<T> {
    fn a(&self, r: usize, i: usize) -> Result<T> {
        self.get(r, i)
    }
}

/// Symbolic `A_{ri}` with the zeros forced by a `(J, K)` choice and,
/// optionally, skewness matching (`A_{32} = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymbolicA {
    pub j: usize,
    pub k: usize,
    pub matched: bool,
}

impl SymbolicA {
    pub fn new(j: usize, k: usize, matched: bool) -> Self {
        SymbolicA { j, k, matched }
    }

    pub fn is_zero(&self, r: usize, i: usize) -> bool {
        (r == 1 && i <= self.j) || (r == 2 && i <= self.k) || (self.matched && (r, i) == (3, 2))
    }
}

impl ASource<Poly> for SymbolicA {
    fn a(&self, r: usize, i: usize) -> Result<Poly> {
        if r == 0 || i + 1 < r {
            return Err(Error::Domain(format!("no cumulant coefficient with index ({r},{i})")));
        }
        Ok(if self.is_zero(r, i) { Poly::zero() } else { Poly::var(Var::Cum(r as u16, i as u16)) })
    }
}

/// `L_k(n) = Σ_j A_{k,k+j-δ} n^{-j}/k!`, `δ = I(k ≥ 3)`, keeping only
/// coefficients of order at most `r`.
pub fn lseries<T: Coeff>(a: &impl ASource<T>, r: usize) -> Result<LSeries<T>> {
    let jmax = r / 2;
    let mut series = Vec::new();
    for k in 1..=r + 2 {
        let delta = usize::from(k >= 3);
        let sk = s_weight(k)?;
        let mut row = Vec::new();
        for j in 0..=jmax {
            if sk + 2 * j > r {
                row.push(T::nil());
            } else {
                row.push(a.a(k, k + j - delta)?.scale(&(Q::one() / factorial(k))));
            }
        }
        series.push(row);
    }
    LSeries::new(series, jmax)
}

/// One piece `[π]_i e(π)` of a standardized expansion.
#[derive(Clone, Debug)]
pub struct Piece<T> {
    pub partition: Partition,
    pub i: usize,
    pub weight: T,
    pub e: Poly,
}

/// The nonzero pieces of `e_r(x) = Σ_{0 ≤ i < r/2} e_{r-2i,i}(x)`,
/// `e_{s,i} = Σ_{π ∈ S_s} [π]_i e(π)`.
pub fn standardized_pieces<T: Coeff>(kind: ExpansionKind, r: usize, l: &LSeries<T>) -> Result<Vec<Piece<T>>> {
    let mut out = Vec::new();
    let mut i = 0;
    while 2 * i < r {
        let s = r - 2 * i;
        for (pi, e) in coefficient_table(kind, s)?.iter() {
            let w = bracket_series_coeff(pi, l, i)?;
            if !w.is_nil() {
                out.push(Piece { partition: pi.clone(), i, weight: w, e: e.clone() });
            }
        }
        i += 1;
    }
    Ok(out)
}

/// `e_r(x)` as a polynomial in `A_{ri}` and `H_k`.
pub fn e_r_symbolic(kind: ExpansionKind, r: usize, a: &impl ASource<Poly>) -> Result<Poly> {
    let l = lseries(a, r)?;
    let mut acc = Poly::zero();
    for p in standardized_pieces(kind, r, &l)? {
        acc = acc + &p.weight * &p.e;
    }
    Ok(acc)
}

/// `e_r(x)` with coefficients taken from a table of rationals.
pub fn e_r_standardized(kind: ExpansionKind, r: usize, a: &CoeffTable<Q>) -> Result<Poly> {
    a.check_manifest(r)?;
    let l = lseries(a, r)?;
    let mut acc = Poly::zero();
    for p in standardized_pieces(kind, r, &l)? {
        acc = acc + p.e.scale_q(&p.weight);
    }
    Ok(acc)
}

/// `Δ_{re} = Σ_{1 ≤ i < r/2} e_{r-2i,i}`.
pub fn delta_re(kind: ExpansionKind, r: usize, a: &impl ASource<Poly>) -> Result<Poly> {
    let l = lseries(a, r)?;
    let mut acc = Poly::zero();
    for p in standardized_pieces(kind, r, &l)? {
        if p.i > 0 {
            acc = acc + &p.weight * &p.e;
        }
    }
    Ok(acc)
}

/// `∇_r = Σ_{(r+1)/2 ≤ i ≤ r+1} Ā_{2i-r,i} H_{2i-r-1}`.
pub fn nabla_r(r: usize, a: &impl ASource<Poly>) -> Result<Poly> {
    let mut acc = Poly::zero();
    for i in r.div_ceil(2)..=r + 1 {
        let s = 2 * i - r;
        if s == 0 {
            continue;
        }
        let abar = a.a(s, i)?.scale_q(&(Q::one() / factorial(s)));
        let h = if s == 1 { Poly::one() } else { Poly::h(s - 1) };
        acc = acc + abar * h;
    }
    Ok(acc)
}

/// `(N, M)`: the number of cumulant monomials carried by the nonzero pieces
/// `[π]_0 e(π)` and `[π]_{i≥1} e(π)` of `e_r`, under the zero pattern of
/// `(J, K)` and skewness matching. `e_0` counts as one leading term.
pub fn term_count(kind: ExpansionKind, r: usize, j: usize, k: usize, matched: bool) -> Result<(usize, usize)> {
    if r == 0 {
        return Ok((1, 0));
    }
    let sym = SymbolicA::new(j, k, matched);
    let l = lseries(&sym, r)?;
    let pieces = standardized_pieces(kind, r, &l)?;
    let count = |lead: bool| pieces.iter().filter(|p| (p.i == 0) == lead).map(|p| p.weight.len()).sum();
    Ok((count(true), count(false)))
}

/// Running totals of [`term_count`] over `e_0, …, e_r`.
pub fn cumulative_term_count(kind: ExpansionKind, r: usize, j: usize, k: usize, matched: bool) -> Result<(usize, usize)> {
    let mut tot = (0, 0);
    for s in 0..=r {
        let (n, m) = term_count(kind, s, j, k, matched)?;
        tot = (tot.0 + n, tot.1 + m);
    }
    Ok(tot)
}

fn max_h_index(p: &Poly) -> usize {
    p.variables()
        .into_iter()
        .filter_map(|v| match v {
            Var::H(k) => Some(k as usize),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Numeric expansions for one coefficient table, base and `n`.
#[derive(Clone, Debug)]
pub struct Expansion {
    base: BaseDistribution,
    n: f64,
    order: usize,
    l: LSeries<f64>,
}

/// Per-order breakdown of a numeric expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    /// The `r = 0` term: `P(x)`, the base quantile, or the base density term.
    pub base: f64,
    /// Contribution of each order `r = 1, …, R`, already scaled.
    pub terms: Vec<f64>,
    pub total: f64,
}

impl Expansion {
    /// `a` must hold every coefficient needed through `order`.
    pub fn new(a: &CoeffTable<f64>, base: BaseDistribution, n: f64, order: usize) -> Result<Self> {
        guard(order)?;
        if !(n > 0.0) {
            return Err(Error::Domain(format!("n must be positive, got {n}")));
        }
        a.check_manifest(order)?;
        let l = lseries(a, order.max(1))?;
        Ok(Expansion { base, n, order, l })
    }

    pub fn base(&self) -> &BaseDistribution {
        &self.base
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn pieces(&self, kind: ExpansionKind, r: usize) -> Result<Vec<Piece<f64>>> {
        if r > self.order {
            return Err(Error::Truncation { want: r, have: self.order });
        }
        // the L-series is built for the full order; lower orders read a prefix
        standardized_pieces(kind, r, &self.l)
    }

    fn h_values(&self, x: f64, pieces: &[Piece<f64>], shift: usize) -> Result<Vec<f64>> {
        let need = pieces.iter().map(|p| max_h_index(&p.e).max(p.partition.size())).max().unwrap_or(0) + shift + 1;
        self.base.h_seq(x, need.max(1))
    }

    /// `e_r(x)` evaluated numerically.
    pub fn term(&self, kind: ExpansionKind, r: usize, x: f64) -> Result<f64> {
        let pieces = self.pieces(kind, r)?;
        let hs = self.h_values(x, &pieces, 0)?;
        let mut acc = 0.0;
        for p in &pieces {
            acc += p.weight * p.e.eval_h(&hs)?;
        }
        Ok(acc)
    }

    fn eps(&self, r: usize) -> f64 {
        self.n.powf(-(r as f64) / 2.0)
    }

    /// `P(x) - p(x) Σ_{r ≤ R} n^{-r/2} h_r(x)`.
    pub fn cdf(&self, x: f64, order: usize) -> Result<Breakdown> {
        let base = self.base.cdf(x)?;
        let p = self.base.pdf(x)?;
        let mut terms = Vec::new();
        for r in 1..=order {
            terms.push(-p * self.eps(r) * self.term(ExpansionKind::H, r, x)?);
        }
        let total = base + terms.iter().sum::<f64>();
        Ok(Breakdown { base, terms, total })
    }

    /// `(-D)^i p_n(x) = p(x) (H_i + Σ n^{-r/2} h_{ir}(x))`, where `h_{ir}` is
    /// `h_r` with each `H_k` replaced by `H_{k+i+1}`.
    pub fn density(&self, x: f64, i: usize, order: usize) -> Result<Breakdown> {
        let p = self.base.pdf(x)?;
        let mut all = Vec::new();
        for r in 1..=order {
            all.push(self.pieces(ExpansionKind::H, r)?);
        }
        let flat: Vec<Piece<f64>> = all.iter().flatten().cloned().collect();
        let hs = self.h_values(x, &flat, i + 1)?;
        let hk = |k: usize| if k == 0 { 1.0 } else { hs[k - 1] };
        let base = p * hk(i);
        let mut terms = Vec::new();
        for (r, pieces) in all.iter().enumerate() {
            let mut acc = 0.0;
            for pc in pieces {
                // h(π) = H_{|π|-1}
                acc += pc.weight * hk(pc.partition.size() + i);
            }
            terms.push(p * self.eps(r + 1) * acc);
        }
        let total = base + terms.iter().sum::<f64>();
        Ok(Breakdown { base, terms, total })
    }

    /// `x + Σ n^{-r/2} g_r(x)` at `x = P^{-1}(prob)`; the base entry is `x`.
    pub fn quantile_map(&self, prob: f64, order: usize) -> Result<Breakdown> {
        let x = self.base.inv_cdf(prob)?;
        self.inverse_map_at(x, order)
    }

    /// `x + Σ n^{-r/2} g_r(x)`.
    pub fn inverse_map_at(&self, x: f64, order: usize) -> Result<Breakdown> {
        let mut terms = Vec::new();
        for r in 1..=order {
            terms.push(self.eps(r) * self.term(ExpansionKind::G, r, x)?);
        }
        let total = x + terms.iter().sum::<f64>();
        Ok(Breakdown { base: x, terms, total })
    }

    /// `x - Σ n^{-r/2} f_r(x)`.
    pub fn forward_map_at(&self, x: f64, order: usize) -> Result<Breakdown> {
        let mut terms = Vec::new();
        for r in 1..=order {
            terms.push(-self.eps(r) * self.term(ExpansionKind::F, r, x)?);
        }
        let total = x + terms.iter().sum::<f64>();
        Ok(Breakdown { base: x, terms, total })
    }
}

/// Numeric formal-`L` expansions: `L_k` fixed numbers not depending on `n`.
#[derive(Clone, Debug)]
pub struct FormalExpansion {
    base: BaseDistribution,
    l: Seq<f64>,
}

impl FormalExpansion {
    pub fn new(base: BaseDistribution, l: Vec<f64>) -> Self {
        FormalExpansion { base, l: Seq::new(l) }
    }

    /// `e_r(x, L)`.
    pub fn term(&self, kind: ExpansionKind, r: usize, x: f64) -> Result<f64> {
        let e = formal(kind, r)?;
        let hs = self.base.h_seq(x, max_h_index(&e).max(1))?;
        let l = &self.l;
        e.eval(&|v| match v {
            Var::H(k) => Ok(hs[k as usize - 1]),
            Var::L(k) => l.get(k as usize).copied(),
            other => Err(Error::Domain(format!("unexpected variable {other}"))),
        })
    }

    /// `x - Σ_{r ≤ R} ε^r f_r(x, L)`.
    pub fn forward(&self, x: f64, eps: f64, order: usize) -> Result<f64> {
        let mut acc = x;
        for r in 1..=order {
            acc -= eps.powi(r as i32) * self.term(ExpansionKind::F, r, x)?;
        }
        Ok(acc)
    }

    /// `x + Σ_{r ≤ R} ε^r g_r(x, L)`.
    pub fn inverse(&self, x: f64, eps: f64, order: usize) -> Result<f64> {
        let mut acc = x;
        for r in 1..=order {
            acc += eps.powi(r as i32) * self.term(ExpansionKind::G, r, x)?;
        }
        Ok(acc)
    }
}

/// JSON export of a coefficient table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicExport {
    pub kind: ExpansionKind,
    pub r: usize,
    pub terms: Vec<ExportTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportTerm {
    pub partition: String,
    #[serde(rename = "coeff_H")]
    pub coeff_h: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub normal: Option<String>,
}

/// `(π, e(π))` pairs for export, optionally with the normal-base form.
pub fn export_table(kind: ExpansionKind, r: usize, with_normal: bool) -> Result<SymbolicExport> {
    let terms = coefficient_table(kind, r)?
        .iter()
        .map(|(pi, e)| ExportTerm {
            partition: pi.to_string(),
            coeff_h: e.to_string(),
            normal: with_normal.then(|| crate::hbasis::to_normal(e).to_string()),
        })
        .collect();
    Ok(SymbolicExport { kind, r, terms })
}

/// Which base distribution the expansions are taken about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseChoice {
    /// `N(0, 1)`: the Edgeworth and Cornish-Fisher expansions.
    Normal,
    /// Standardized gamma with mean `m = nτ`, `τ` chosen so `A_{32} = 0`.
    GammaMatched,
}

/// A model made ready for numeric expansion at one `n`.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub expansion: Expansion,
    /// `s_{1J}`, of the reflected estimate when `reflected`.
    pub s1: f64,
    /// `s_{2K}`.
    pub s2: f64,
    pub reflected: bool,
    pub tau: Option<f64>,
    /// Whether the coefficient pipeline ran in exact rationals.
    pub exact: bool,
    pub j: usize,
    pub k: usize,
}

/// One row of a successive-terms table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub order: usize,
    pub term: f64,
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<f64>,
}

/// Successive terms of a quantile expansion on the scale of the estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub p: f64,
    /// Base quantile `P^{-1}(p)` (of `-θ̂`'s base when reflected).
    pub x: f64,
    pub rows: Vec<QuantileRow>,
    /// Set when term magnitudes stop decreasing before the last order.
    pub divergence: bool,
}

impl QuantileTable {
    pub fn total(&self) -> f64 {
        self.rows.last().map(|r| r.total).unwrap_or(f64::NAN)
    }

    /// Fill the error column against a reference value.
    pub fn with_reference(mut self, exact: f64) -> Self {
        for r in &mut self.rows {
            r.error = Some(r.total - exact);
        }
        self
    }
}

/// Heuristic: past the leading term, some nonzero `|t_r|` is at least the
/// previous nonzero `|t_s|`. Exact zeros (odd orders of a symmetric law) are
/// skipped.
pub fn terms_stop_decreasing(terms: &[f64]) -> bool {
    let nonzero: Vec<f64> = terms.iter().skip(1).filter(|t| **t != 0.0).map(|t| t.abs()).collect();
    nonzero.windows(2).any(|w| w[1] >= w[0])
}

/// Standardize, adjust for `(J, K)`, pick the base and build the expansion.
/// Exact rationals are used when `a_{21}` is a rational square.
pub fn prepare(
    model: &CoeffTable<Q>,
    base: BaseChoice,
    j: usize,
    k: usize,
    n: f64,
    order: usize,
) -> Result<Prepared> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!("n must be positive, got {n}")));
    }
    let exact = model.a21().sqrt_exact().is_some();
    let (a, tau, reflected, table) = if exact {
        prepare_in(model, base, j, k)?
    } else {
        prepare_in(&model.to_f64(), base, j, k)?
    };
    let (s1, s2) = crate::cumulants::truncated_mean_var(&table, j, k, &n)?;
    let base_dist = match tau {
        None => BaseDistribution::normal(),
        Some(t) => BaseDistribution::standard_gamma(n * t)?,
    };
    let expansion = Expansion::new(&a, base_dist, n, order)?;
    Ok(Prepared { expansion, s1, s2, reflected, tau, exact, j, k })
}

type PreparedParts = (CoeffTable<f64>, Option<f64>, bool, CoeffTable<f64>);

fn prepare_in<T: Field>(model: &CoeffTable<T>, base: BaseChoice, j: usize, k: usize) -> Result<PreparedParts> {
    match base {
        BaseChoice::Normal => {
            let a = crate::cumulants::normal_adjusted(model, j, k)?;
            Ok((a.to_f64(), None, false, model.to_f64()))
        }
        BaseChoice::GammaMatched => {
            let m = crate::cumulants::gamma_match(model, j, k)?;
            let tau = m.sqrt_tau.to_f64().powi(2);
            let table = if m.reflected { model.reflect() } else { model.clone() };
            Ok((m.a.to_f64(), Some(tau), m.reflected, table.to_f64()))
        }
    }
}

impl Prepared {
    /// Quantile of the estimate at probability `p`, term by term.
    pub fn quantile(&self, p: f64, order: usize) -> Result<QuantileTable> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("p must lie in (0,1), got {p}")));
        }
        let pp = if self.reflected { 1.0 - p } else { p };
        let b = self.expansion.quantile_map(pp, order)?;
        let sign = if self.reflected { -1.0 } else { 1.0 };
        let scale = self.s2.sqrt();
        let mut terms = vec![sign * (self.s1 + scale * b.base)];
        terms.extend(b.terms.iter().map(|t| sign * scale * t));
        let mut total = 0.0;
        let rows = terms
            .iter()
            .enumerate()
            .map(|(r, &t)| {
                total += t;
                QuantileRow { order: r, term: t, total, error: None }
            })
            .collect();
        Ok(QuantileTable { p, x: b.base, rows, divergence: terms_stop_decreasing(&terms) })
    }

    /// Standardized point `x` of `Y_{JK}` for an estimate value `t`.
    pub fn standardize_point(&self, t: f64) -> f64 {
        let t = if self.reflected { -t } else { t };
        (t - self.s1) / self.s2.sqrt()
    }

    /// `P(θ̂ ≤ t)`.
    pub fn cdf_estimate(&self, t: f64, order: usize) -> Result<Breakdown> {
        let b = self.expansion.cdf(self.standardize_point(t), order)?;
        if !self.reflected {
            return Ok(b);
        }
        Ok(Breakdown { base: 1.0 - b.base, terms: b.terms.iter().map(|t| -t).collect(), total: 1.0 - b.total })
    }
}

/// `Ā_{ri} = A_{ri}/r!` as a symbolic polynomial.
pub fn abar(r: usize, i: usize) -> Poly {
    Poly::var(Var::Cum(r as u16, i as u16)).scale_q(&(Q::one() / factorial(r)))
}

#[cfg(test)]
pub(crate) fn frac(n: i64, d: i64) -> Q {
    crate::ring::q(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hbasis::{hermite_he, to_normal};
    use crate::poly::parse;
    use crate::ring::qi;

    fn pp(s: &str) -> Poly {
        parse(s).unwrap()
    }

    fn part(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn crk_examples() {
        let l = l_symbols(12);
        assert_eq!(crk(2, 4, &l).unwrap(), pp("L4 + L1*L3"));
        assert_eq!(crk(2, 6, &l).unwrap(), pp("L3^2/2"));
        for r in 1..=4 {
            let want = l.get(3).unwrap().pow(r as u32).scale_q(&(Q::one() / factorial(r)));
            assert_eq!(crk(r, 3 * r, &l).unwrap(), want);
        }
        assert!(crk(2, 5, &l).unwrap().is_zero());
    }

    #[test]
    fn crk_two_paths_agree() {
        let l = l_symbols(12);
        for r in 1..=6 {
            for k in r..=3 * r {
                assert_eq!(crk(r, k, &l).unwrap(), crk_recurrence(r, k, &l).unwrap(), "C{r}{k}");
            }
        }
    }

    #[test]
    fn h_formal_examples() {
        assert_eq!(*h_formal(1).unwrap(), pp("L1 + L3*H2"));
        assert_eq!(*h_formal(2).unwrap(), pp("(L1^2/2 + L2)*H1 + (L1*L3 + L4)*H3 + L3^2/2*H5"));
        for r in 1..=5 {
            let zero = h_formal(r).unwrap().substitute(|v| v.is_l().then(Poly::zero));
            assert!(zero.is_zero());
        }
    }

    #[test]
    fn first_order_maps_agree() {
        let h = h_formal(1).unwrap();
        assert_eq!(*fg_formal(ExpansionKind::F, 1).unwrap(), *h);
        assert_eq!(*fg_formal(ExpansionKind::G, 1).unwrap(), *h);
    }

    #[test]
    fn f4_composition() {
        let h: Vec<Poly> = (1..=4).map(|r| (*h_formal(r).unwrap()).clone()).collect();
        let c = c_functions(4);
        let want = h[3].clone() - &c[1] * &(&h[0] * &h[2] + h[1].pow(2).scale_q(&frac(1, 2)))
            + &c[2] * &(&h[0].pow(2) * &h[1]).scale_q(&frac(1, 2))
            - &c[3] * &h[0].pow(4).scale_q(&frac(1, 24));
        assert_eq!(*fg_formal(ExpansionKind::F, 4).unwrap(), want);
    }

    #[test]
    fn printed_coefficients() {
        assert_eq!(coefficient(ExpansionKind::F, &part("4^2")).unwrap(), pp("H7 - H1*H3^2"));
        assert_eq!(coefficient(ExpansionKind::G, &part("4^2")).unwrap(), pp("H7 - 2*H3*H4 + H1*H3^2"));
        let g33 = to_normal(&coefficient(ExpansionKind::G, &part("3^2")).unwrap());
        assert_eq!(g33, pp("-2*(2*x^3 - 5*x)"));
        let f13 = to_normal(&coefficient(ExpansionKind::F, &part("1 3")).unwrap());
        assert_eq!(f13, to_normal(&pp("-2*H1")));
        for k in 1..=5 {
            assert!(coefficient(ExpansionKind::G, &Partition::from_parts(vec![1, k]).unwrap()).unwrap().is_zero());
        }
    }

    #[test]
    fn h_coefficients_are_single_hermites() {
        for r in 1..=5 {
            for (pi, e) in coefficient_table(ExpansionKind::H, r).unwrap().iter() {
                let want = if pi.size() == 1 { Poly::one() } else { Poly::h(pi.size() - 1) };
                assert_eq!(*e, want, "h({pi})");
            }
        }
    }

    #[test]
    fn nabla_examples() {
        let s = SymbolicA::new(3, 4, true);
        assert_eq!(nabla_r(1, &SymbolicA::new(1, 1, true)).unwrap(), Poly::zero());
        assert_eq!(nabla_r(2, &SymbolicA::new(1, 2, true)).unwrap(), abar(4, 3) * Poly::h(3));
        assert_eq!(
            nabla_r(5, &s).unwrap(),
            abar(3, 4) * Poly::h(2) + abar(5, 5) * Poly::h(4) + abar(7, 6) * Poly::h(6)
        );
    }

    #[test]
    fn delta_three() {
        let s = SymbolicA::new(0, 1, false);
        let want = Poly::var(Var::Cum(1, 2)) + abar(3, 3) * Poly::h(2);
        for kind in [ExpansionKind::H, ExpansionKind::F, ExpansionKind::G] {
            assert_eq!(delta_re(kind, 3, &s).unwrap(), want);
        }
    }

    #[test]
    fn zero_model_gives_zero_terms() {
        let t = CoeffTable::<Q>::from_entries(6, [((2, 1), qi(1))]).unwrap();
        for kind in [ExpansionKind::H, ExpansionKind::F, ExpansionKind::G] {
            for r in 1..=5 {
                assert!(e_r_standardized(kind, r, &t).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn skew_matched_first_term_vanishes() {
        let t = crate::cumulants::model_lnf(24, 60, 4).unwrap();
        let m = crate::cumulants::gamma_match(&t, 1, 1).unwrap();
        for kind in [ExpansionKind::H, ExpansionKind::F, ExpansionKind::G] {
            assert!(e_r_standardized(kind, 1, &m.a).unwrap().is_zero());
        }
    }

    #[test]
    fn missing_coefficient_named() {
        let t = crate::cumulants::model_studentized_mean(&qi(2), &qi(9), &qi(44)).unwrap();
        let a = crate::cumulants::standardize(&t).unwrap();
        match e_r_standardized(ExpansionKind::G, 3, &a) {
            Err(Error::ModelOrder { r, i, .. }) => assert_eq!((r, i), (3, 3)),
            other => panic!("expected a model-order error, got {other:?}"),
        }
    }

    #[test]
    fn first_order_normal_cdf_by_hand() {
        let (a11, a32) = (0.3, -0.7);
        let t = CoeffTable::<f64>::from_entries(1, [((2, 1), 1.0), ((1, 1), a11), ((3, 2), a32)]).unwrap();
        let n = 40.0;
        let e = Expansion::new(&t, BaseDistribution::normal(), n, 1).unwrap();
        for x in [-1.3, 0.0, 0.4, 2.2] {
            let b = e.cdf(x, 1).unwrap();
            let phi = (-x * x / 2.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let want = -phi / n.sqrt() * (a11 + a32 / 6.0 * (x * x - 1.0));
            assert!((b.terms[0] - want).abs() < 1e-14);
            assert_eq!(e.cdf(x, 0).unwrap().total, b.base);
        }
    }

    #[test]
    fn density_matches_cdf_derivative() {
        let t = crate::cumulants::model_lnf(24, 60, 4).unwrap();
        let a = crate::cumulants::standardize(&t).unwrap().to_f64();
        let e = Expansion::new(&a, BaseDistribution::normal(), 240.0 / 7.0, 4).unwrap();
        let step = 1e-4;
        for x in [-1.5, -0.2, 0.7, 1.9] {
            let d = (e.cdf(x + step, 4).unwrap().total - e.cdf(x - step, 4).unwrap().total) / (2.0 * step);
            let p = e.density(x, 0, 4).unwrap().total;
            assert!(((d - p) / p).abs() < 1e-5, "x={x}: {d} vs {p}");
        }
    }

    #[test]
    fn density_shift_three() {
        let s = SymbolicA::new(0, 1, false);
        let l = lseries(&s, 3).unwrap();
        for i in 0..3 {
            let mut acc = Poly::zero();
            for p in standardized_pieces(ExpansionKind::H, 3, &l).unwrap() {
                if p.i == 1 {
                    acc = acc + &p.weight * &Poly::h(p.partition.size() + i);
                }
            }
            let want = Poly::var(Var::Cum(1, 2)) * Poly::h(i + 1) + abar(3, 3) * Poly::h(i + 3);
            assert_eq!(acc, want);
        }
    }

    #[test]
    fn zero_model_density_is_base() {
        let t = CoeffTable::<f64>::from_entries(4, [((2, 1), 1.0)]).unwrap();
        let e = Expansion::new(&t, BaseDistribution::normal(), 10.0, 4).unwrap();
        let d = e.density(0.3, 0, 4).unwrap();
        assert_eq!(d.total, BaseDistribution::normal().pdf(0.3).unwrap());
    }

    #[test]
    fn normal_parity_alternates_with_order() {
        // |π| ≡ S(π) mod 2, so h_r(-x) = (-1)^{r+1} h_r(x) for a symmetric base
        let l: Vec<f64> = vec![0.2, -0.1, -0.4, 0.3, 0.3, -0.2, 0.1, 0.2, 0.2, 0.1, 0.1, -0.1, 0.1, 0.3, 0.1];
        let fe = FormalExpansion::new(BaseDistribution::normal(), l);
        for r in 1..=5 {
            let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
            for x in [0.3, 1.1, 2.4] {
                let (a, b) = (fe.term(ExpansionKind::H, r, x).unwrap(), fe.term(ExpansionKind::H, r, -x).unwrap());
                assert!((a - sign * b).abs() < 1e-12 * (1.0 + a.abs()), "r={r} x={x}");
            }
        }
    }

    #[test]
    fn hermite_check() {
        assert_eq!(to_normal(&Poly::h(2)), hermite_he(2));
    }

    #[test]
    fn term_counts_known_rows() {
        assert_eq!(term_count(ExpansionKind::H, 1, 1, 1, true).unwrap(), (0, 0));
        assert_eq!(term_count(ExpansionKind::H, 2, 0, 1, false).unwrap(), (5, 0));
        assert_eq!(term_count(ExpansionKind::H, 3, 0, 1, false).unwrap(), (9, 2));
        assert_eq!(term_count(ExpansionKind::H, 3, 2, 2, true).unwrap(), (1, 1));
    }

    #[test]
    fn order_guard() {
        let too_big = max_order() + 1;
        assert!(matches!(h_formal(too_big), Err(Error::OrderGuard { .. })));
    }
}
