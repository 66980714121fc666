//! Independent checks on the expansion engine.
//!
//! [`reversion_fg`] inverts the distribution-function expansion by plain
//! power-series reversion, sharing nothing with the Hill–Davis route but the
//! polynomial type and the derivative rule for `H_k`. [`mc_cdf`] estimates
//! distribution functions by simulation, and [`exact_lnf_quantile`] gives
//! quantiles of `½ ln F` through the incomplete beta function.

use crate::cumulants::{Population, Sampler};
use crate::engine::h_formal;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::ring::{factorial, Q};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Truncated power series in `ε = n^{-1/2}` with polynomial coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalSeries {
    coeffs: Vec<Poly>,
}

impl FormalSeries {
    pub fn zero(order: usize) -> Self {
        FormalSeries { coeffs: vec![Poly::zero(); order + 1] }
    }

    pub fn constant(c: Poly, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, r: usize) -> &Poly {
        &self.coeffs[r]
    }

    pub fn set(&mut self, r: usize, p: Poly) {
        self.coeffs[r] = p;
    }

    pub fn add(&self, o: &FormalSeries) -> FormalSeries {
        FormalSeries { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &Q) -> FormalSeries {
        FormalSeries { coeffs: self.coeffs.iter().map(|p| p.scale_q(c)).collect() }
    }

    pub fn mul_poly(&self, c: &Poly) -> FormalSeries {
        FormalSeries { coeffs: self.coeffs.iter().map(|p| p * c).collect() }
    }

    pub fn mul(&self, o: &FormalSeries) -> FormalSeries {
        let n = self.order();
        let mut out = Self::zero(n);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out.coeffs[i + j].add_assign_ref(&(a * b));
                }
            }
        }
        out
    }

    /// `1, s, s², …, s^k`.
    fn powers(&self, k: usize) -> Vec<FormalSeries> {
        let mut out = vec![Self::constant(Poly::one(), self.order())];
        for _ in 0..k {
            let next = out.last().expect("non-empty").mul(self);
            out.push(next);
        }
        out
    }
}

fn hk(k: usize) -> Poly {
    if k == 0 {
        Poly::one()
    } else {
        Poly::h(k)
    }
}

/// `f_1, …, f_R` and `g_1, …, g_R` by reverting
/// `P_n(x) = P(x) - p(x) Σ ε^r h_r(x)` order by order, using
/// `P^{(k)} = (-1)^{k-1} p H_{k-1}` for the Taylor re-expansions.
pub fn reversion_fg(order: usize) -> Result<(Vec<Poly>, Vec<Poly>)> {
    let h: Vec<Poly> = (0..=order).map(|r| h_formal(r).map(|p| (*p).clone())).collect::<Result<_>>()?;

    // P(x - δ) = P(x) - p Σ_k δ^k H_{k-1}/k!, so Σ_k δ^k H_{k-1}/k! = Σ ε^r h_r.
    let mut delta = FormalSeries::zero(order);
    for r in 1..=order {
        let pw = delta.powers(r);
        let mut rest = Poly::zero();
        for (k, p) in pw.iter().enumerate().skip(2) {
            rest.add_assign_ref(&(p.coeff(r) * &hk(k - 1)).scale_q(&(Q::one() / factorial(k))));
        }
        delta.set(r, &h[r] - &rest);
    }

    // P_n(x + γ) = P(x):
    // Σ_k (-1)^{k-1} γ^k H_{k-1}/k! = Σ_s ε^s [Σ_j (-1)^j γ^j H_j/j!][Σ_j γ^j D^j h_s/j!].
    let mut derivs: Vec<Vec<Poly>> = Vec::new();
    for hs in &h {
        let mut d = vec![hs.clone()];
        for _ in 0..order {
            let next = d.last().expect("non-empty").diff();
            d.push(next);
        }
        derivs.push(d);
    }
    let mut gamma = FormalSeries::zero(order);
    for r in 1..=order {
        let pw = gamma.powers(r);
        let mut density = FormalSeries::zero(order);
        for (j, p) in pw.iter().enumerate() {
            let sign = if j % 2 == 0 { Q::one() } else { -Q::one() };
            density = density.add(&p.mul_poly(&hk(j)).scale(&(sign / factorial(j))));
        }
        let mut rhs = Poly::zero();
        for s in 1..=r {
            let mut shifted = FormalSeries::zero(order);
            for (j, p) in pw.iter().enumerate() {
                shifted = shifted.add(&p.mul_poly(&derivs[s][j]).scale(&(Q::one() / factorial(j))));
            }
            rhs.add_assign_ref(density.mul(&shifted).coeff(r - s));
        }
        let mut rest = Poly::zero();
        for (k, p) in pw.iter().enumerate().skip(2) {
            let sign = if k % 2 == 1 { Q::one() } else { -Q::one() };
            rest.add_assign_ref(&(p.coeff(r) * &hk(k - 1)).scale_q(&(sign / factorial(k))));
        }
        gamma.set(r, &rhs - &rest);
    }
    Ok(((1..=order).map(|r| delta.coeff(r).clone()).collect(), (1..=order).map(|r| gamma.coeff(r).clone()).collect()))
}

/// Simulation settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: usize,
    pub seed: u64,
    /// Number of independent streams; results do not depend on thread count.
    pub shards: usize,
}

impl McConfig {
    pub fn new(reps: usize, seed: u64) -> Self {
        McConfig { reps, seed, shards: 64 }
    }
}

/// Empirical `P(Y ≤ x)` with its binomial standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub x: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
}

fn population_draw<R: Rng>(p: &Population, rng: &mut R) -> Result<f64> {
    Ok(match p {
        Population::Exponential => Exp1.sample(rng),
        Population::Gamma { shape } => Gamma::new(*shape, 1.0)
            .map_err(|e| Error::Domain(format!("gamma population: {e}")))?
            .sample(rng),
        Population::Normal => StandardNormal.sample(rng),
    })
}

fn population_mean(p: &Population) -> f64 {
    match p {
        Population::Exponential => 1.0,
        Population::Gamma { shape } => *shape,
        Population::Normal => 0.0,
    }
}

/// One replicate of the estimate.
pub fn draw_estimate<R: Rng>(sampler: &Sampler, n: usize, rng: &mut R) -> Result<f64> {
    match sampler {
        Sampler::LnF { n1, n2 } => {
            let g1 = Gamma::new(*n1 as f64 / 2.0, 2.0).map_err(|e| Error::Domain(e.to_string()))?;
            let g2 = Gamma::new(*n2 as f64 / 2.0, 2.0).map_err(|e| Error::Domain(e.to_string()))?;
            let f = (g1.sample(rng) / *n1 as f64) / (g2.sample(rng) / *n2 as f64);
            Ok(0.5 * f.ln())
        }
        Sampler::StudentizedMean { population } | Sampler::SampleVariance { population } => {
            if n < 2 {
                return Err(Error::Domain("sample size must be at least 2".into()));
            }
            let mut xs = Vec::with_capacity(n);
            for _ in 0..n {
                xs.push(population_draw(population, rng)?);
            }
            let mean = xs.iter().sum::<f64>() / n as f64;
            let m2 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            Ok(match sampler {
                Sampler::StudentizedMean { .. } => (mean - population_mean(population)) / m2.sqrt(),
                _ => m2,
            })
        }
    }
}

/// `P(Y ≤ x)` for `Y = s_2^{-1/2}(±θ̂ - s_1)` at each `x`, by simulation.
pub fn mc_cdf(
    sampler: &Sampler,
    n: usize,
    s1: f64,
    s2: f64,
    reflected: bool,
    xs: &[f64],
    cfg: McConfig,
) -> Result<Vec<McEstimate>> {
    if cfg.reps < 1000 {
        return Err(Error::Domain(format!("at least 1000 replications are needed, got {}", cfg.reps)));
    }
    if !(s2 > 0.0) || cfg.shards == 0 {
        return Err(Error::Domain("scale must be positive and shards at least 1".into()));
    }
    let scale = s2.sqrt();
    let shards = cfg.shards.min(cfg.reps);
    let counts: Vec<Vec<u64>> = (0..shards)
        .into_par_iter()
        .map(|shard| -> Result<Vec<u64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(shard as u64);
            let reps = cfg.reps / shards + usize::from(shard < cfg.reps % shards);
            let mut c = vec![0u64; xs.len()];
            for _ in 0..reps {
                let t = draw_estimate(sampler, n, &mut rng)?;
                let y = ((if reflected { -t } else { t }) - s1) / scale;
                for (slot, &x) in c.iter_mut().zip(xs) {
                    if y <= x {
                        *slot += 1;
                    }
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let total = cfg.reps as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let hits: u64 = counts.iter().map(|c| c[i]).sum();
            let p = hits as f64 / total;
            McEstimate { x, estimate: p, std_error: (p * (1.0 - p) / total).sqrt(), reps: cfg.reps, seed: cfg.seed }
        })
        .collect())
}

/// `½ ln F_{n1,n2}(p)`.
pub fn exact_lnf_quantile(n1: f64, n2: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (0,1), got {p}")));
    }
    Ok(0.5 * crate::special::f_inv(n1, n2, p)?.ln())
}

/// One line of a validation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub expected: String,
    pub got: String,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl CheckReport {
    pub fn numeric(check: impl Into<String>, expected: f64, got: f64, tolerance: f64) -> Self {
        CheckReport {
            check: check.into(),
            expected: format!("{expected:.12}"),
            got: format!("{got:.12}"),
            tolerance: Some(tolerance),
            pass: (expected - got).abs() <= tolerance,
        }
    }

    pub fn exact(check: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        let (e, g) = (expected.to_string(), got.to_string());
        let pass = e == g;
        CheckReport { check: check.into(), expected: e, got: g, tolerance: None, pass }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{fg_formal, ExpansionKind};
    use crate::poly::parse;

    #[test]
    fn first_order_reversion() {
        let (f, g) = reversion_fg(1).unwrap();
        let h = h_formal(1).unwrap();
        assert_eq!(f[0], *h);
        assert_eq!(g[0], *h);
    }

    #[test]
    fn reversion_matches_engine_low_orders() {
        let (f, g) = reversion_fg(3).unwrap();
        for r in 1..=3 {
            assert_eq!(f[r - 1], *fg_formal(ExpansionKind::F, r).unwrap(), "f{r}");
            assert_eq!(g[r - 1], *fg_formal(ExpansionKind::G, r).unwrap(), "g{r}");
        }
    }

    #[test]
    fn g23_from_reversion() {
        let (_, g) = reversion_fg(3).unwrap();
        let coeff = g[2].split_by(crate::poly::Var::is_l);
        let key = parse("L2*L3").unwrap().terms().next().unwrap().0.clone();
        assert_eq!(coeff[&key], parse("H4 - H1*H3 - H2^2 + H1^2*H2").unwrap());
    }

    #[test]
    fn series_product_truncates() {
        let mut a = FormalSeries::zero(2);
        a.set(1, Poly::h(1));
        let sq = a.mul(&a);
        assert_eq!(*sq.coeff(2), Poly::h(1).pow(2));
        assert!(a.mul(&sq).coeff(2).is_zero());
        assert_eq!(a.scale(&crate::ring::qi(2)).coeff(1).clone(), Poly::h(1).scale_q(&crate::ring::qi(2)));
    }

    #[test]
    fn mc_rejects_few_reps() {
        let s = Sampler::LnF { n1: 3, n2: 4 };
        assert!(mc_cdf(&s, 1, 0.0, 1.0, false, &[0.0], McConfig::new(999, 1)).is_err());
    }

    #[test]
    fn mc_is_deterministic_and_bounded() {
        let s = Sampler::LnF { n1: 24, n2: 60 };
        let cfg = McConfig::new(20_000, 7);
        let a = mc_cdf(&s, 1, 0.0, 7.0 / 240.0, false, &[0.0, 50.0], cfg).unwrap();
        let b = mc_cdf(&s, 1, 0.0, 7.0 / 240.0, false, &[0.0, 50.0], cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1].estimate, 1.0);
        let c = mc_cdf(&s, 1, 0.0, 7.0 / 240.0, false, &[0.0], McConfig { shards: 7, ..cfg }).unwrap();
        assert!((c[0].estimate - a[0].estimate).abs() < 5.0 * a[0].std_error);
    }

    #[test]
    fn mc_lnf_matches_exact_cdf() {
        let s = Sampler::LnF { n1: 5, n2: 9 };
        let q = exact_lnf_quantile(5.0, 9.0, 0.3).unwrap();
        let est = mc_cdf(&s, 1, 0.0, 1.0, false, &[q], McConfig::new(200_000, 11)).unwrap();
        assert!((est[0].estimate - 0.3).abs() < 4.0 * est[0].std_error);
    }

    #[test]
    fn sample_variance_sampler_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = Sampler::SampleVariance { population: Population::Gamma { shape: 3.0 } };
        let n = 20;
        let reps = 20_000;
        let mean: f64 = (0..reps).map(|_| draw_estimate(&s, n, &mut rng).unwrap()).sum::<f64>() / reps as f64;
        // E μ2(F_n) = μ2 (1 - 1/n)
        assert!((mean - 3.0 * (1.0 - 1.0 / n as f64)).abs() < 0.05);
    }

    #[test]
    fn exact_lnf_examples() {
        let v = exact_lnf_quantile(24.0, 60.0, 0.95).unwrap();
        assert!((v - 0.265_348_44).abs() < 1e-8);
        assert!(exact_lnf_quantile(7.0, 7.0, 0.5).unwrap().abs() < 1e-12);
        let f = (2.0 * v).exp();
        assert!((crate::special::f_cdf(24.0, 60.0, f).unwrap() - 0.95).abs() < 1e-10);
        assert!(exact_lnf_quantile(3.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn report_lines() {
        assert!(CheckReport::numeric("x", 1.0, 1.0 + 1e-9, 1e-8).pass);
        assert!(!CheckReport::exact("y", "a", "b").pass);
    }
}
