//! Base distributions `X` about which expansions are taken.
//!
//! `a_r(x) = D^r(-ln p(x))` and `H_r(x) = p(x)^{-1}(-D)^r p(x)` are supplied
//! numerically for the standard normal, the gamma with mean `m`, and affine
//! images `X = (Y - μ)/σ` of either.

use crate::error::{Error, Result};
use crate::special;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseDistribution {
    Normal,
    /// Gamma with shape and mean `m`, density `y^{m-1}e^{-y}/Γ(m)`.
    Gamma { m: f64 },
    /// `X = (Y - μ)/σ`, evaluated at `y = μ + σx`.
    Affine { inner: Box<BaseDistribution>, mu: f64, sigma: f64 },
}

fn check_y(y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("gamma base evaluated at y = {y}, outside (0, ∞)")))
    }
}

/// `a_{rG}(y) = I(r=1) + (r-1)! α ȳ^r`, with `a_1` formed as `(y - α)/y` from
/// a separately supplied `y - α` to avoid cancellation.
fn gamma_a(alpha: f64, y: f64, y_minus_alpha: f64, rmax: usize) -> Vec<f64> {
    let ybar = -1.0 / y;
    let mut out = Vec::with_capacity(rmax);
    let mut pw = ybar;
    let mut fact = 1.0;
    for r in 1..=rmax {
        if r == 1 {
            out.push(y_minus_alpha / y);
        } else {
            fact *= (r - 1) as f64;
            pw *= ybar;
            out.push(fact * alpha * pw);
        }
    }
    out
}

/// `H_{rG}(y) = Σ_j C(r,j) [α]_j ȳ^j`.
pub fn gamma_h_closed_form(m: f64, y: f64, r: usize) -> Result<f64> {
    check_y(y)?;
    let alpha = m - 1.0;
    let ybar = -1.0 / y;
    let mut total = 0.0;
    let mut falling = 1.0;
    let mut binom = 1.0;
    let mut pw = 1.0;
    for j in 0..=r {
        if j > 0 {
            falling *= alpha - (j - 1) as f64;
            binom = binom * (r + 1 - j) as f64 / j as f64;
            pw *= ybar;
        }
        total += binom * falling * pw;
    }
    Ok(total)
}

/// `H_1, …, H_rmax` from `a_1, …, a_rmax` by
/// `H_{n+1} = Σ_k C(n,k) (-1)^k a_{k+1} H_{n-k}`.
pub fn h_from_a_values(a: &[f64]) -> Vec<f64> {
    let rmax = a.len();
    let mut h = vec![1.0];
    for n in 0..rmax {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom = binom * (n + 1 - k) as f64 / k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * a[k] * h[n - k];
        }
        h.push(acc);
    }
    h.remove(0);
    h
}

fn hermite_values(x: f64, rmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rmax);
    let (mut prev, mut cur) = (1.0, x);
    for r in 1..=rmax {
        if r > 1 {
            let next = x * cur - (r - 1) as f64 * prev;
            prev = cur;
            cur = next;
        }
        out.push(cur);
    }
    out
}

impl BaseDistribution {
    pub fn normal() -> Self {
        BaseDistribution::Normal
    }

    pub fn gamma(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Domain(format!("gamma mean must be positive, got {m}")));
        }
        Ok(BaseDistribution::Gamma { m })
    }

    /// `(inner - μ)/σ`; nested affine maps are composed.
    pub fn affine(inner: BaseDistribution, mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return Err(Error::Domain(format!("affine map needs finite μ and σ > 0, got μ = {mu}, σ = {sigma}")));
        }
        Ok(match inner {
            BaseDistribution::Affine { inner, mu: m0, sigma: s0 } => {
                BaseDistribution::Affine { inner, mu: m0 + s0 * mu, sigma: s0 * sigma }
            }
            other => BaseDistribution::Affine { inner: Box::new(other), mu, sigma },
        })
    }

    /// Standardized gamma `(G - m)/√m`.
    pub fn standard_gamma(m: f64) -> Result<Self> {
        Self::affine(Self::gamma(m)?, m, m.sqrt())
    }

    fn validate(&self) -> Result<()> {
        match self {
            BaseDistribution::Normal => Ok(()),
            BaseDistribution::Gamma { m } => Self::gamma(*m).map(|_| ()),
            BaseDistribution::Affine { inner, mu, sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
                    return Err(Error::Domain(format!("affine map needs finite μ and σ > 0, got μ = {mu}, σ = {sigma}")));
                }
                inner.validate()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        match self {
            BaseDistribution::Normal => Ok(special::normal_pdf(x)),
            BaseDistribution::Gamma { m } => {
                check_y(x)?;
                Ok(special::gamma_pdf(*m, x))
            }
            BaseDistribution::Affine { inner, mu, sigma } => Ok(sigma * inner.pdf(mu + sigma * x)?),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        match self {
            BaseDistribution::Normal => Ok(special::normal_cdf(x)),
            BaseDistribution::Gamma { m } => {
                check_y(x)?;
                special::gamma_p(*m, x)
            }
            BaseDistribution::Affine { inner, mu, sigma } => inner.cdf(mu + sigma * x),
        }
    }

    /// Upper tail `1 - P(x)`, computed directly.
    pub fn sf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        match self {
            BaseDistribution::Normal => Ok(special::normal_sf(x)),
            BaseDistribution::Gamma { m } => {
                check_y(x)?;
                special::gamma_q(*m, x)
            }
            BaseDistribution::Affine { inner, mu, sigma } => inner.sf(mu + sigma * x),
        }
    }

    pub fn inv_cdf(&self, p: f64) -> Result<f64> {
        self.validate()?;
        match self {
            BaseDistribution::Normal => special::normal_inv(p),
            BaseDistribution::Gamma { m } => special::gamma_inv(*m, p),
            BaseDistribution::Affine { inner, mu, sigma } => Ok((inner.inv_cdf(p)? - mu) / sigma),
        }
    }

    /// `a_1(x), …, a_rmax(x)`.
    pub fn a_seq(&self, x: f64, rmax: usize) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            BaseDistribution::Normal => {
                Ok((1..=rmax).map(|r| match r {
                    1 => x,
                    2 => 1.0,
                    _ => 0.0,
                })
                .collect())
            }
            BaseDistribution::Gamma { m } => {
                check_y(x)?;
                let alpha = m - 1.0;
                Ok(gamma_a(alpha, x, x - alpha, rmax))
            }
            BaseDistribution::Affine { inner, mu, sigma } => {
                let y = mu + sigma * x;
                let inner_a = match inner.as_ref() {
                    BaseDistribution::Gamma { m } => {
                        check_y(y)?;
                        let alpha = m - 1.0;
                        gamma_a(alpha, y, (mu - m + 1.0) + sigma * x, rmax)
                    }
                    other => other.a_seq(y, rmax)?,
                };
                let mut scale = 1.0;
                Ok(inner_a
                    .into_iter()
                    .map(|v| {
                        scale *= sigma;
                        scale * v
                    })
                    .collect())
            }
        }
    }

    /// `H_1(x), …, H_rmax(x)`; `H_0 = 1` is implicit.
    ///
    /// Non-normal bases go through `a_r`, which stays well conditioned for
    /// standardized gammas of large mean where the alternating closed-form
    /// sum cancels.
    pub fn h_seq(&self, x: f64, rmax: usize) -> Result<Vec<f64>> {
        match self {
            BaseDistribution::Normal => Ok(hermite_values(x, rmax)),
            BaseDistribution::Affine { inner, mu, sigma } if **inner == BaseDistribution::Normal => {
                self.validate()?;
                let mut scale = 1.0;
                Ok(hermite_values(mu + sigma * x, rmax)
                    .into_iter()
                    .map(|v| {
                        scale *= sigma;
                        scale * v
                    })
                    .collect())
            }
            _ => Ok(h_from_a_values(&self.a_seq(x, rmax)?)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BaseDistribution::Normal => "normal".into(),
            BaseDistribution::Gamma { m } => format!("gamma(m={m})"),
            BaseDistribution::Affine { inner, mu, sigma } => {
                format!("({} - {mu})/{sigma}", inner.name())
            }
        }
    }
}

/// `σ = √(m/s2)`, `μ = m - s1·σ`, so that `(G - μ)/σ` has `s_{1J}`, `s_{2K}`
/// as leading mean and variance.
pub fn jk_affine_params(m: f64, s1: f64, s2: f64) -> Result<(f64, f64)> {
    if !(m > 0.0) || !(s2 > 0.0) || !s1.is_finite() {
        return Err(Error::Domain(format!("need m > 0 and s2 > 0, got m = {m}, s2 = {s2}")));
    }
    let sigma = (m / s2).sqrt();
    Ok((m - s1 * sigma, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hbasis::{c_function, h_from_a};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn bases() -> Vec<(BaseDistribution, Vec<f64>)> {
        vec![
            (BaseDistribution::Normal, vec![-2.5, -0.3, 0.0, 0.7, 1.9]),
            (BaseDistribution::gamma(3.0).unwrap(), vec![0.4, 1.5, 3.0, 6.2]),
            (BaseDistribution::gamma(0.5).unwrap(), vec![0.2, 0.9, 2.5]),
            (BaseDistribution::standard_gamma(48.0).unwrap(), vec![-1.5, 0.0, 2.0]),
            (BaseDistribution::affine(BaseDistribution::gamma(5.0).unwrap(), 4.0, 2.0).unwrap(), vec![-1.2, 0.5]),
        ]
    }

    #[test]
    fn normal_sequences() {
        let d = BaseDistribution::Normal;
        assert_eq!(d.a_seq(1.5, 4).unwrap(), vec![1.5, 1.0, 0.0, 0.0]);
        let x: f64 = 0.8;
        let h = d.h_seq(x, 3).unwrap();
        assert!((h[2] - (x.powi(3) - 3.0 * x)).abs() < 1e-15);
        assert_eq!(d.cdf(0.0).unwrap(), 0.5);
    }

    #[test]
    fn gamma_closed_forms() {
        let m = 3.5;
        let d = BaseDistribution::gamma(m).unwrap();
        let y = 2.2;
        let alpha = m - 1.0;
        let a = d.a_seq(y, 4).unwrap();
        assert!(rel(a[1], alpha / (y * y)) < 1e-15);
        assert!(rel(a[2], -2.0 * alpha / y.powi(3)) < 1e-15);
        let h = d.h_seq(y, 1).unwrap();
        assert!(rel(h[0], 1.0 - alpha / y) < 1e-15);
        assert!(matches!(d.a_seq(-0.1, 3), Err(Error::Domain(_))));
        assert!(matches!(d.h_seq(0.0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn affine_scaling() {
        let inner = BaseDistribution::gamma(5.0).unwrap();
        let d = BaseDistribution::affine(inner.clone(), 4.0, 2.0).unwrap();
        let x = 0.3;
        let ay = inner.a_seq(4.0 + 2.0 * x, 5).unwrap();
        let ax = d.a_seq(x, 5).unwrap();
        assert!(rel(ax[1], 4.0 * ay[1]) < 1e-14);
        for r in 1..=5 {
            let hy = inner.h_seq(4.6, r).unwrap()[r - 1];
            let hx = d.h_seq(x, r).unwrap()[r - 1];
            assert!(rel(hx, 2f64.powi(r as i32) * hy) < 1e-12);
        }
        // out of support after mapping
        assert!(d.a_seq(-3.0, 2).is_err());
    }

    #[test]
    fn gamma_h_matches_closed_form() {
        for &(m, y) in &[(3.0, 1.7), (0.5, 0.4), (12.0, 15.0), (2.5, 6.0)] {
            let d = BaseDistribution::gamma(m).unwrap();
            let h = d.h_seq(y, 8).unwrap();
            for r in 1..=8 {
                let closed = gamma_h_closed_form(m, y, r).unwrap();
                assert!(rel(h[r - 1], closed) < 1e-10, "m={m} y={y} r={r}");
            }
        }
    }

    #[test]
    fn h_from_symbolic_a_agrees() {
        for (d, xs) in bases() {
            for &x in &xs {
                let a = d.a_seq(x, 8).unwrap();
                let h = d.h_seq(x, 8).unwrap();
                for r in 1..=8 {
                    let sym = h_from_a(r).unwrap();
                    let v = sym
                        .eval(&|v| match v {
                            crate::poly::Var::A(k) => Ok(a[k as usize - 1]),
                            _ => Err(Error::Domain("unexpected".into())),
                        })
                        .unwrap();
                    assert!((v - h[r - 1]).abs() <= 1e-10 * h[r - 1].abs().max(1.0), "{} x={x} r={r}", d.name());
                }
            }
        }
    }

    fn support_distance(d: &BaseDistribution, x: f64) -> f64 {
        match d {
            BaseDistribution::Gamma { .. } => x,
            BaseDistribution::Affine { inner, mu, sigma } if matches!(**inner, BaseDistribution::Gamma { .. }) => {
                (mu + sigma * x) / sigma
            }
            _ => 1.0,
        }
    }

    #[test]
    fn recurrence_by_central_differences() {
        for (d, xs) in bases() {
            for &x in &xs {
                let step = 1e-3 * support_distance(&d, x);
                let h = d.h_seq(x, 8).unwrap();
                let at = |k: f64| d.h_seq(x + k * step, 8).unwrap();
                let (p1, p2, m1, m2) = (at(1.0), at(2.0), at(-1.0), at(-2.0));
                for r in 2..=8 {
                    let i = r - 2;
                    let deriv = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * step);
                    let rhs = h[0] * h[r - 2] - deriv;
                    assert!(
                        (h[r - 1] - rhs).abs() <= 1e-6 * h[r - 1].abs().max(1.0),
                        "{} x={x} r={r}: {} vs {rhs}",
                        d.name(),
                        h[r - 1]
                    );
                }
            }
        }
    }

    #[test]
    fn hermite_moment_identity() {
        // He_r(x) = E (x + iN)^r
        for &x in &[-1.3, 0.0, 0.6, 2.4] {
            let h = BaseDistribution::Normal.h_seq(x, 8).unwrap();
            for r in 1..=8usize {
                let mut acc = 0.0;
                let mut binom = 1.0;
                for k in 0..=r {
                    if k > 0 {
                        binom = binom * (r + 1 - k) as f64 / k as f64;
                    }
                    if k % 2 == 1 {
                        continue;
                    }
                    let double_fact: f64 = (1..k).step_by(2).map(|v| v as f64).product();
                    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    acc += binom * x.powi((r - k) as i32) * sign * double_fact;
                }
                assert!((acc - h[r - 1]).abs() <= 1e-12 * acc.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gamma_c_function_coefficients() {
        // c_{k,G} as a polynomial in ȳ with coefficients in α. The commonly
        // quoted forms α(72α+23) and 2α(489α²+600α+101) do not satisfy the
        // recurrence; the corrected ones are used here.
        let coeffs = |k: usize, a: f64| -> Vec<f64> {
            let r = (k - 1) as f64;
            let rf: f64 = (1..k).map(|v| v as f64).product();
            let top: f64 = (1..k).map(|j| j as f64 * a + j as f64 - 1.0).product();
            let mut c = vec![rf, rf * r * a];
            match k {
                3 => {}
                4 => c.push(a * (18.0 * a + 7.0)),
                5 => {
                    c.push(2.0 * a * (72.0 * a + 23.0));
                    c.push(2.0 * a * (2.0 * a + 1.0) * (24.0 * a + 11.0));
                }
                6 => {
                    c.push(2.0 * a * (600.0 * a + 163.0));
                    c.push(2.0 * a * (600.0 * a * a + 489.0 * a + 101.0));
                    c.push(3.0 * a * (2.0 * a + 1.0) * (100.0 * a * a + 113.0 * a + 32.0));
                }
                _ => unreachable!(),
            }
            c.push(top);
            c
        };
        for &m in &[2.5, 7.0] {
            let d = BaseDistribution::gamma(m).unwrap();
            for &y in &[0.9, 3.3, 8.0] {
                let h = d.h_seq(y, 6).unwrap();
                let ybar = -1.0 / y;
                for k in 3..=6 {
                    let c = coeffs(k, m - 1.0);
                    let want: f64 = c.iter().enumerate().map(|(i, v)| v * ybar.powi(i as i32)).sum();
                    let got = c_function(k).eval_h(&h).unwrap();
                    assert!(rel(got, want) < 1e-10, "k={k} m={m} y={y}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn round_trips() {
        let ps: Vec<f64> = vec![1e-6, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-4, 1.0 - 1e-6];
        let mut ds = vec![BaseDistribution::Normal];
        for m in [0.5, 3.0, 48.0] {
            ds.push(BaseDistribution::gamma(m).unwrap());
        }
        // standardizing m = 0.5 pushes the lower quantiles into cancellation
        ds.push(BaseDistribution::standard_gamma(3.0).unwrap());
        ds.push(BaseDistribution::standard_gamma(48.0).unwrap());
        for d in ds {
            for &p in &ps {
                let x = d.inv_cdf(p).unwrap();
                assert!((d.cdf(x).unwrap() - p).abs() <= 1e-12, "{} p={p}", d.name());
            }
        }
        assert!(BaseDistribution::Normal.inv_cdf(1.0).is_err());
        assert!(BaseDistribution::Normal.inv_cdf(0.0).is_err());
    }

    #[test]
    fn standard_gamma_pdf_integrates_to_cdf() {
        let d = BaseDistribution::standard_gamma(3.0).unwrap();
        let (lo, hi) = (-1.5, 0.4);
        let n = 2000;
        let step = (hi - lo) / n as f64;
        let mut acc = d.pdf(lo).unwrap() + d.pdf(hi).unwrap();
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * d.pdf(lo + i as f64 * step).unwrap();
        }
        let integral = acc * step / 3.0;
        let diff = d.cdf(hi).unwrap() - d.cdf(lo).unwrap();
        assert!((integral - diff).abs() < 1e-10);
    }

    #[test]
    fn jk_params() {
        assert_eq!(jk_affine_params(4.0, 0.0, 1.0).unwrap(), (4.0, 2.0));
        assert_eq!(jk_affine_params(1.0, 0.5, 1.0).unwrap(), (0.5, 1.0));
        assert!(jk_affine_params(0.0, 0.0, 1.0).is_err());
        assert!(jk_affine_params(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn nested_affine_composes() {
        let g = BaseDistribution::gamma(4.0).unwrap();
        let once = BaseDistribution::affine(g.clone(), 4.0, 2.0).unwrap();
        let twice = BaseDistribution::affine(once, 0.5, 3.0).unwrap();
        let direct = BaseDistribution::affine(g, 5.0, 6.0).unwrap();
        assert_eq!(twice, direct);
        assert!(BaseDistribution::affine(BaseDistribution::Normal, 0.0, 0.0).is_err());
    }
}
