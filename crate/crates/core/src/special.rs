//! Special functions: log-gamma, regularized incomplete gamma and beta,
//! the normal distribution, and their inverses.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn gamma_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            return Ok(sum * (-x + a * x.ln() - ln_gamma(a)).exp());
        }
    }
    Err(Error::numeric("gamma_series", format!("no convergence at a={a}, x={x}")))
}

fn gamma_cont_frac(a: f64, x: f64) -> Result<f64> {
    // modified Lentz
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok((-x + a * x.ln() - ln_gamma(a)).exp() * h);
        }
    }
    Err(Error::numeric("gamma_cont_frac", format!("no convergence at a={a}, x={x}")))
}

/// Regularized lower incomplete gamma `P(a, x)` and upper `Q(a, x)`.
pub fn gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("incomplete gamma needs a > 0, got a={a}, x={x}")));
    }
    if x <= 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    if x < a + 1.0 {
        let p = gamma_series(a, x)?;
        Ok((p, 1.0 - p))
    } else {
        let q = gamma_cont_frac(a, x)?;
        Ok((1.0 - q, q))
    }
}

pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    Ok(gamma_pq(a, x)?.0)
}

pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    Ok(gamma_pq(a, x)?.1)
}

/// Density of the gamma law with shape `a` and unit scale.
pub fn gamma_pdf(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-x + (a - 1.0) * x.ln() - ln_gamma(a)).exp()
}

/// `erfc(z)` through `Q(1/2, z²)`.
pub fn erfc(z: f64) -> f64 {
    let q = gamma_q(0.5, z * z).expect("a = 1/2 is valid");
    if z >= 0.0 {
        q
    } else {
        2.0 - q
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let (p, q) = gamma_pq(0.5, 0.5 * x * x).expect("a = 1/2 is valid");
    if x < 0.0 {
        0.5 * q
    } else {
        0.5 + 0.5 * p
    }
}

/// Upper tail `1 - Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

fn check_prob(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability must lie in (0,1), got {p}")))
    }
}

/// Acklam's rational approximation to `Φ^{-1}`, relative error ~1e-9.
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let plow = 0.024_25;
    if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// `Φ^{-1}(p)`: Acklam seed refined by Halley steps against [`normal_cdf`].
pub fn normal_inv(p: f64) -> Result<f64> {
    check_prob(p)?;
    let mut x = acklam(p);
    for _ in 0..4 {
        // work in the smaller tail for relative accuracy
        let e = if x < 0.0 { normal_cdf(x) - p } else { (1.0 - p) - normal_sf(x) };
        let u = e / normal_pdf(x);
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Solve `F(x) = p` for an increasing `F` with density `f` on `(lo, hi)`:
/// Newton steps, falling back to bisection when a step leaves the bracket.
fn safeguarded_newton(
    routine: &'static str,
    p: f64,
    mut x: f64,
    mut lo: f64,
    mut hi: f64,
    cdf: impl Fn(f64) -> Result<f64>,
    pdf: impl Fn(f64) -> f64,
) -> Result<f64> {
    for _ in 0..500 {
        let e = cdf(x)? - p;
        if e == 0.0 {
            return Ok(x);
        }
        if e < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let mut next = if d > 0.0 && d.is_finite() { x - e / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
        }
        let collapsed = hi.is_finite() && (hi - lo) <= 1e-15 * hi.abs();
        if (next - x).abs() <= 1e-15 * x.abs() || collapsed {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::numeric(routine, format!("no convergence for p={p}, last x={x}")))
}

/// Wilson–Hilferty type starting value for the gamma quantile.
fn gamma_seed(a: f64, p: f64) -> f64 {
    if a <= 1.0 {
        let t = 1.0 - a * (0.253 + a * 0.12);
        if p < t {
            (p / t).powf(1.0 / a)
        } else {
            1.0 - (1.0 - (p - t) / (1.0 - t)).ln()
        }
    } else {
        let z = acklam(p);
        let x = a * (1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt())).powi(3);
        x.max(1e-3 * a)
    }
}

/// Quantile of the gamma law with shape `a` and unit scale.
pub fn gamma_inv(a: f64, p: f64) -> Result<f64> {
    check_prob(p)?;
    if !(a > 0.0) {
        return Err(Error::Domain(format!("gamma shape must be positive, got {a}")));
    }
    let seed = gamma_seed(a, p);
    safeguarded_newton(
        "gamma_inv",
        p,
        seed,
        0.0,
        f64::INFINITY,
        |x| {
            // use the smaller tail so the residual keeps relative precision
            let (lower, upper) = gamma_pq(a, x)?;
            Ok(if p > 0.5 { 1.0 - upper } else { lower })
        },
        |x| gamma_pdf(a, x),
    )
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::numeric("beta_cont_frac", format!("no convergence at a={a}, b={b}, x={x}")))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("incomplete beta needs a, b > 0, got {a}, {b}")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cont_frac(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cont_frac(b, a, 1.0 - x)? / b)
    }
}

pub fn beta_pdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)).exp()
}

/// Inverse of `I_x(a, b)` in `x`.
pub fn beta_inc_inv(a: f64, b: f64, p: f64) -> Result<f64> {
    check_prob(p)?;
    // seed from the normal approximation on the logit scale
    let mean = a / (a + b);
    let sd = (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt();
    let seed = (mean + sd * acklam(p)).clamp(1e-8, 1.0 - 1e-8);
    safeguarded_newton(
        "beta_inc_inv",
        p,
        seed,
        0.0,
        1.0,
        |x| beta_inc(a, b, x),
        |x| beta_pdf(a, b, x),
    )
}

/// CDF of Snedecor's F with `(n1, n2)` degrees of freedom.
pub fn f_cdf(n1: f64, n2: f64, f: f64) -> Result<f64> {
    if f <= 0.0 {
        return Ok(0.0);
    }
    beta_inc(n1 / 2.0, n2 / 2.0, n1 * f / (n1 * f + n2))
}

/// Quantile of Snedecor's F.
pub fn f_inv(n1: f64, n2: f64, p: f64) -> Result<f64> {
    let x = beta_inc_inv(n1 / 2.0, n2 / 2.0, p)?;
    Ok(n2 * x / (n1 * (1.0 - x)))
}
