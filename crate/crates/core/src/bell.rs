//! Ordinary (partial), exponential and complete Bell polynomials.
//!
//! With `S(t) = Σ_{r≥1} y_r t^r`, the partial ordinary Bell polynomial
//! `B̂_{rj}(y)` is the coefficient of `t^r` in `S(t)^j`.

use crate::error::{Error, Result};
use crate::ring::{factorial, Coeff, Q};
use num_traits::One;

/// Largest `r` accepted by the Bell routines.
pub const MAX_BELL_ORDER: usize = 24;

/// A sequence `y_1, y_2, …` indexed from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Seq<T> {
    values: Vec<T>,
}

impl<T: Coeff> Seq<T> {
    pub fn new(values: Vec<T>) -> Self {
        Seq { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `y_r` for `r ≥ 1`.
    pub fn get(&self, r: usize) -> Result<&T> {
        if r == 0 {
            return Err(Error::Domain("sequence index 0 is not addressable".into()));
        }
        self.values.get(r - 1).ok_or(Error::Length { needed: r, available: self.values.len() })
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(usize, &T) -> U) -> Seq<U> {
        Seq { values: self.values.iter().enumerate().map(|(i, v)| f(i + 1, v)).collect() }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

fn guard(r: usize) -> Result<()> {
    if r > MAX_BELL_ORDER {
        Err(Error::OrderGuard { requested: r, max: MAX_BELL_ORDER })
    } else {
        Ok(())
    }
}

/// Memoized table of `B̂_{rj}(y)` for one sequence, `r ≤ rmax`.
///
/// Entry `(r, j)` is available when `y` holds at least `r - j + 1` values.
#[derive(Clone, Debug)]
pub struct BellTable<T> {
    rmax: usize,
    // rows[j][r]
    rows: Vec<Vec<Option<T>>>,
    ylen: usize,
}

impl<T: Coeff> BellTable<T> {
    pub fn new(y: &Seq<T>, rmax: usize) -> Result<Self> {
        guard(rmax)?;
        let mut rows: Vec<Vec<Option<T>>> = Vec::with_capacity(rmax + 1);
        let mut row0 = vec![Some(T::nil()); rmax + 1];
        row0[0] = Some(T::unit());
        rows.push(row0);
        for j in 0..rmax {
            let prev = &rows[j];
            let mut next: Vec<Option<T>> = vec![None; rmax + 1];
            for (r, slot) in next.iter_mut().enumerate() {
                if r < j + 1 {
                    *slot = Some(T::nil());
                    continue;
                }
                if r - j > y.len() {
                    continue;
                }
                // B̂_{r,j+1} = Σ_{a=j}^{r-1} B̂_{aj} y_{r-a}
                let mut acc = T::nil();
                for a in j..r {
                    let term = prev[a].as_ref().expect("lower row entry present");
                    if term.is_nil() {
                        continue;
                    }
                    acc = acc.plus(&term.times(y.get(r - a)?));
                }
                *slot = Some(acc);
            }
            rows.push(next);
        }
        Ok(BellTable { rmax, rows, ylen: y.len() })
    }

    /// `B̂_{rj}(y)`.
    pub fn ordinary(&self, r: usize, j: usize) -> Result<T> {
        guard(r)?;
        if j > r {
            return Ok(T::nil());
        }
        if r > self.rmax {
            return Err(Error::Length { needed: r, available: self.rmax });
        }
        self.rows[j][r]
            .clone()
            .ok_or(Error::Length { needed: r - j + 1, available: self.ylen })
    }

    /// `b_{rj}(y) = B̂_{rj}(y)/j!`.
    pub fn b(&self, r: usize, j: usize) -> Result<T> {
        Ok(self.ordinary(r, j)?.scale(&(Q::one() / factorial(j))))
    }
}

fn check_len<T: Coeff>(r: usize, j: usize, y: &Seq<T>) -> Result<()> {
    if r >= j && j >= 1 && y.len() < r - j + 1 {
        return Err(Error::Length { needed: r - j + 1, available: y.len() });
    }
    Ok(())
}

/// `B̂_{rj}(y)` by the convolution recurrence.
pub fn partial_ordinary_bell<T: Coeff>(r: usize, j: usize, y: &Seq<T>) -> Result<T> {
    guard(r)?;
    if j > r {
        return Ok(T::nil());
    }
    check_len(r, j, y)?;
    BellTable::new(y, r)?.ordinary(r, j)
}

/// `b_{rj}(y) = B̂_{rj}(y)/j!`.
pub fn ordinary_bell_b<T: Coeff>(r: usize, j: usize, y: &Seq<T>) -> Result<T> {
    Ok(partial_ordinary_bell(r, j, y)?.scale(&(Q::one() / factorial(j))))
}

/// `y_k = x_k / k!`.
pub fn exp_to_ordinary<T: Coeff>(x: &Seq<T>) -> Seq<T> {
    x.map(|k, v| v.scale(&(Q::one() / factorial(k))))
}

/// Exponential partial Bell polynomial `B_{rj}(x) = r!·b_{rj}(y)`, `y_k = x_k/k!`.
pub fn exponential_bell<T: Coeff>(r: usize, j: usize, x: &Seq<T>) -> Result<T> {
    Ok(ordinary_bell_b(r, j, &exp_to_ordinary(x))?.scale(&factorial(r)))
}

/// Complete Bell polynomial `B_r(x) = Σ_j B_{rj}(x)`.
pub fn complete_bell<T: Coeff>(r: usize, x: &Seq<T>) -> Result<T> {
    guard(r)?;
    if r == 0 {
        return Ok(T::unit());
    }
    if x.len() < r {
        return Err(Error::Length { needed: r, available: x.len() });
    }
    let table = BellTable::new(&exp_to_ordinary(x), r)?;
    let mut acc = T::nil();
    for j in 1..=r {
        acc = acc.plus(&table.b(r, j)?);
    }
    Ok(acc.scale(&factorial(r)))
}

/// Exponential Bell polynomials `B_{rj}(x)` for all `j ≤ r ≤ rmax`, memoized.
#[derive(Clone, Debug)]
pub struct ExpBellTable<T> {
    inner: BellTable<T>,
}

impl<T: Coeff> ExpBellTable<T> {
    pub fn new(x: &Seq<T>, rmax: usize) -> Result<Self> {
        Ok(ExpBellTable { inner: BellTable::new(&exp_to_ordinary(x), rmax)? })
    }

    pub fn get(&self, r: usize, j: usize) -> Result<T> {
        Ok(self.inner.b(r, j)?.scale(&factorial(r)))
    }

    pub fn complete(&self, r: usize) -> Result<T> {
        if r == 0 {
            return Ok(T::unit());
        }
        let mut acc = T::nil();
        for j in 1..=r {
            acc = acc.plus(&self.get(r, j)?);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse, Poly, Var};
    use crate::ring::{q, qi};

    fn symbolic(prefix: char, n: usize) -> Seq<Poly> {
        Seq::new(
            (1..=n)
                .map(|k| match prefix {
                    'H' => Poly::h(k),
                    _ => Poly::var(Var::A(k as u16)),
                })
                .collect(),
        )
    }

    fn ysym(n: usize) -> Seq<Poly> {
        // y_k represented by L_k
        Seq::new((1..=n).map(|k| Poly::var(Var::L(k as u16))).collect())
    }

    #[test]
    fn partial_ordinary_examples() {
        let y = ysym(8);
        assert_eq!(partial_ordinary_bell(5, 1, &y).unwrap(), parse("L5").unwrap());
        assert_eq!(partial_ordinary_bell(4, 3, &y).unwrap(), parse("3*L1^2*L2").unwrap());
        assert!(partial_ordinary_bell(3, 5, &y).unwrap().is_zero());
        assert_eq!(partial_ordinary_bell(0, 0, &y).unwrap(), Poly::one());
        assert!(partial_ordinary_bell(4, 0, &y).unwrap().is_zero());
    }

    #[test]
    fn ordinary_b_examples() {
        let y = ysym(8);
        assert_eq!(ordinary_bell_b(2, 2, &y).unwrap(), parse("L1^2/2").unwrap());
        assert_eq!(ordinary_bell_b(3, 2, &y).unwrap(), parse("L1*L2").unwrap());
        assert_eq!(ordinary_bell_b(4, 2, &y).unwrap(), parse("L2^2/2 + L1*L3").unwrap());
    }

    #[test]
    fn exponential_and_complete_examples() {
        let h = symbolic('H', 8);
        assert_eq!(
            exponential_bell(6, 3, &h).unwrap(),
            parse("15*H1^2*H4 + 60*H1*H2*H3 + 15*H2^3").unwrap()
        );
        assert_eq!(exponential_bell(6, 6, &h).unwrap(), parse("H1^6").unwrap());
        assert_eq!(exponential_bell(1, 1, &h).unwrap(), parse("H1").unwrap());
        let a = symbolic('a', 8);
        assert_eq!(complete_bell(0, &a).unwrap(), Poly::one());
        assert_eq!(complete_bell(3, &a).unwrap(), parse("a3 + 3*a1*a2 + a1^3").unwrap());
        assert_eq!(
            complete_bell(4, &a).unwrap(),
            parse("a4 + 4*a1*a3 + 3*a2^2 + 6*a1^2*a2 + a1^4").unwrap()
        );
    }

    #[test]
    fn short_sequences_error() {
        let y = Seq::new(vec![qi(1), qi(2)]);
        assert!(matches!(partial_ordinary_bell(5, 1, &y), Err(Error::Length { .. })));
        assert!(partial_ordinary_bell(3, 2, &y).is_ok());
        assert!(y.get(0).is_err());
        assert!(y.get(3).is_err());
    }

    #[test]
    fn order_guard() {
        let y = Seq::new(vec![q(1, 2); 30]);
        assert!(matches!(partial_ordinary_bell(25, 2, &y), Err(Error::OrderGuard { .. })));
    }
}
