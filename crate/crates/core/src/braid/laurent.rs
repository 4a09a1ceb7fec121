use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Integer Laurent polynomial in `t`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LaurentPolynomial {
    coeffs: BTreeMap<i32, i64>,
}

impl LaurentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, 0)
    }

    /// `c·tᵉ`.
    pub fn monomial(c: i64, e: i32) -> Self {
        let mut p = Self::zero();
        if c != 0 {
            p.coeffs.insert(e, c);
        }
        p
    }

    pub fn t() -> Self {
        Self::monomial(1, 1)
    }

    pub fn from_coeffs(pairs: impl IntoIterator<Item = (i32, i64)>) -> Self {
        let mut p = Self::zero();
        for (e, c) in pairs {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: i32, c: i64) {
        if c == 0 {
            return;
        }
        let v = self.coeffs.entry(e).or_insert(0);
        *v += c;
        if *v == 0 {
            self.coeffs.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, e: i32) -> i64 {
        self.coeffs.get(&e).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, i64)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    pub fn min_degree(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Multiplies by `tʲ`.
    pub fn shift(&self, j: i32) -> Self {
        LaurentPolynomial {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e + j, c)).collect(),
        }
    }

    /// `p(t⁻¹)`.
    pub fn mirror(&self) -> Self {
        LaurentPolynomial {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (-e, c)).collect(),
        }
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &LaurentPolynomial) -> Option<LaurentPolynomial> {
        let dlo = d.min_degree()?;
        let dhi = d.max_degree()?;
        let lead = d.coeff(dhi);
        let mut rem = self.clone();
        let mut q = LaurentPolynomial::zero();
        while let Some(rhi) = rem.max_degree() {
            if rhi - dhi < rem.min_degree()? - dlo {
                return None;
            }
            let c = rem.coeff(rhi);
            if c % lead != 0 {
                return None;
            }
            let term = LaurentPolynomial::monomial(c / lead, rhi - dhi);
            rem = &rem - &(&term * d);
            q.add_term(rhi - dhi, c / lead);
        }
        Some(q)
    }

    /// Representative up to `±tʲ`: degrees centred on 0 (as far as
    /// parity allows) and lowest coefficient positive.
    pub fn normalize_unit(&self) -> LaurentPolynomial {
        let (Some(lo), Some(hi)) = (self.min_degree(), self.max_degree()) else {
            return self.clone();
        };
        let shifted = self.shift(-(lo + hi).div_euclid(2));
        let lead_lo = shifted.coeff(shifted.min_degree().unwrap());
        if lead_lo < 0 {
            -&shifted
        } else {
            shifted
        }
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.mirror()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms().map(|(e, c)| c as f64 * t.powi(e)).sum()
    }
}

impl Add for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn add(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, c);
        }
        out
    }
}

impl Sub for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn sub(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, -c);
        }
        out
    }
}

impl Mul for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn mul(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = LaurentPolynomial::zero();
        for (e1, c1) in self.terms() {
            for (e2, c2) in rhs.terms() {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn neg(self) -> LaurentPolynomial {
        LaurentPolynomial {
            coeffs: self.coeffs.iter().map(|(&e, &c)| (e, -c)).collect(),
        }
    }
}

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            let mag = c.unsigned_abs();
            if i == 0 {
                if c < 0 {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c < 0 { " - " } else { " + " })?;
            }
            match (e, mag) {
                (0, m) => write!(f, "{m}")?,
                (1, 1) => f.write_str("t")?,
                (1, m) => write!(f, "{m}t")?,
                (e, 1) => write!(f, "t^{e}")?,
                (e, m) => write!(f, "{m}t^{e}")?,
            }
        }
        Ok(())
    }
}
