use serde::{Deserialize, Serialize};

use super::laurent::LaurentPolynomial;
use super::word::{BraidError, BraidWord};
use crate::Sign;

/// Square matrix over integer Laurent polynomials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentMatrix {
    rows: Vec<Vec<LaurentPolynomial>>,
}

type L = LaurentPolynomial;

impl LaurentMatrix {
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { L::one() } else { L::zero() })
                    .collect()
            })
            .collect();
        LaurentMatrix { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPolynomial {
        &self.rows[i][j]
    }

    pub fn mul(&self, other: &LaurentMatrix) -> LaurentMatrix {
        let n = self.dim();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(L::zero(), |acc, k| {
                            if self.rows[i][k].is_zero() || other.rows[k][j].is_zero() {
                                acc
                            } else {
                                &acc + &(&self.rows[i][k] * &other.rows[k][j])
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        LaurentMatrix { rows }
    }

    pub fn sub_identity(&self) -> LaurentMatrix {
        let mut m = self.clone();
        for i in 0..m.dim() {
            m.rows[i][i] = &m.rows[i][i] - &L::one();
        }
        m
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> LaurentPolynomial {
        let n = self.dim();
        if n == 0 {
            return L::one();
        }
        let mut a = self.rows.clone();
        let mut prev = L::one();
        let mut negate = false;
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        negate = !negate;
                    }
                    None => return L::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                    a[i][j] = num.div_exact(&prev).expect("Bareiss division is exact");
                }
                a[i][k] = L::zero();
            }
            prev = a[k][k].clone();
        }
        let det = a[n - 1][n - 1].clone();
        if negate {
            -&det
        } else {
            det
        }
    }
}

fn generator(n: usize, k: usize, sign: Sign) -> LaurentMatrix {
    let t = L::t();
    let tinv = L::monomial(1, -1);
    let neg = |p: &L| -p;
    let mut m = LaurentMatrix::identity(n - 1);
    if n == 2 {
        m.rows[0][0] = match sign {
            Sign::Positive => neg(&t),
            Sign::Negative => neg(&tinv),
        };
        return m;
    }
    // 0-based index of σ_k's diagonal entry
    let i = k - 1;
    match sign {
        Sign::Positive => {
            m.rows[i][i] = neg(&t);
            if k > 1 {
                m.rows[i - 1][i] = t.clone();
            }
            if k < n - 1 {
                m.rows[i + 1][i] = L::one();
            }
        }
        Sign::Negative => {
            m.rows[i][i] = neg(&tinv);
            if k > 1 {
                m.rows[i - 1][i] = L::one();
            }
            if k < n - 1 {
                m.rows[i + 1][i] = tinv.clone();
            }
        }
    }
    m
}

/// Reduced Burau matrix of the word, `(N−1)×(N−1)`.
pub fn reduced_burau(word: &BraidWord) -> LaurentMatrix {
    let n = word.strands();
    assert!(n >= 2, "reduced Burau needs at least two strands");
    word.letters()
        .iter()
        .fold(LaurentMatrix::identity(n - 1), |acc, l| {
            acc.mul(&generator(n, l.k, l.sign))
        })
}

/// Alexander polynomial of the closure, normalized up to units.
pub fn alexander_of_closure(word: &BraidWord) -> Result<LaurentPolynomial, BraidError> {
    let components = word.closure_components();
    if components != 1 {
        return Err(BraidError::NotAKnot { components });
    }
    let n = word.strands();
    if n == 1 {
        return Ok(L::one());
    }
    let det = reduced_burau(word).sub_identity().determinant();
    let one_minus_t = L::from_coeffs([(0, 1), (1, -1)]);
    let one_minus_tn = L::from_coeffs([(0, 1), (n as i32, -1)]);
    (&det * &one_minus_t)
        .div_exact(&one_minus_tn)
        .map(|p| p.normalize_unit())
        .ok_or(BraidError::NonUnitRemainder)
}
