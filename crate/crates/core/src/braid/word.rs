use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Sign;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BraidError {
    #[error("strand counts differ: {left} vs {right}")]
    StrandMismatch { left: usize, right: usize },
    #[error("generator s{k} is out of range for {n} strands")]
    GeneratorOutOfRange { k: usize, n: usize },
    #[error("malformed braid token {0:?}")]
    Parse(String),
    #[error("closure has {components} components, not a knot")]
    NotAKnot { components: usize },
    #[error("Alexander quotient is not exact")]
    NonUnitRemainder,
}

/// `σ_k^{±1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub k: usize,
    pub sign: Sign,
}

impl Letter {
    pub fn new(k: usize, sign: Sign) -> Self {
        Letter { k, sign }
    }

    pub fn inverse(self) -> Self {
        Letter {
            k: self.k,
            sign: self.sign.flip(),
        }
    }

    pub fn exponent(self) -> i32 {
        self.sign.value()
    }

    fn commutes_with(self, other: Letter) -> bool {
        self.k.abs_diff(other.k) >= 2
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Positive => write!(f, "s{}", self.k),
            Sign::Negative => write!(f, "s{}^-1", self.k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<Letter>,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<Letter>) -> Result<Self, BraidError> {
        if let Some(l) = letters.iter().find(|l| l.k == 0 || l.k >= strands) {
            return Err(BraidError::GeneratorOutOfRange { k: l.k, n: strands });
        }
        Ok(BraidWord { strands, letters })
    }

    pub fn empty(strands: usize) -> Self {
        BraidWord {
            strands,
            letters: Vec::new(),
        }
    }

    /// From `(k, exponent)` pairs; exponents other than ±1 are expanded.
    pub fn from_powers(strands: usize, powers: &[(usize, i32)]) -> Result<Self, BraidError> {
        let mut letters = Vec::new();
        for &(k, e) in powers {
            let sign = Sign::of(e as f64);
            letters.extend(std::iter::repeat_n(Letter::new(k, sign), e.unsigned_abs() as usize));
        }
        BraidWord::new(strands, letters)
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn multiply(&self, other: &BraidWord) -> Result<BraidWord, BraidError> {
        if self.strands != other.strands {
            return Err(BraidError::StrandMismatch {
                left: self.strands,
                right: other.strands,
            });
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(BraidWord {
            strands: self.strands,
            letters,
        })
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn pow(&self, m: usize) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: self.letters.repeat(m),
        }
    }

    pub fn rotate(&self, r: usize) -> BraidWord {
        let mut letters = self.letters.clone();
        if !letters.is_empty() {
            let r = r % letters.len();
            letters.rotate_left(r);
        }
        BraidWord {
            strands: self.strands,
            letters,
        }
    }

    /// Cancels adjacent `σ_k σ_k⁻¹` pairs until none remain.
    pub fn free_reduce(&self) -> BraidWord {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        BraidWord {
            strands: self.strands,
            letters: out,
        }
    }

    /// `perm[p]` is the final position (0-based) of the strand starting at `p`.
    pub fn permutation(&self) -> Vec<usize> {
        // track which starting strand sits at each position
        let mut at: Vec<usize> = (0..self.strands).collect();
        for l in &self.letters {
            at.swap(l.k - 1, l.k);
        }
        let mut perm = vec![0; self.strands];
        for (pos, &strand) in at.iter().enumerate() {
            perm[strand] = pos;
        }
        perm
    }

    pub fn exponent_sum(&self) -> i64 {
        self.letters.iter().map(|l| l.exponent() as i64).sum()
    }

    pub fn closure_components(&self) -> usize {
        cycle_count(&self.permutation())
    }

    pub fn to_text(&self) -> String {
        self.letters
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses whitespace-separated `s<k>` / `s<k>^-1` tokens.
    pub fn parse(strands: usize, text: &str) -> Result<BraidWord, BraidError> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            let (body, sign) = match tok.strip_suffix("^-1") {
                Some(b) => (b, Sign::Negative),
                None => (tok, Sign::Positive),
            };
            let digits = body
                .strip_prefix('s')
                .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                .ok_or_else(|| BraidError::Parse(tok.to_string()))?;
            let k = digits
                .parse::<usize>()
                .map_err(|_| BraidError::Parse(tok.to_string()))?;
            letters.push(Letter::new(k, sign));
        }
        BraidWord::new(strands, letters)
    }

    /// Cancels `x … x⁻¹` pairs whenever every letter between them commutes with `x`.
    pub fn commuting_reduce(&self) -> BraidWord {
        let mut w = self.letters.clone();
        'outer: loop {
            for i in 0..w.len() {
                for j in i + 1..w.len() {
                    if w[j] == w[i].inverse() {
                        w.remove(j);
                        w.remove(i);
                        continue 'outer;
                    }
                    if !w[j].commutes_with(w[i]) {
                        break;
                    }
                }
            }
            break;
        }
        BraidWord {
            strands: self.strands,
            letters: w,
        }
    }

    /// Lexicographic normal form under commutation of distant generators.
    pub fn commutation_normal_form(&self) -> BraidWord {
        let mut rest = self.letters.clone();
        let mut out = Vec::with_capacity(rest.len());
        while !rest.is_empty() {
            // letters that can be moved to the front
            let mut best: Option<usize> = None;
            for i in 0..rest.len() {
                if rest[..i].iter().all(|l| l.commutes_with(rest[i]))
                    && best.is_none_or(|b| rest[i] < rest[b])
                {
                    best = Some(i);
                }
            }
            let b = best.expect("the first letter is always movable");
            out.push(rest.remove(b));
        }
        BraidWord {
            strands: self.strands,
            letters: out,
        }
    }

    fn canonical(&self) -> BraidWord {
        self.free_reduce().commuting_reduce().commutation_normal_form()
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub(crate) fn cycle_count(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
        }
    }
    cycles
}

/// Equality up to cyclic rotation, free reduction and commutation of
/// generators `σ_i, σ_j` with `|i − j| ≥ 2`.
pub fn cyclically_equal(a: &BraidWord, b: &BraidWord) -> bool {
    if a.strands != b.strands {
        return false;
    }
    let forms = |w: &BraidWord| -> HashSet<Vec<Letter>> {
        let w = w.canonical();
        let n = w.len().max(1);
        (0..n).map(|r| w.rotate(r).canonical().letters).collect()
    };
    let fa = forms(a);
    forms(b).iter().any(|f| fa.contains(f))
}
