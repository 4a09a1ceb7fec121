use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::word::{cyclically_equal, BraidWord, Letter};
use crate::loop_gamma::LoopGamma;
use crate::trace::{EventClassification, Provenance, TracedBraid};
use crate::Sign;

/// One band piece `b σ_k^{2ε} b⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub conjugator: BraidWord,
    pub k: usize,
    pub epsilon: Sign,
    /// Index of the double point this band comes from.
    pub double_point: usize,
}

impl Band {
    pub fn expand(&self) -> BraidWord {
        let l = Letter::new(self.k, self.epsilon);
        let core = BraidWord::new(self.conjugator.strands(), vec![l, l]).expect("k in range");
        self.conjugator
            .multiply(&core)
            .and_then(|w| w.multiply(&self.conjugator.inverse()))
            .expect("same strand count")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRepresentation {
    pub strands: usize,
    pub even_block: Vec<Letter>,
    pub odd_block: Vec<Letter>,
    pub bands: Vec<Band>,
}

impl BandRepresentation {
    /// `even_block · odd_block · ∏ b_i σ_{k_i}^{2ε_i} b_i⁻¹`.
    pub fn expand(&self) -> BraidWord {
        let mut letters = self.even_block.clone();
        letters.extend_from_slice(&self.odd_block);
        let mut w = BraidWord::new(self.strands, letters).expect("generators in range");
        for b in &self.bands {
            w = w.multiply(&b.expand()).expect("same strand count");
        }
        w
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("template mismatch: {reason}; template {template}, traced {traced}")]
pub struct TemplateMismatch {
    pub reason: String,
    pub template: String,
    pub traced: String,
}

enum Token {
    Base(Letter),
    Piece(usize),
}

/// Rebuilds the band representation from a classified trace and checks
/// that it reproduces the traced word.
pub fn match_band_template(
    traced: &TracedBraid,
    classified: &EventClassification,
    lp: &LoopGamma,
) -> Result<BandRepresentation, TemplateMismatch> {
    let n = traced.strand_count;
    let mismatch = |reason: String, template: String| TemplateMismatch {
        reason,
        template,
        traced: traced.word.to_text(),
    };
    let Some(_) = classified.regime else {
        return Err(mismatch("parameters are outside both regimes".into(), String::new()));
    };
    // the word as base letters and atomic detour pieces
    let mut tokens = Vec::new();
    for e in &traced.events {
        match e.provenance {
            Provenance::BaseArc => tokens.push(Token::Base(e.letter())),
            Provenance::TubeSide { detour, .. } | Provenance::DetourArc(detour) => {
                if !matches!(tokens.last(), Some(Token::Piece(d)) if *d == detour) {
                    tokens.push(Token::Piece(detour));
                }
            }
        }
    }
    // rotate to the first letter of the even block (odd if there is none)
    let parity = |t: &Token| match t {
        Token::Base(l) => Some(l.k % 2),
        Token::Piece(_) => None,
    };
    let want = if tokens.iter().any(|t| parity(t) == Some(0)) { 0 } else { 1 };
    let m = tokens.len();
    let previous_base = |i: usize| (1..=m).find_map(|j| parity(&tokens[(i + m - j) % m]));
    let start = (0..m)
        .find(|&i| parity(&tokens[i]) == Some(want) && previous_base(i) != Some(want))
        .or_else(|| (0..m).find(|&i| parity(&tokens[i]).is_some()))
        .unwrap_or(0);
    tokens.rotate_left(start);
    let mut ys: Vec<Vec<Letter>> = vec![Vec::new()];
    let mut pieces = Vec::new();
    for t in &tokens {
        match t {
            Token::Base(l) => ys.last_mut().unwrap().push(*l),
            Token::Piece(d) => {
                pieces.push(*d);
                ys.push(Vec::new());
            }
        }
    }
    let base: Vec<Letter> = ys.concat();
    let split = base.iter().position(|l| l.k % 2 == 1).unwrap_or(base.len());
    let (even_block, odd_block) = (base[..split].to_vec(), base[split..].to_vec());
    if !even_block.iter().all(|l| l.k % 2 == 0) || !odd_block.iter().all(|l| l.k % 2 == 1) {
        return Err(mismatch("base crossings are not two parity blocks".into(), String::new()));
    }
    let word = |letters: Vec<Letter>| BraidWord::new(n, letters).expect("generators in range");
    let mut bands = Vec::new();
    for (j, &d) in pieces.iter().enumerate() {
        let ev = classified
            .detours
            .iter()
            .find(|e| e.detour == d)
            .ok_or_else(|| mismatch(format!("detour {d} was not classified"), String::new()))?;
        let tail = word(ys[j + 1..].concat());
        let conjugator = tail.inverse().multiply(&word(ev.outbound.clone())).unwrap().free_reduce();
        let letter = ev.arc[0];
        let detour = &lp.detours[d];
        if letter.sign != detour.sign {
            return Err(mismatch(
                format!("detour {d} crossings have sign {:?} but its double point has {:?}", letter.sign, detour.sign),
                String::new(),
            ));
        }
        bands.push(Band {
            conjugator,
            k: letter.k,
            epsilon: letter.sign,
            double_point: detour.double_point,
        });
    }
    let rep = BandRepresentation {
        strands: n,
        even_block,
        odd_block,
        bands,
    };
    let expanded = rep.expand();
    if !cyclically_equal(&expanded, &traced.word) {
        return Err(mismatch(
            "expansion differs from the traced word".into(),
            expanded.to_text(),
        ));
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSurface {
    pub chi: i64,
    /// `(1 − χ)/2` when the closure is a knot.
    pub genus: Option<Ratio<i64>>,
}

/// Euler characteristic of the band surface: one disk per strand, one
/// band per letter of the blocks and two per band piece.
pub fn band_euler_characteristic(rep: &BandRepresentation) -> BandSurface {
    let chi = rep.strands as i64
        - (rep.even_block.len() + rep.odd_block.len() + 2 * rep.bands.len()) as i64;
    let genus = (rep.expand().closure_components() == 1).then(|| Ratio::new(1 - chi, 2));
    BandSurface { chi, genus }
}
