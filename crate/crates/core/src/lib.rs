//! Braids of perturbed branched holomorphic disks.
//!
//! A disk `w ↦ (wᴺ, h(w))` in `ℂ²` is perturbed by linear terms
//! `λw + μw̄ + Re(γw²)`. The perturbed disk is immersed with isolated
//! transverse double points; pushing its boundary off the double points
//! gives a closed braid whose word this crate computes and analyses.

pub mod braid;
pub mod config;
pub mod double_points;
pub mod locus;
pub mod loop_gamma;
pub mod newton;
pub mod pipeline;
pub mod report;
pub mod surface;
pub mod svg;
pub mod trace;

use serde::{Deserialize, Serialize};

pub use num_complex::Complex64;
pub use surface::{BranchedDiskModel, Monomial, PerturbationParams, C64};

/// Orientation sign of a double point or crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// Sign of a nonzero real; zero counts as positive.
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}
