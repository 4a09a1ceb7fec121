//! The branched disk `w ↦ (w^N, h(w))` and its perturbations
//! `w ↦ (w^N, h(w) + λw + μw̄ + Re(γw²))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("branch order must be at least 2, got {0}")]
    BranchOrder(usize),
    #[error("monomial w^{deg_w} cw^{deg_conj} has valuation {} <= N = {n}", deg_w + deg_conj)]
    Valuation { deg_w: u32, deg_conj: u32, n: usize },
    #[error("duplicate monomial w^{0} cw^{1}")]
    DuplicateMonomial(u32, u32),
    #[error("monomial w^{0} cw^{1} has a zero coefficient")]
    ZeroCoefficient(u32, u32),
    #[error("domain radius must lie in (0, 1], got {0}")]
    DomainRadius(f64),
    #[error("lambda and mu cannot both vanish")]
    DegeneratePerturbation,
    #[error("|gamma| = {gamma} exceeds 0.01 * max(|lambda|, |mu|) = {bound}")]
    GammaTooLarge { gamma: f64, bound: f64 },
    #[error("non-finite parameter")]
    NonFinite,
}

/// `coeff · w^deg_w · w̄^deg_conj`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: C64,
    pub deg_w: u32,
    pub deg_conj: u32,
}

impl Monomial {
    pub fn new(coeff: C64, deg_w: u32, deg_conj: u32) -> Self {
        Monomial {
            coeff,
            deg_w,
            deg_conj,
        }
    }

    pub fn holomorphic(coeff: C64, deg: u32) -> Self {
        Self::new(coeff, deg, 0)
    }

    pub fn degree(&self) -> u32 {
        self.deg_w + self.deg_conj
    }

    pub fn eval(&self, w: C64) -> C64 {
        self.coeff * w.powu(self.deg_w) * w.conj().powu(self.deg_conj)
    }

    /// Wirtinger derivatives `(∂/∂w, ∂/∂w̄)`.
    pub fn wirtinger(&self, w: C64) -> (C64, C64) {
        let wb = w.conj();
        let dw = if self.deg_w == 0 {
            C64::new(0.0, 0.0)
        } else {
            self.coeff * f64::from(self.deg_w) * w.powu(self.deg_w - 1) * wb.powu(self.deg_conj)
        };
        let dwb = if self.deg_conj == 0 {
            C64::new(0.0, 0.0)
        } else {
            self.coeff * f64::from(self.deg_conj) * w.powu(self.deg_w) * wb.powu(self.deg_conj - 1)
        };
        (dw, dwb)
    }
}

/// The germ `F₀(w) = (w^N, h(w))` with `h` a finite sum of monomials of
/// total degree greater than `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchedDiskModel {
    n: usize,
    terms: Vec<Monomial>,
    r0: f64,
}

impl BranchedDiskModel {
    pub fn new(n: usize, terms: Vec<Monomial>) -> Result<Self, ModelError> {
        Self::with_radius(n, terms, 1.0)
    }

    pub fn with_radius(n: usize, terms: Vec<Monomial>, r0: f64) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::BranchOrder(n));
        }
        if !(r0 > 0.0 && r0 <= 1.0) {
            return Err(ModelError::DomainRadius(r0));
        }
        for (i, m) in terms.iter().enumerate() {
            if !(m.coeff.re.is_finite() && m.coeff.im.is_finite()) {
                return Err(ModelError::NonFinite);
            }
            if m.coeff == C64::new(0.0, 0.0) {
                return Err(ModelError::ZeroCoefficient(m.deg_w, m.deg_conj));
            }
            if (m.degree() as usize) < n + 1 {
                return Err(ModelError::Valuation {
                    deg_w: m.deg_w,
                    deg_conj: m.deg_conj,
                    n,
                });
            }
            if terms[..i]
                .iter()
                .any(|o| o.deg_w == m.deg_w && o.deg_conj == m.deg_conj)
            {
                return Err(ModelError::DuplicateMonomial(m.deg_w, m.deg_conj));
            }
        }
        Ok(BranchedDiskModel { n, terms, r0 })
    }

    /// `h = w^M`.
    pub fn torus(n: usize, m: u32) -> Result<Self, ModelError> {
        Self::new(n, vec![Monomial::holomorphic(C64::new(1.0, 0.0), m)])
    }

    pub fn branch_order(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn domain_radius(&self) -> f64 {
        self.r0
    }

    pub fn is_holomorphic(&self) -> bool {
        self.terms.iter().all(|m| m.deg_conj == 0)
    }

    pub fn eval_h(&self, w: C64) -> C64 {
        self.terms.iter().map(|m| m.eval(w)).sum()
    }

    pub fn h_wirtinger(&self, w: C64) -> (C64, C64) {
        self.terms.iter().fold(
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            |(a, b), m| {
                let (dw, dwb) = m.wirtinger(w);
                (a + dw, b + dwb)
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub lambda: C64,
    pub mu: C64,
    pub gamma: C64,
}

impl PerturbationParams {
    pub fn new(lambda: C64, mu: C64, gamma: C64) -> Result<Self, ModelError> {
        let p = PerturbationParams { lambda, mu, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn real(lambda: f64, mu: f64) -> Result<Self, ModelError> {
        Self::new(
            C64::new(lambda, 0.0),
            C64::new(mu, 0.0),
            C64::new(0.0, 0.0),
        )
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.lambda, self.mu, self.gamma];
        if all.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(ModelError::NonFinite);
        }
        let scale = self.scale();
        if scale == 0.0 {
            return Err(ModelError::DegeneratePerturbation);
        }
        let bound = 0.01 * scale;
        // relative slack so that the retry schedule's γ₀ = bound is admissible
        if self.gamma.norm() > bound * (1.0 + 1e-12) {
            return Err(ModelError::GammaTooLarge {
                gamma: self.gamma.norm(),
                bound,
            });
        }
        Ok(())
    }

    /// `max(|λ|, |μ|)`.
    pub fn scale(&self) -> f64 {
        self.lambda.norm().max(self.mu.norm())
    }

    pub fn with_gamma(&self, gamma: C64) -> Result<Self, ModelError> {
        Self::new(self.lambda, self.mu, gamma)
    }
}

/// A point of `R⁴ = C ⊕ C`: `z1` lives in the base plane, `z2` in the
/// plane of the last two coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point4 {
    pub z1: C64,
    pub z2: C64,
}

impl Point4 {
    pub fn coords(&self) -> [f64; 4] {
        [self.z1.re, self.z1.im, self.z2.re, self.z2.im]
    }

    pub fn distance(&self, other: &Point4) -> f64 {
        ((self.z1 - other.z1).norm_sqr() + (self.z2 - other.z2).norm_sqr()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Pi2,
    Pi3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projected {
    Plane(C64),
    Space([f64; 3]),
}

pub fn project(p: &Point4, which: Projection) -> Projected {
    match which {
        Projection::Pi2 => Projected::Plane(p.z1),
        Projection::Pi3 => Projected::Space([p.z1.re, p.z1.im, p.z2.re]),
    }
}

/// Second coordinate `z2(w) = h(w) + λw + μw̄ + Re(γw²)`.
pub fn eval_z2(model: &BranchedDiskModel, params: &PerturbationParams, w: C64) -> C64 {
    let quad = (params.gamma * w * w).re;
    model.eval_h(w) + params.lambda * w + params.mu * w.conj() + quad
}

/// Wirtinger derivatives of `z2`.
pub fn z2_wirtinger(model: &BranchedDiskModel, params: &PerturbationParams, w: C64) -> (C64, C64) {
    let (hw, hwb) = model.h_wirtinger(w);
    // Re(γw²) = (γw² + γ̄w̄²)/2
    (
        hw + params.lambda + params.gamma * w,
        hwb + params.mu + (params.gamma * w).conj(),
    )
}

pub fn eval_f(model: &BranchedDiskModel, params: &PerturbationParams, w: C64) -> Point4 {
    Point4 {
        z1: w.powu(model.branch_order() as u32),
        z2: eval_z2(model, params, w),
    }
}

/// Real 4×2 Jacobian, stored as the two columns `∂F/∂x` and `∂F/∂y`.
pub type Jacobian = [[f64; 4]; 2];

pub fn jacobian_f(model: &BranchedDiskModel, params: &PerturbationParams, w: C64) -> Jacobian {
    let n = model.branch_order() as u32;
    let d1 = f64::from(n) * w.powu(n - 1);
    let (g, gb) = z2_wirtinger(model, params, w);
    let i = C64::new(0.0, 1.0);
    // ∂/∂x = ∂_w + ∂_w̄, ∂/∂y = i(∂_w − ∂_w̄)
    let d1x = d1;
    let d1y = i * d1;
    let d2x = g + gb;
    let d2y = i * (g - gb);
    [
        [d1x.re, d1x.im, d2x.re, d2x.im],
        [d1y.re, d1y.im, d2y.re, d2y.im],
    ]
}

/// Primitive N-th root of unity raised to `k`.
pub fn root_of_unity(n: usize, k: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64)
}
