//! Damped Newton iteration for two real equations in one complex unknown.

use crate::surface::C64;

/// Value `(f₁, f₂)` and Jacobian rows `[∂f_i/∂x, ∂f_i/∂y]`.
pub type Eval2 = ([f64; 2], [[f64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonRoot {
    pub root: C64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonFailure {
    /// Iteration budget exhausted without meeting the tolerance.
    NoConvergence,
    /// Iterate left the admissible disk.
    Escaped,
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Solves `J δ = -f`, falling back to a Levenberg–Marquardt step when `J`
/// is close to singular.
fn step(val: [f64; 2], jac: [[f64; 2]; 2]) -> [f64; 2] {
    let [[a, b], [c, d]] = jac;
    let det = a * d - b * c;
    let scale = (a * a + b * b + c * c + d * d).max(f64::MIN_POSITIVE);
    if det.abs() > 1e-12 * scale {
        [(-d * val[0] + b * val[1]) / det, (c * val[0] - a * val[1]) / det]
    } else {
        // (JᵀJ + τI) δ = -Jᵀ f
        let tau = 1e-8 * scale;
        let m00 = a * a + c * c + tau;
        let m01 = a * b + c * d;
        let m11 = b * b + d * d + tau;
        let r0 = -(a * val[0] + c * val[1]);
        let r1 = -(b * val[0] + d * val[1]);
        let det = m00 * m11 - m01 * m01;
        [(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det]
    }
}

pub fn solve(
    f: impl Fn(C64) -> Eval2,
    seed: C64,
    max_iter: usize,
    tol: f64,
    escape_radius: f64,
) -> Result<NewtonRoot, NewtonFailure> {
    let mut w = seed;
    let (mut val, mut jac) = f(w);
    let mut res = norm2(val);
    for it in 0..max_iter {
        if res < tol {
            // one polishing step; keep it only if it helps
            let d = step(val, jac);
            let cand = w + C64::new(d[0], d[1]);
            let (v2, _) = f(cand);
            if norm2(v2) < res {
                return Ok(NewtonRoot {
                    root: cand,
                    residual: norm2(v2),
                    iterations: it + 1,
                });
            }
            return Ok(NewtonRoot {
                root: w,
                residual: res,
                iterations: it,
            });
        }
        let d = step(val, jac);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = w + C64::new(t * d[0], t * d[1]);
            let (v2, j2) = f(cand);
            let r2 = norm2(v2);
            if r2.is_finite() && r2 < res {
                w = cand;
                val = v2;
                jac = j2;
                res = r2;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(NewtonFailure::NoConvergence);
        }
        if w.norm() > escape_radius {
            return Err(NewtonFailure::Escaped);
        }
    }
    if res < tol {
        Ok(NewtonRoot {
            root: w,
            residual: res,
            iterations: max_iter,
        })
    } else {
        Err(NewtonFailure::NoConvergence)
    }
}

/// Polar seed grid `radii × angles` on the annulus `inner < |w| < outer`.
pub fn polar_seeds(inner: f64, outer: f64, radii: usize, angles: usize) -> Vec<C64> {
    let mut seeds = Vec::with_capacity(radii * angles);
    for i in 0..radii {
        let r = inner + (outer - inner) * (i as f64 + 0.5) / radii as f64;
        // stagger alternate rings so seeds do not line up along rays
        let offset = if i % 2 == 0 { 0.0 } else { 0.5 };
        for j in 0..angles {
            let a = 2.0 * std::f64::consts::PI * (j as f64 + offset + 0.123) / angles as f64;
            seeds.push(C64::from_polar(r, a));
        }
    }
    seeds
}

/// Small seed cloud around `center` with geometric radii from `r_min` to `r_max`.
pub fn local_seeds(center: C64, r_min: f64, r_max: f64, radii: usize, angles: usize) -> Vec<C64> {
    let mut seeds = vec![center];
    let ratio = (r_max / r_min).powf(1.0 / (radii.max(2) - 1) as f64);
    let mut r = r_min;
    for i in 0..radii {
        for j in 0..angles {
            let a = 2.0 * std::f64::consts::PI * (j as f64 + 0.5 * (i % 2) as f64) / angles as f64;
            seeds.push(center + C64::from_polar(r, a));
        }
        r *= ratio;
    }
    seeds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_root() {
        // w² = -0.1
        let f = |w: C64| {
            let g = w * w + 0.1;
            let d = 2.0 * w;
            ([g.re, g.im], [[d.re, -d.im], [d.im, d.re]])
        };
        let r = solve(f, C64::new(0.1, 0.5), 50, 1e-12, 10.0).unwrap();
        assert!((r.root - C64::new(0.0, 0.1f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn singular_system_uses_least_squares() {
        // f = (x, 0): a continuum of roots on the imaginary axis
        let f = |w: C64| ([w.re, 0.0], [[1.0, 0.0], [0.0, 0.0]]);
        let r = solve(f, C64::new(0.3, 0.2), 50, 1e-12, 10.0).unwrap();
        assert!(r.root.re.abs() < 1e-12);
        assert!((r.root.im - 0.2).abs() < 1e-6);
    }

    #[test]
    fn escapes_are_reported() {
        let f = |w: C64| ([1.0 + 0.0 * w.re, 0.0], [[1e-3, 0.0], [0.0, 1e-3]]);
        assert!(solve(f, C64::new(0.0, 0.0), 50, 1e-12, 1.0).is_err());
    }
}
