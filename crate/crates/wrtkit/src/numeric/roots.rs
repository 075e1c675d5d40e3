//! Durand-Kerner (Weierstrass) simultaneous root iteration for small monic
//! complex polynomials. Used to extract the companion roots of the Prony
//! recurrence; downstream refinement only needs coarse estimates, but on
//! well-separated roots the iteration converges to near machine precision.

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct RootsOutcome {
    pub roots: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Roots of the monic polynomial `z^r + c_{r-1} z^{r-1} + ... + c_0`, with
/// `coeffs` listing `c_0..c_{r-1}` (low to high).
pub fn monic_roots(coeffs: &[Complex64]) -> RootsOutcome {
    let r = coeffs.len();
    if r == 0 {
        return RootsOutcome { roots: Vec::new(), converged: true, iterations: 0 };
    }
    if r == 1 {
        return RootsOutcome { roots: vec![-coeffs[0]], converged: true, iterations: 0 };
    }
    // Cauchy bound keeps the initial ring outside no root.
    let radius = 1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let mut z: Vec<Complex64> = (0..r)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * (i as f64) / (r as f64) + 0.401;
            Complex64::from_polar(radius.min(2.0), angle)
        })
        .collect();
    let eval = |x: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for c in coeffs.iter().rev() {
            p = p * x + c;
        }
        p
    };
    let max_iter = 400;
    for iter in 0..max_iter {
        let mut max_step = 0.0f64;
        for i in 0..r {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..r {
                if j != i {
                    let d = z[i] - z[j];
                    denom *= if d.norm() < 1e-30 { Complex64::new(1e-30, 1e-30) } else { d };
                }
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-14 {
            return RootsOutcome { roots: z, converged: true, iterations: iter + 1 };
        }
    }
    RootsOutcome { roots: z, converged: false, iterations: max_iter }
}
