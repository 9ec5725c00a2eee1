//! Effective non-Hermitian two-mode model
//!
//! ```text
//! d/dt (a1, a2) = G (a1, a2),   G = [[-iω0 - γ1, -iΩ], [-iΩ, -iω0 - γ2]]
//! ```
//!
//! with decay rates `γ = π g² / δω` taken from the finite reservoirs.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{ReservoirSpec, SystemConfig};

/// Eigenvector basis is replaced by the Jordan form when the eigenvalue
/// half-splitting `|s|` falls below this fraction of `Ω_EP`.
pub const COALESCENCE_REL_TOL: f64 = 1e-7;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Amplitude decay rate `π g² / δω` of an oscillator coupled to a comb.
/// An absent reservoir gives zero.
pub fn decay_rate(spec: &ReservoirSpec) -> f64 {
    if spec.is_absent() {
        return 0.0;
    }
    PI * spec.coupling * spec.coupling / spec.freq_step
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub omega0: f64,
    pub coupling: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl ReducedParams {
    pub fn new(omega0: f64, coupling: f64, gamma1: f64, gamma2: f64) -> Self {
        debug_assert!(gamma1 >= 0.0 && gamma2 >= 0.0);
        Self {
            omega0,
            coupling,
            gamma1,
            gamma2,
        }
    }

    pub fn from_config(config: &SystemConfig) -> Self {
        let (gamma1, gamma2) = match config.rates {
            Some(r) => (r.gamma1, r.gamma2),
            None => (decay_rate(&config.reservoir1), decay_rate(&config.reservoir2)),
        };
        Self::new(config.omega0, config.coupling, gamma1, gamma2)
    }

    pub fn with_coupling(self, coupling: f64) -> Self {
        Self { coupling, ..self }
    }

    /// `γ1 - γ2`
    pub fn rate_difference(&self) -> f64 {
        self.gamma1 - self.gamma2
    }

    pub fn generator(&self) -> [[Complex64; 2]; 2] {
        let w = Complex64::new(0.0, -self.omega0);
        let off = Complex64::new(0.0, -self.coupling);
        [[w - self.gamma1, off], [off, w - self.gamma2]]
    }

    /// `((γ1-γ2)/2)² - Ω²`, factored to keep precision near the EP.
    fn discriminant(&self) -> f64 {
        let half = 0.5 * self.rate_difference().abs();
        let om = self.coupling.abs();
        (half - om) * (half + om)
    }

    /// Half the eigenvalue splitting; real below the EP, imaginary above.
    fn half_splitting(&self) -> Complex64 {
        let d = self.discriminant();
        if d >= 0.0 {
            Complex64::new(d.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-d).sqrt())
        }
    }

    fn mean_eigenvalue(&self) -> Complex64 {
        Complex64::new(-0.5 * (self.gamma1 + self.gamma2), -self.omega0)
    }

    pub fn is_above_ep(&self) -> bool {
        self.coupling.abs() >= ep_coupling(self)
    }
}

/// `Ω_EP = |γ1 - γ2| / 2`
pub fn ep_coupling(params: &ReducedParams) -> f64 {
    0.5 * params.rate_difference().abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair2x2 {
    /// Slower-decaying eigenvalue below the EP.
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub h1: [Complex64; 2],
    pub h2: [Complex64; 2],
    /// Set when the pair is within the coalescence tolerance of the EP.
    pub coalesced: bool,
}

impl EigenPair2x2 {
    /// `|h1† h2|`
    pub fn overlap(&self) -> f64 {
        (self.h1[0].conj() * self.h2[0] + self.h1[1].conj() * self.h2[1]).norm()
    }
}

fn is_coalesced(params: &ReducedParams, s: Complex64) -> bool {
    let ep = ep_coupling(params);
    s.norm() <= COALESCENCE_REL_TOL * ep || s.norm() == 0.0
}

/// Unit eigenvector of `G` for `λ = λ̄ + σ`, with the second component real
/// and non-negative (first component real and positive if the second
/// vanishes).
fn eigenvector(params: &ReducedParams, sigma: Complex64) -> [Complex64; 2] {
    let half = Complex64::new(0.5 * params.rate_difference(), 0.0);
    let om = Complex64::new(params.coupling, 0.0);
    // Both forms solve (G - λ) h = 0; pick the better conditioned one.
    let u = [-I * (half - sigma), om];
    let w = [-I * om, half + sigma];
    let norm = |v: &[Complex64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let (v, n) = if norm(&u) >= norm(&w) {
        (u, norm(&u))
    } else {
        (w, norm(&w))
    };
    if n == 0.0 {
        // G is a multiple of the identity
        return if sigma.re >= 0.0 {
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
        } else {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        };
    }
    let mut h = [v[0] / n, v[1] / n];
    let anchor = if h[1].norm() > 1e-300 { h[1] } else { h[0] };
    let phase = anchor.conj() / anchor.norm();
    h[0] *= phase;
    h[1] *= phase;
    h
}

pub fn eigensystem(params: &ReducedParams) -> EigenPair2x2 {
    let s = params.half_splitting();
    let mean = params.mean_eigenvalue();
    let coalesced = is_coalesced(params, s);
    if coalesced {
        let h = eigenvector(params, Complex64::new(0.0, 0.0));
        return EigenPair2x2 {
            lambda1: mean,
            lambda2: mean,
            h1: h,
            h2: h,
            coalesced,
        };
    }
    EigenPair2x2 {
        lambda1: mean + s,
        lambda2: mean - s,
        h1: eigenvector(params, s),
        h2: eigenvector(params, -s),
        coalesced,
    }
}

/// Precomputed solution of the two-mode model for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ReducedSolver {
    params: ReducedParams,
    eigen: EigenPair2x2,
}

impl ReducedSolver {
    pub fn new(params: ReducedParams) -> Self {
        Self {
            eigen: eigensystem(&params),
            params,
        }
    }

    pub fn params(&self) -> &ReducedParams {
        &self.params
    }

    pub fn eigen(&self) -> &EigenPair2x2 {
        &self.eigen
    }

    /// Amplitudes at `t`, multiplied by `exp(-shift · t)`. A real `shift`
    /// keeps long-horizon samples representable without changing ratios.
    pub fn evolve_scaled(&self, a0: [Complex64; 2], t: f64, shift: f64) -> [Complex64; 2] {
        let e = &self.eigen;
        if e.coalesced {
            // exp(Gt) = exp(λt) (I + t (G - λI))
            let g = self.params.generator();
            let n = [
                [g[0][0] - e.lambda1, g[0][1]],
                [g[1][0], g[1][1] - e.lambda1],
            ];
            let f = ((e.lambda1 - shift) * t).exp();
            return [
                f * (a0[0] + (n[0][0] * a0[0] + n[0][1] * a0[1]) * t),
                f * (a0[1] + (n[1][0] * a0[0] + n[1][1] * a0[1]) * t),
            ];
        }
        // Solve [h1 h2] (c1, c2) = a0 by Cramer's rule.
        let det = e.h1[0] * e.h2[1] - e.h2[0] * e.h1[1];
        let c1 = (a0[0] * e.h2[1] - e.h2[0] * a0[1]) / det;
        let c2 = (e.h1[0] * a0[1] - a0[0] * e.h1[1]) / det;
        let f1 = c1 * ((e.lambda1 - shift) * t).exp();
        let f2 = c2 * ((e.lambda2 - shift) * t).exp();
        [f1 * e.h1[0] + f2 * e.h2[0], f1 * e.h1[1] + f2 * e.h2[1]]
    }

    pub fn evolve(&self, a0: [Complex64; 2], t: f64) -> [Complex64; 2] {
        self.evolve_scaled(a0, t, 0.0)
    }

    /// Real part of the slowest eigenvalue; dividing by `exp(shift t)` keeps
    /// the dominant term of order one.
    pub fn natural_shift(&self) -> f64 {
        self.eigen.lambda1.re.max(self.eigen.lambda2.re)
    }
}

/// `c1 h1 e^{λ1 t} + c2 h2 e^{λ2 t}` for the given initial amplitudes.
pub fn solve_reduced(params: &ReducedParams, a1_0: Complex64, a2_0: Complex64, t: f64) -> (Complex64, Complex64) {
    let [a1, a2] = ReducedSolver::new(*params).evolve([a1_0, a2_0], t);
    (a1, a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(params: &ReducedParams, lambda: Complex64, h: [Complex64; 2]) -> f64 {
        let g = params.generator();
        let r0 = g[0][0] * h[0] + g[0][1] * h[1] - lambda * h[0];
        let r1 = g[1][0] * h[0] + g[1][1] * h[1] - lambda * h[1];
        (r0.norm_sqr() + r1.norm_sqr()).sqrt()
    }

    #[test]
    fn decay_rates_from_combs() {
        let r = ReservoirSpec::new(40, 5e-3, 1.5e-3);
        assert!((decay_rate(&r) - 1.413716694115407e-3).abs() < 1e-15);
        assert_eq!(decay_rate(&ReservoirSpec::new(40, 5e-3, 0.0)), 0.0);
        let fig6 = ReservoirSpec::new(40, 5e-3, 2.0 * 10f64.sqrt() * 1e-3);
        assert!((decay_rate(&fig6) - PI * 8e-3).abs() < 1e-15);
        assert!((decay_rate(&fig6) - 2.513e-2).abs() < 1e-5);
    }

    #[test]
    fn ep_values() {
        assert_eq!(ep_coupling(&ReducedParams::new(1.0, 0.0, 0.01, 0.01)), 0.0);
        assert!((ep_coupling(&ReducedParams::new(1.0, 0.0, 0.03, 0.01)) - 0.01).abs() < 1e-15);
        let fig6 = ReducedParams::from_config(&presets::system("fig6a").unwrap());
        assert!((ep_coupling(&fig6) - 8.12e-3).abs() < 5e-6, "{}", ep_coupling(&fig6));
    }

    #[test]
    fn decoupled_eigensystem() {
        let p = ReducedParams::new(1.0, 0.0, 0.03, 0.01);
        let e = eigensystem(&p);
        // slower-decaying first
        assert!((e.lambda1 - c(-0.01, -1.0)).norm() < 1e-15);
        assert!((e.lambda2 - c(-0.03, -1.0)).norm() < 1e-15);
        assert!((e.h1[1] - c(1.0, 0.0)).norm() < 1e-15 && e.h1[0].norm() < 1e-15);
        assert!((e.h2[0].norm() - 1.0).abs() < 1e-15 && e.h2[1].norm() < 1e-15);
    }

    #[test]
    fn coalescence_at_ep() {
        let p = ReducedParams::new(1.0, 0.01, 0.03, 0.01);
        let e = eigensystem(&p);
        assert!(e.coalesced);
        assert!((e.lambda1 - e.lambda2).norm() < 1e-12);
        assert!(e.overlap() > 1.0 - 1e-12);
        assert!(residual(&p, e.lambda1, e.h1) < 1e-15);
    }

    #[test]
    fn above_ep_splitting() {
        let p = ReducedParams::new(1.0, 0.0125, 0.03, 0.01);
        let e = eigensystem(&p);
        assert_eq!(e.lambda1.re, e.lambda2.re);
        assert!((e.lambda1.re + 0.02).abs() < 1e-15);
        assert!(((e.lambda1.im - e.lambda2.im).abs() - 0.015).abs() < 1e-15);
    }

    #[test]
    fn eigen_residuals_and_normalization() {
        for (om, g1, g2) in [(0.004, 0.03, 0.01), (0.02, 0.03, 0.01), (-0.006, 0.0, 0.05), (0.001, 0.02, 0.02)] {
            let p = ReducedParams::new(1.0, om, g1, g2);
            let e = eigensystem(&p);
            let gnorm = 1.0 + g1.max(g2) + om.abs();
            for (l, h) in [(e.lambda1, e.h1), (e.lambda2, e.h2)] {
                assert!(residual(&p, l, h) <= 1e-12 * gnorm);
                assert!(((h[0].norm_sqr() + h[1].norm_sqr()).sqrt() - 1.0).abs() < 1e-14);
                assert!(h[1].im == 0.0 && h[1].re >= 0.0);
            }
        }
    }

    #[test]
    fn solve_at_zero_time_and_decoupled() {
        let p = ReducedParams::new(1.0, 0.004, 0.03, 0.01);
        let (a1, a2) = solve_reduced(&p, c(0.3, 0.1), c(-0.2, 0.9), 0.0);
        assert!((a1 - c(0.3, 0.1)).norm() < 1e-15 && (a2 - c(-0.2, 0.9)).norm() < 1e-15);

        let p0 = ReducedParams::new(1.0, 0.0, 0.03, 0.01);
        let t = 37.0;
        let (a1, _) = solve_reduced(&p0, c(0.7, 0.0), c(0.2, 0.0), t);
        let want = c(0.7, 0.0) * (c(-0.03, -1.0) * t).exp();
        assert!((a1 - want).norm() < 1e-15);
    }

    /// RK4 on the 2x2 system with a tiny step as an independent reference.
    fn rk4_reference(p: &ReducedParams, a0: [Complex64; 2], t: f64, steps: usize) -> [Complex64; 2] {
        let g = p.generator();
        let f = |v: [Complex64; 2]| [g[0][0] * v[0] + g[0][1] * v[1], g[1][0] * v[0] + g[1][1] * v[1]];
        let h = t / steps as f64;
        let mut v = a0;
        for _ in 0..steps {
            let k1 = f(v);
            let k2 = f([v[0] + k1[0] * (h / 2.0), v[1] + k1[1] * (h / 2.0)]);
            let k3 = f([v[0] + k2[0] * (h / 2.0), v[1] + k2[1] * (h / 2.0)]);
            let k4 = f([v[0] + k3[0] * h, v[1] + k3[1] * h]);
            for i in 0..2 {
                v[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        v
    }

    #[test]
    fn matches_direct_integration() {
        let a0 = [c(0.6, -0.3), c(0.2, 0.7)];
        for om in [0.003, 0.01, 0.0125, 0.03] {
            let p = ReducedParams::new(1.0, om, 0.03, 0.01);
            let t = 10.0 / 0.01;
            let want = rk4_reference(&p, a0, t, 200_000);
            let got = ReducedSolver::new(p).evolve(a0, t);
            for i in 0..2 {
                assert!((got[i] - want[i]).norm() < 1e-8, "om={om}: {} vs {}", got[i], want[i]);
            }
        }
    }

    #[test]
    fn near_coalescence_is_continuous() {
        let a0 = [c(0.6, -0.3), c(0.2, 0.7)];
        let at = ReducedSolver::new(ReducedParams::new(1.0, 0.01, 0.03, 0.01)).evolve(a0, 300.0);
        let near = ReducedSolver::new(ReducedParams::new(1.0, 0.01 * (1.0 - 1e-9), 0.03, 0.01)).evolve(a0, 300.0);
        for i in 0..2 {
            assert!((at[i] - near[i]).norm() < 1e-6);
        }
    }

    #[test]
    fn ratio_converges_to_slow_eigenstate() {
        let p = ReducedParams::new(1.0, 0.006, 0.03, 0.01);
        let solver = ReducedSolver::new(p);
        let e = solver.eigen();
        let target = e.h1[0] / e.h1[1];
        for a0 in [[c(1.0, 0.0), c(0.1, 0.0)], [c(0.0, 0.3), c(-0.9, 0.2)], [c(-0.5, -0.5), c(0.5, 0.1)]] {
            let a = solver.evolve_scaled(a0, 5000.0, solver.natural_shift());
            assert!((a[0] / a[1] - target).norm() < 1e-10);
        }
        // attractor sits on the imaginary axis at (γ2-γ1 + sqrt(Δ² - 4Ω²)) / (2Ω)
        assert!((target - c(0.0, -1.0 / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn dichotomy_signs() {
        let below = eigensystem(&ReducedParams::new(1.0, 0.004, 0.03, 0.01));
        assert!(below.lambda1.re > below.lambda2.re);
        assert_eq!(below.lambda1.im, -1.0);
        assert_eq!(below.lambda2.im, -1.0);
        let above = eigensystem(&ReducedParams::new(1.0, 0.02, 0.03, 0.01));
        assert_eq!(above.lambda1.re, above.lambda2.re);
        assert_ne!(above.lambda1.im, above.lambda2.im);
    }
}
