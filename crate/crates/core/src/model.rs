//! Physical configuration of two coupled oscillators with finite reservoirs
//! and the real symmetric generator `M` of the linear amplitude equations
//! `dv/dt = -i M v`.
//!
//! State ordering is `(a1, a2, b_1..b_N1, c_1..c_N2)`. All frequencies are in
//! units of the oscillator frequency and times in its inverse.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default hard cap on the state dimension accepted by [`build_generator`].
pub const DEFAULT_MAX_DIM: usize = 2000;

/// A discrete frequency comb coupled to one oscillator.
///
/// `n_modes = 0` describes an absent reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub n_modes: usize,
    pub freq_step: f64,
    pub coupling: f64,
}

impl ReservoirSpec {
    pub fn new(n_modes: usize, freq_step: f64, coupling: f64) -> Self {
        Self {
            n_modes,
            freq_step,
            coupling,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.freq_step.is_finite() && self.freq_step > 0.0) {
            return Err(Error::config(
                format!("{name}.freq_step"),
                format!("must be finite and > 0, got {}", self.freq_step),
            ));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::config(
                format!("{name}.coupling"),
                format!("must be finite and >= 0, got {}", self.coupling),
            ));
        }
        Ok(())
    }

    pub fn is_absent(&self) -> bool {
        self.n_modes == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOverride {
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Full parameter record of the Hermitian system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    /// Inter-oscillator coupling; may be negative.
    pub coupling: f64,
    pub reservoir1: ReservoirSpec,
    pub reservoir2: ReservoirSpec,
    pub t_max: f64,
    pub dt_sample: f64,
    /// Explicit decay rates for the reduced model. When absent they follow
    /// from the reservoir combs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateOverride>,
}

fn default_omega0() -> f64 {
    1.0
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::config("omega0", "must be finite and > 0"));
        }
        if !self.coupling.is_finite() {
            return Err(Error::config("coupling", "must be finite"));
        }
        self.reservoir1.validate("reservoir1")?;
        self.reservoir2.validate("reservoir2")?;
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::config("t_max", "must be finite and > 0"));
        }
        if !(self.dt_sample > 0.0 && self.dt_sample <= self.t_max) {
            return Err(Error::config("dt_sample", "must satisfy 0 < dt_sample <= t_max"));
        }
        if let Some(r) = self.rates {
            if !(r.gamma1 >= 0.0 && r.gamma2 >= 0.0 && r.gamma1.is_finite() && r.gamma2.is_finite()) {
                return Err(Error::config("rates", "decay rates must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Dimension `2 + N1 + N2` of the full state.
    pub fn dim(&self) -> usize {
        2 + self.reservoir1.n_modes + self.reservoir2.n_modes
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self {
            coupling,
            ..self.clone()
        }
    }

    /// Shortest return time among the present reservoirs, if any.
    pub fn min_return_time(&self) -> Option<f64> {
        [self.reservoir1, self.reservoir2]
            .iter()
            .filter(|r| !r.is_absent())
            .map(return_time)
            .reduce(f64::min)
    }
}

/// Complex amplitude vector `(a1, a2, b.., c..)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState(pub Vec<Complex64>);

impl FullState {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// Oscillator amplitudes set, reservoirs empty.
    pub fn from_oscillators(dim: usize, a1: Complex64, a2: Complex64) -> Self {
        let mut s = Self::zeros(dim);
        s.0[0] = a1;
        s.0[1] = a2;
        s
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn oscillators(&self) -> [Complex64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }
}

/// Mode frequencies `ω0 + δω (k - N/2)` for `k = 1..=N`.
pub fn reservoir_frequencies(spec: &ReservoirSpec, omega0: f64) -> Vec<f64> {
    let half = spec.n_modes as f64 / 2.0;
    (1..=spec.n_modes)
        .map(|k| omega0 + spec.freq_step * (k as f64 - half))
        .collect()
}

/// Return time `2π/δω` of a comb.
pub fn return_time(spec: &ReservoirSpec) -> f64 {
    TAU / spec.freq_step
}

/// Assemble the generator with the default dimension cap.
pub fn build_generator(config: &SystemConfig) -> Result<DMatrix<f64>> {
    build_generator_capped(config, DEFAULT_MAX_DIM)
}

pub fn build_generator_capped(config: &SystemConfig, max_dim: usize) -> Result<DMatrix<f64>> {
    config.validate()?;
    let dim = config.dim();
    if dim > max_dim {
        return Err(Error::DimensionTooLarge { dim, cap: max_dim });
    }
    let mut m = DMatrix::zeros(dim, dim);
    m[(0, 0)] = config.omega0;
    m[(1, 1)] = config.omega0;
    m[(0, 1)] = config.coupling;
    m[(1, 0)] = config.coupling;

    let n1 = config.reservoir1.n_modes;
    let blocks = [
        (0usize, 2usize, &config.reservoir1),
        (1usize, 2 + n1, &config.reservoir2),
    ];
    for (osc, offset, spec) in blocks {
        for (k, w) in reservoir_frequencies(spec, config.omega0).into_iter().enumerate() {
            let idx = offset + k;
            m[(idx, idx)] = w;
            m[(osc, idx)] = spec.coupling;
            m[(idx, osc)] = spec.coupling;
        }
    }
    Ok(m)
}

/// Applies `M` using its arrowhead structure without forming the matrix.
#[derive(Debug, Clone)]
pub(crate) struct ArrowheadOperator {
    omega0: f64,
    coupling: f64,
    g1: f64,
    g2: f64,
    freqs1: Vec<f64>,
    freqs2: Vec<f64>,
}

impl ArrowheadOperator {
    pub(crate) fn new(config: &SystemConfig) -> Self {
        Self {
            omega0: config.omega0,
            coupling: config.coupling,
            g1: config.reservoir1.coupling,
            g2: config.reservoir2.coupling,
            freqs1: reservoir_frequencies(&config.reservoir1, config.omega0),
            freqs2: reservoir_frequencies(&config.reservoir2, config.omega0),
        }
    }

    pub(crate) fn dim(&self) -> usize {
        2 + self.freqs1.len() + self.freqs2.len()
    }

    /// `out = -i M v`
    pub(crate) fn apply_minus_i(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n1 = self.freqs1.len();
        let (b, c) = v[2..].split_at(n1);
        let sum_b: Complex64 = b.iter().sum();
        let sum_c: Complex64 = c.iter().sum();
        let mi = Complex64::new(0.0, -1.0);
        out[0] = mi * (v[0] * self.omega0 + v[1] * self.coupling + sum_b * self.g1);
        out[1] = mi * (v[1] * self.omega0 + v[0] * self.coupling + sum_c * self.g2);
        for (k, w) in self.freqs1.iter().enumerate() {
            out[2 + k] = mi * (b[k] * *w + v[0] * self.g1);
        }
        for (k, w) in self.freqs2.iter().enumerate() {
            out[2 + n1 + k] = mi * (c[k] * *w + v[1] * self.g2);
        }
    }
}
