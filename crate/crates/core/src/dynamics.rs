//! Interchangeable oscillator-pair dynamics behind one trait, looked up by
//! name at runtime.
//!
//! Every analysis in this crate only needs the map from an initial oscillator
//! pair `(a1, a2)` (reservoirs empty) to the pair on a fixed time grid. The
//! built-in models are
//!
//! * `hermitian` — full system, spectral propagation (exact at any time),
//! * `hermitian-rk4` — full system, fixed-step RK4,
//! * `reduced` — two-mode non-Hermitian model with comb decay rates.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{FullState, SystemConfig};
use crate::propagation::{integrate_rk, SpectralPropagator};
use crate::reduced::{ReducedParams, ReducedSolver};

pub type Pair = [Complex64; 2];

/// A model prepared for one configuration and one time grid.
///
/// Implementations may scale each returned sample by a positive real factor
/// (the same for both oscillators). Ratios `a1/a2` and relative magnitudes
/// are unaffected; [`PairEvolution::is_scaled`] reports whether this happens.
pub trait PairEvolution: Send + Sync {
    fn evolve(&self, initial: Pair) -> Result<Vec<Pair>>;

    fn is_scaled(&self) -> bool {
        false
    }
}

pub trait DynamicsModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn prepare(&self, config: &SystemConfig, times: &[f64]) -> Result<Box<dyn PairEvolution>>;
}

#[derive(Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<&'static str, Arc<dyn DynamicsModel>>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with `hermitian`, `hermitian-rk4` and `reduced`.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(SpectralModel));
        r.register(Arc::new(StepModel::default()));
        r.register(Arc::new(ReducedModel));
        r
    }

    /// Replaces any model registered under the same name.
    pub fn register(&mut self, model: Arc<dyn DynamicsModel>) {
        self.models.insert(model.name(), model);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn DynamicsModel>> {
        self.models.get(name).cloned().ok_or_else(|| Error::UnknownModel {
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn DynamicsModel>> {
        self.models.values()
    }
}

/// Full Hermitian system through the eigendecomposition of `M`.
pub struct SpectralModel;

struct SpectralEvolution {
    blocks: Vec<[[Complex64; 2]; 2]>,
}

impl PairEvolution for SpectralEvolution {
    fn evolve(&self, a: Pair) -> Result<Vec<Pair>> {
        Ok(self
            .blocks
            .iter()
            .map(|u| [u[0][0] * a[0] + u[0][1] * a[1], u[1][0] * a[0] + u[1][1] * a[1]])
            .collect())
    }
}

impl DynamicsModel for SpectralModel {
    fn name(&self) -> &'static str {
        "hermitian"
    }

    fn description(&self) -> &'static str {
        "full oscillator+reservoir system, exact spectral propagation"
    }

    fn prepare(&self, config: &SystemConfig, times: &[f64]) -> Result<Box<dyn PairEvolution>> {
        let prop = SpectralPropagator::from_config(config)?;
        let blocks = times.iter().map(|&t| prop.oscillator_block(t)).collect();
        Ok(Box::new(SpectralEvolution { blocks }))
    }
}

/// Full Hermitian system integrated with fixed-step RK4.
pub struct StepModel {
    pub dt_step: f64,
}

impl Default for StepModel {
    fn default() -> Self {
        Self { dt_step: 1e-2 }
    }
}

struct StepEvolution {
    config: SystemConfig,
    times: Vec<f64>,
    dt_step: f64,
}

impl PairEvolution for StepEvolution {
    fn evolve(&self, a: Pair) -> Result<Vec<Pair>> {
        let initial = FullState::from_oscillators(self.config.dim(), a[0], a[1]);
        let mut out = Vec::with_capacity(self.times.len());
        // integrate_rk samples on a uniform grid; evolve piecewise so any
        // increasing grid works.
        let mut state = initial;
        let mut t_prev = 0.0;
        for &t in &self.times {
            let span = t - t_prev;
            if span > 0.0 {
                let tr = integrate_rk(&self.config, &state, span, self.dt_step.min(span), span)?;
                state = tr.full_states().expect("full states").last().cloned().expect("sample");
            }
            out.push(state.oscillators());
            t_prev = t;
        }
        Ok(out)
    }
}

impl DynamicsModel for StepModel {
    fn name(&self) -> &'static str {
        "hermitian-rk4"
    }

    fn description(&self) -> &'static str {
        "full oscillator+reservoir system, fixed-step RK4"
    }

    fn prepare(&self, config: &SystemConfig, times: &[f64]) -> Result<Box<dyn PairEvolution>> {
        config.validate()?;
        Ok(Box::new(StepEvolution {
            config: config.clone(),
            times: times.to_vec(),
            dt_step: self.dt_step,
        }))
    }
}

/// Two-mode non-Hermitian model.
pub struct ReducedModel;

struct ReducedEvolution {
    solver: ReducedSolver,
    times: Vec<f64>,
    shift: f64,
}

impl PairEvolution for ReducedEvolution {
    fn evolve(&self, a: Pair) -> Result<Vec<Pair>> {
        Ok(self
            .times
            .iter()
            .map(|&t| self.solver.evolve_scaled(a, t, self.shift))
            .collect())
    }

    fn is_scaled(&self) -> bool {
        self.shift != 0.0
    }
}

impl ReducedModel {
    /// Unscaled amplitudes, for overlays on the Hermitian trajectory.
    pub fn prepare_unscaled(config: &SystemConfig, times: &[f64]) -> Result<Box<dyn PairEvolution>> {
        config.validate()?;
        Ok(Box::new(ReducedEvolution {
            solver: ReducedSolver::new(ReducedParams::from_config(config)),
            times: times.to_vec(),
            shift: 0.0,
        }))
    }
}

impl DynamicsModel for ReducedModel {
    fn name(&self) -> &'static str {
        "reduced"
    }

    fn description(&self) -> &'static str {
        "effective two-mode non-Hermitian model with comb decay rates"
    }

    fn prepare(&self, config: &SystemConfig, times: &[f64]) -> Result<Box<dyn PairEvolution>> {
        config.validate()?;
        let solver = ReducedSolver::new(ReducedParams::from_config(config));
        let shift = solver.natural_shift();
        Ok(Box::new(ReducedEvolution {
            solver,
            times: times.to_vec(),
            shift,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn builtin_names() {
        let r = ModelRegistry::builtin();
        assert_eq!(r.names(), vec!["hermitian", "hermitian-rk4", "reduced"]);
        assert!(matches!(r.get("nope"), Err(Error::UnknownModel { .. })));
    }

    #[test]
    fn spectral_and_step_models_agree() {
        let cfg = presets::system("fig7").unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 5.0).collect();
        let r = ModelRegistry::builtin();
        let a = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let x = r.get("hermitian").unwrap().prepare(&cfg, &times).unwrap().evolve(a).unwrap();
        let y = r.get("hermitian-rk4").unwrap().prepare(&cfg, &times).unwrap().evolve(a).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p[0] - q[0]).norm() < 1e-7 && (p[1] - q[1]).norm() < 1e-7);
        }
    }

    #[test]
    fn reduced_scaling_preserves_ratio() {
        let cfg = presets::system("fig6b").unwrap();
        let times = vec![0.0, 100.0, 2000.0];
        let a = [Complex64::new(0.6, 0.1), Complex64::new(0.2, 0.7)];
        let scaled = ReducedModel.prepare(&cfg, &times).unwrap().evolve(a).unwrap();
        let plain = ReducedModel::prepare_unscaled(&cfg, &times).unwrap().evolve(a).unwrap();
        for (s, p) in scaled.iter().zip(&plain) {
            assert!((s[0] / s[1] - p[0] / p[1]).norm() < 1e-9);
        }
    }

    #[test]
    fn custom_model_can_be_registered() {
        struct Frozen;
        struct Same(usize);
        impl PairEvolution for Same {
            fn evolve(&self, a: Pair) -> Result<Vec<Pair>> {
                Ok(vec![a; self.0])
            }
        }
        impl DynamicsModel for Frozen {
            fn name(&self) -> &'static str {
                "frozen"
            }
            fn description(&self) -> &'static str {
                "no evolution"
            }
            fn prepare(&self, _: &SystemConfig, times: &[f64]) -> Result<Box<dyn PairEvolution>> {
                Ok(Box::new(Same(times.len())))
            }
        }
        let mut r = ModelRegistry::builtin();
        r.register(Arc::new(Frozen));
        assert!(r.names().contains(&"frozen"));
    }
}
