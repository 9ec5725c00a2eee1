//! Named parameter sets reproducing the published figure setups.
//!
//! System presets: `fig2`, `fig6a`, `fig6b`, `fig7`, `fig8`.
//! Run recipes (system plus analysis sections): `fig3a`, `fig3b`, `fig3c`
//! (phase portraits), `fig4` (reduced-model sweep), `fig5a`, `fig5b`,
//! `fig7b`, `fig8b` (Hermitian sweeps).

use std::f64::consts::TAU;

use crate::analysis::{EnsembleSpec, GridSpec, OrderSettings, RevivalSettings};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::{RateOverride, ReservoirSpec, SystemConfig};
use crate::ratio::{PortraitSpec, RatioPoint};
use crate::reduced::{ep_coupling, ReducedParams};

pub const SYSTEM_PRESETS: [&str; 5] = ["fig2", "fig6a", "fig6b", "fig7", "fig8"];

pub const RUN_PRESETS: [&str; 8] = ["fig3a", "fig3b", "fig3c", "fig4", "fig5a", "fig5b", "fig7b", "fig8b"];

/// Default ensemble seed of the recipes.
pub const DEFAULT_SEED: u64 = 20240607;

const FIG2_STEP: f64 = 5e-3;

fn comb_pair(n: usize, step1: f64, step2: f64, g1: f64, g2: f64, coupling: f64, return_times: f64) -> SystemConfig {
    let t_r = TAU / step1.max(step2);
    SystemConfig {
        omega0: 1.0,
        coupling,
        reservoir1: ReservoirSpec::new(n, step1, g1),
        reservoir2: ReservoirSpec::new(n, step2, g2),
        t_max: return_times * t_r,
        dt_sample: t_r / 200.0,
        rates: None,
    }
}

pub fn system(name: &str) -> Result<SystemConfig> {
    let sqrt2 = 2f64.sqrt();
    let sqrt10 = 10f64.sqrt();
    Ok(match name {
        "fig2" => comb_pair(40, FIG2_STEP, FIG2_STEP / sqrt2, 1.5e-3, 1.5e-3, 1e-4, 4.0),
        "fig6a" => comb_pair(40, FIG2_STEP, FIG2_STEP / sqrt2, 2.0 * sqrt10 * 1e-3, sqrt10 * 1e-3, 1e-4, 4.0),
        "fig6b" => comb_pair(40, FIG2_STEP, FIG2_STEP / sqrt2, 2.0 * sqrt10 * 1e-3, sqrt10 * 1e-3, 2e-2, 4.0),
        "fig7" => comb_pair(4, 5e-2, 5e-2, 2.5e-2, 1.5e-2, 1e-3, 10.0),
        "fig8" => {
            // single waveguide on cavity 1; the second reservoir is absent
            let mut cfg = comb_pair(40, FIG2_STEP, FIG2_STEP, 2.0 * sqrt10 * 1e-3, 0.0, 1e-4, 4.0);
            cfg.reservoir2 = ReservoirSpec::new(0, FIG2_STEP, 0.0);
            cfg
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    })
}

fn ep_grid() -> GridSpec {
    GridSpec {
        start: 0.1,
        stop: 3.0,
        steps: 30,
        log: false,
        relative_to_ep: true,
    }
}

fn sweep_recipe(system: SystemConfig, model: &str, n_states: usize, t_obs: f64, dt: f64) -> RunConfig {
    RunConfig {
        model: Some(model.to_string()),
        ensemble: Some(EnsembleSpec::new(n_states, DEFAULT_SEED)),
        analysis: Some(OrderSettings::new(t_obs, dt)),
        sweep: Some(ep_grid()),
        ..RunConfig::from_system(system)
    }
}

fn portrait_recipe(ep_multiple: f64) -> RunConfig {
    // γ1 - γ2 = 0.02, Ω_EP = 0.01
    let mut system = system("fig2").expect("preset");
    system.rates = Some(RateOverride {
        gamma1: 0.03,
        gamma2: 0.01,
    });
    system.coupling = ep_multiple * 0.01;
    let seeds = [(0.5, 2.0), (-0.5, 2.0), (1.5, -0.5), (-1.5, -0.5), (0.3, -2.5), (-0.3, -2.5), (2.0, 1.0), (-2.0, 1.0)]
        .into_iter()
        .map(|(x, y)| RatioPoint::new(x, y))
        .collect();
    RunConfig {
        model: Some("reduced".into()),
        portrait: Some(PortraitSpec {
            seeds,
            ..PortraitSpec::with_defaults(50.0 / 0.02)
        }),
        ..RunConfig::from_system(system)
    }
}

pub fn run(name: &str) -> Result<RunConfig> {
    if SYSTEM_PRESETS.contains(&name) {
        let system = system(name)?;
        let t_r = system.min_return_time().unwrap_or(system.t_max);
        return Ok(RunConfig {
            diagnostics: Some(RevivalSettings {
                threshold: 0.05,
                window: t_r / 20.0,
            }),
            ..RunConfig::from_system(system)
        });
    }
    let fig6 = system("fig6a")?;
    Ok(match name {
        "fig3a" => portrait_recipe(0.7),
        "fig3b" => portrait_recipe(1.0),
        "fig3c" => portrait_recipe(1.5),
        "fig4" => {
            let delta = ReducedParams::from_config(&fig6).rate_difference().abs();
            sweep_recipe(fig6, "reduced", 300, 100.0 / delta, 0.5)
        }
        "fig5a" => sweep_recipe(fig6, "hermitian", 800, 650.0, 0.5),
        "fig5b" => sweep_recipe(fig6, "hermitian", 300, 13000.0, 0.5),
        "fig7b" => {
            let fig7 = system("fig7")?;
            let t_r = fig7.min_return_time().expect("fig7 has reservoirs");
            sweep_recipe(fig7, "hermitian", 500, 30.0 * t_r, 0.25)
        }
        "fig8b" => {
            let fig8 = system("fig8")?;
            let t_r = fig8.min_return_time().expect("fig8 has a reservoir");
            sweep_recipe(fig8, "hermitian", 300, 10.0 * t_r, 0.5)
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    })
}

/// `Ω_EP` from the comb decay rates (or the explicit rates) of a system.
pub fn comb_ep_coupling(system: &SystemConfig) -> f64 {
    ep_coupling(&ReducedParams::from_config(system))
}
