//! Order-parameter pipeline: an ensemble of initial oscillator states, the
//! time-averaged amplitude ratio `I12(T) = (1/T) ∫ a1/a2 dt` for each member,
//! its complex ensemble variance `D12 = ⟨I12²⟩ - ⟨I12⟩²`, sweeps over the
//! inter-oscillator coupling, and revival / synchronization diagnostics.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsModel, Pair};
use crate::error::{Error, Result};
use crate::model::{FullState, SystemConfig};
use crate::propagation::Trajectory;

/// Default relative pole guard: samples with `|a2| < eps · |(a1, a2)|` are
/// left out of the ratio integral.
pub const DEFAULT_POLE_EPS: f64 = 1e-6;

/// Members whose excluded measure exceeds this fraction of `T` are discarded.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialDistribution {
    /// `(a1, a2)` uniform on the unit sphere of C², reservoirs empty.
    #[default]
    UnitSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_states: usize,
    pub seed: u64,
    #[serde(default)]
    pub distribution: InitialDistribution,
}

impl EnsembleSpec {
    pub fn new(n_states: usize, seed: u64) -> Self {
        Self {
            n_states,
            seed,
            distribution: InitialDistribution::UnitSphere,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states < 2 {
            return Err(Error::config("ensemble.n_states", "need at least 2 members"));
        }
        Ok(())
    }
}

/// Initial oscillator pairs, reproducible from the seed.
pub fn sample_oscillator_pairs(spec: &EnsembleSpec) -> Result<Vec<Pair>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n_states);
    while out.len() < spec.n_states {
        let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        out.push([
            Complex64::new(z[0] / norm, z[1] / norm),
            Complex64::new(z[2] / norm, z[3] / norm),
        ]);
    }
    Ok(out)
}

pub fn sample_initial_states(spec: &EnsembleSpec, dim: usize) -> Result<Vec<FullState>> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("state dimension {dim} < 2")));
    }
    Ok(sample_oscillator_pairs(spec)?
        .into_iter()
        .map(|[a1, a2]| FullState::from_oscillators(dim, a1, a2))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioIntegral {
    pub value: Complex64,
    pub valid: bool,
    /// Fraction of `[0, T]` excluded by the pole guard.
    pub excluded_fraction: f64,
}

fn guarded_ratio(p: &Pair, pole_eps: f64) -> Option<Complex64> {
    let scale = (p[0].norm_sqr() + p[1].norm_sqr()).sqrt();
    let a2 = p[1].norm();
    if scale == 0.0 || !(a2 >= pole_eps * scale) {
        None
    } else {
        Some(p[0] / p[1])
    }
}

/// Trapezoidal `(1/T) ∫₀ᵀ a1/a2 dt` over the intervals whose endpoints both
/// pass the pole guard, normalized by the included measure.
pub fn ratio_integral_samples(times: &[f64], pairs: &[Pair], t_obs: f64, pole_eps: f64) -> Result<RatioIntegral> {
    if times.len() != pairs.len() || times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matching samples".into()));
    }
    if !(t_obs > 0.0) || t_obs > times[times.len() - 1] * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "observation time {t_obs} outside trajectory duration {}",
            times[times.len() - 1]
        )));
    }
    if !(pole_eps > 0.0) {
        return Err(Error::InvalidArgument("pole_eps must be > 0".into()));
    }

    let mut sum = Complex64::new(0.0, 0.0);
    let mut included = 0.0;
    let mut prev = guarded_ratio(&pairs[0], pole_eps);
    for i in 0..times.len() - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        if t0 >= t_obs {
            break;
        }
        let next = guarded_ratio(&pairs[i + 1], pole_eps);
        if let (Some(r0), Some(r1)) = (prev, next) {
            if t1 <= t_obs * (1.0 + 1e-12) {
                sum += (r0 + r1) * (0.5 * (t1 - t0));
                included += t1 - t0;
            } else {
                let w = (t_obs - t0) / (t1 - t0);
                let r_end = r0 + (r1 - r0) * w;
                sum += (r0 + r_end) * (0.5 * (t_obs - t0));
                included += t_obs - t0;
            }
        }
        prev = next;
    }
    let excluded_fraction = ((t_obs - included) / t_obs).max(0.0);
    let valid = included > 0.0 && excluded_fraction <= MAX_EXCLUDED_FRACTION;
    let value = if included > 0.0 {
        sum / included
    } else {
        Complex64::new(f64::NAN, f64::NAN)
    };
    Ok(RatioIntegral {
        value,
        valid,
        excluded_fraction,
    })
}

pub fn ratio_integral(traj: &Trajectory, t_obs: f64, pole_eps: f64) -> Result<RatioIntegral> {
    ratio_integral_samples(&traj.times, &traj.pairs(), t_obs, pole_eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSettings {
    /// Observation time `T`.
    pub observation_time: f64,
    #[serde(default = "default_pole_eps")]
    pub pole_eps: f64,
    /// Sampling step of the ratio integral; rounded down so `T` is a sample.
    pub dt: f64,
}

fn default_pole_eps() -> f64 {
    DEFAULT_POLE_EPS
}

impl OrderSettings {
    pub fn new(observation_time: f64, dt: f64) -> Self {
        Self {
            observation_time,
            pole_eps: DEFAULT_POLE_EPS,
            dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.observation_time > 0.0 && self.observation_time.is_finite()) {
            return Err(Error::config("analysis.observation_time", "must be finite and > 0"));
        }
        if !(self.dt > 0.0 && self.dt < self.observation_time) {
            return Err(Error::config("analysis.dt", "must satisfy 0 < dt < observation_time"));
        }
        if !(self.pole_eps > 0.0 && self.pole_eps < 1.0) {
            return Err(Error::config("analysis.pole_eps", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = (self.observation_time / self.dt).ceil() as usize;
        let h = self.observation_time / n as f64;
        (0..=n).map(|k| if k == n { self.observation_time } else { k as f64 * h }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub coupling: f64,
    pub mean_i: Complex64,
    pub var_d: Complex64,
    pub abs_var: f64,
    pub n_valid: usize,
    pub n_discarded: usize,
    pub observation_time: f64,
    pub seed: u64,
}

/// Complex mean and variance `⟨I²⟩ - ⟨I⟩²` (as `⟨(I - ⟨I⟩)²⟩`), summed in
/// index order.
fn complex_moments(values: &[Complex64]) -> (Complex64, Complex64) {
    let n = values.len() as f64;
    let mean = values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v) / n;
    let var = values
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, v| acc + (v - mean) * (v - mean))
        / n;
    (mean, var)
}

/// Integrals of all members for one configuration, in member order.
pub fn member_integrals(
    config: &SystemConfig,
    model: &dyn DynamicsModel,
    initial: &[Pair],
    settings: &OrderSettings,
) -> Result<Vec<RatioIntegral>> {
    settings.validate()?;
    let times = settings.times();
    let evolution = model.prepare(config, &times)?;
    initial
        .par_iter()
        .map(|&a0| {
            let pairs = evolution.evolve(a0)?;
            ratio_integral_samples(&times, &pairs, settings.observation_time, settings.pole_eps)
        })
        .collect()
}

fn aggregate(coupling: f64, integrals: &[RatioIntegral], ensemble: &EnsembleSpec, settings: &OrderSettings) -> Result<SweepResult> {
    let values: Vec<Complex64> = integrals.iter().filter(|r| r.valid).map(|r| r.value).collect();
    let n_valid = values.len();
    let n_discarded = integrals.len() - n_valid;
    if n_valid < 2 {
        return Err(Error::TooFewValid {
            valid: n_valid,
            discarded: n_discarded,
        });
    }
    let (mean_i, var_d) = complex_moments(&values);
    Ok(SweepResult {
        coupling,
        mean_i,
        var_d,
        abs_var: var_d.norm(),
        n_valid,
        n_discarded,
        observation_time: settings.observation_time,
        seed: ensemble.seed,
    })
}

/// Order parameter at the configuration's coupling.
pub fn order_parameter(
    config: &SystemConfig,
    model: &dyn DynamicsModel,
    ensemble: &EnsembleSpec,
    settings: &OrderSettings,
) -> Result<SweepResult> {
    let initial = sample_oscillator_pairs(ensemble)?;
    let integrals = member_integrals(config, model, &initial, settings)?;
    aggregate(config.coupling, &integrals, ensemble, settings)
}

/// Outcome at one grid point; failures are kept rather than aborting.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub coupling: f64,
    pub outcome: std::result::Result<SweepResult, String>,
}

/// Coupling grid `start:stop:steps[:log]`, optionally in units of `Ω_EP`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub log: bool,
    /// Interpret `start`/`stop` as multiples of the comb-based `Ω_EP`.
    #[serde(default)]
    pub relative_to_ep: bool,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::config("sweep.steps", "must be >= 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::config("sweep", "need finite start <= stop"));
        }
        if self.log && !(self.start > 0.0) {
            return Err(Error::config("sweep.start", "log grids need start > 0"));
        }
        Ok(())
    }

    /// Grid values, scaled by `unit`.
    pub fn values(&self, unit: f64) -> Result<Vec<f64>> {
        self.validate()?;
        let unit = if self.relative_to_ep { unit } else { 1.0 };
        if self.steps == 1 {
            return Ok(vec![self.start * unit]);
        }
        let n = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                let f = i as f64 / n;
                let v = if self.log {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                };
                v * unit
            })
            .collect())
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// `start:stop:steps[:log]`; a trailing `ep` on start and stop makes the
    /// bounds relative to `Ω_EP` (e.g. `0.1ep:3ep:30`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad grid '{s}', expected start:stop:steps[:log]"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let rel = parts[0].ends_with("ep") && parts[1].ends_with("ep");
        let num = |p: &str| p.trim_end_matches("ep").parse::<f64>().map_err(|_| bad());
        let log = match parts.get(3) {
            None => false,
            Some(&"log") => true,
            Some(_) => return Err(bad()),
        };
        let grid = GridSpec {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            steps: parts[2].parse().map_err(|_| bad())?,
            log,
            relative_to_ep: rel,
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// Order parameter over a coupling grid. Every point uses the same ensemble,
/// so member `j` starts from the same state at every coupling.
pub fn sweep(
    template: &SystemConfig,
    omega_grid: &[f64],
    model: &dyn DynamicsModel,
    ensemble: &EnsembleSpec,
    settings: &OrderSettings,
) -> Result<Vec<SweepPoint>> {
    if omega_grid.is_empty() {
        return Err(Error::InvalidArgument("empty coupling grid".into()));
    }
    if omega_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("coupling grid must be ascending".into()));
    }
    settings.validate()?;
    let initial = sample_oscillator_pairs(ensemble)?;
    Ok(omega_grid
        .par_iter()
        .map(|&om| {
            let cfg = template.with_coupling(om);
            let outcome = member_integrals(&cfg, model, &initial, settings)
                .and_then(|ints| aggregate(om, &ints, ensemble, settings))
                .map_err(|e| e.to_string());
            SweepPoint { coupling: om, outcome }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEstimate {
    pub coupling: f64,
    /// Grid spacing around the estimate.
    pub uncertainty: f64,
    /// Index of the left end of the steepest interval.
    pub index: usize,
    pub log_grid: bool,
}

fn is_log_spaced(x: &[f64]) -> bool {
    if x.len() < 3 || x.iter().any(|&v| !(v > 0.0)) {
        return false;
    }
    let d0 = x[1] - x[0];
    let r0 = x[1] / x[0];
    let linear = x.windows(2).all(|w| ((w[1] - w[0]) - d0).abs() <= 1e-9 * d0.abs());
    let geometric = x.windows(2).all(|w| (w[1] / w[0] - r0).abs() <= 1e-9 * r0);
    geometric && !linear
}

/// Coupling at the steepest finite-difference rise of `|D12|` (in `ln Ω`
/// for log-spaced grids), at the midpoint of the steepest interval.
pub fn detect_transition(results: &[SweepResult]) -> Result<TransitionEstimate> {
    if results.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 sweep points, got {}",
            results.len()
        )));
    }
    let x: Vec<f64> = results.iter().map(|r| r.coupling).collect();
    let y: Vec<f64> = results.iter().map(|r| r.abs_var).collect();
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sweep couplings must increase strictly".into()));
    }
    let log_grid = is_log_spaced(&x);
    let coord = |v: f64| if log_grid { v.ln() } else { v };

    let y_max = y.iter().copied().fold(0.0f64, f64::max);
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    if !(y_max > 0.0) || y_max - y_min <= 1e-12 * y_max {
        return Err(Error::NoTransition);
    }
    let (index, slope) = (0..x.len() - 1)
        .map(|i| (i, (y[i + 1] - y[i]) / (coord(x[i + 1]) - coord(x[i]))))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if !(slope > 0.0) {
        return Err(Error::NoTransition);
    }
    let coupling = if log_grid {
        (x[index] * x[index + 1]).sqrt()
    } else {
        0.5 * (x[index] + x[index + 1])
    };
    Ok(TransitionEstimate {
        coupling,
        uncertainty: x[index + 1] - x[index],
        index,
        log_grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevivalSettings {
    /// Revival level as a fraction of the initial amplitude.
    pub threshold: f64,
    /// Width of the centered moving average applied to `|a|`.
    pub window: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevivalReport {
    /// Peak times per oscillator.
    pub peaks: [Vec<f64>; 2],
    /// Correlation coefficient of the two smoothed envelopes.
    pub sync_score: f64,
}

impl RevivalReport {
    pub fn first_revival(&self, oscillator: usize) -> Option<f64> {
        self.peaks[oscillator].first().copied()
    }
}

fn moving_average(x: &[f64], half_width: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Revival peaks of one smoothed envelope. An oscillator first has to
/// collapse below half the revival level; a revival is an excursion above
/// the level, recorded at its maximum, that ends when the envelope collapses
/// again (or the trajectory ends).
fn revival_peaks(times: &[f64], env: &[f64], level: f64) -> Vec<f64> {
    let collapse = 0.5 * level;
    let mut peaks = Vec::new();
    let mut collapsed = false;
    let mut current: Option<(f64, f64)> = None;
    for (&t, &e) in times.iter().zip(env) {
        match current {
            Some((best_t, best_e)) => {
                if e > best_e {
                    current = Some((t, e));
                } else if e < collapse {
                    peaks.push(best_t);
                    current = None;
                    collapsed = true;
                }
            }
            None => {
                if !collapsed {
                    collapsed = e < collapse;
                } else if e > level {
                    current = Some((t, e));
                }
            }
        }
    }
    if let Some((t, _)) = current {
        peaks.push(t);
    }
    peaks
}

pub fn revival_diagnostics_samples(times: &[f64], pairs: &[Pair], settings: &RevivalSettings) -> Result<RevivalReport> {
    if times.len() != pairs.len() || times.len() < 3 {
        return Err(Error::InvalidArgument("need at least three matching samples".into()));
    }
    if !(settings.threshold > 0.0 && settings.window >= 0.0) {
        return Err(Error::InvalidArgument("threshold must be > 0 and window >= 0".into()));
    }
    let dt = times[1] - times[0];
    let half = ((0.5 * settings.window) / dt).round() as usize;
    let envelopes: [Vec<f64>; 2] = std::array::from_fn(|j| {
        let raw: Vec<f64> = pairs.iter().map(|p| p[j].norm()).collect();
        moving_average(&raw, half)
    });
    let peaks = std::array::from_fn(|j| {
        let initial = pairs[0][j].norm();
        if initial == 0.0 {
            Vec::new()
        } else {
            revival_peaks(times, &envelopes[j], settings.threshold * initial)
        }
    });
    Ok(RevivalReport {
        peaks,
        sync_score: correlation(&envelopes[0], &envelopes[1]),
    })
}

pub fn revival_diagnostics(traj: &Trajectory, settings: &RevivalSettings) -> Result<RevivalReport> {
    revival_diagnostics_samples(&traj.times, &traj.pairs(), settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ModelRegistry, ReducedModel};
    use crate::model::ReservoirSpec;
    use crate::reduced::ReducedParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `γ1 = 0.03`, `γ2 = 0.01` through explicit rates; `Ω_EP = 0.01`.
    fn reduced_config(coupling: f64) -> SystemConfig {
        SystemConfig {
            omega0: 1.0,
            coupling,
            reservoir1: ReservoirSpec::new(0, 1.0, 0.0),
            reservoir2: ReservoirSpec::new(0, 1.0, 0.0),
            t_max: 1.0,
            dt_sample: 1.0,
            rates: Some(crate::model::RateOverride {
                gamma1: 0.03,
                gamma2: 0.01,
            }),
        }
    }

    #[test]
    fn ensembles_are_reproducible() {
        let spec = EnsembleSpec::new(50, 42);
        assert_eq!(sample_oscillator_pairs(&spec).unwrap(), sample_oscillator_pairs(&spec).unwrap());
        assert_ne!(
            sample_oscillator_pairs(&spec).unwrap(),
            sample_oscillator_pairs(&EnsembleSpec::new(50, 43)).unwrap()
        );
    }

    #[test]
    fn ensemble_members_are_normalized_with_empty_reservoirs() {
        let states = sample_initial_states(&EnsembleSpec::new(100, 3), 12).unwrap();
        for s in &states {
            assert!((s.0[0].norm_sqr() + s.0[1].norm_sqr() - 1.0).abs() < 1e-14);
            assert!(s.0[2..].iter().all(|z| *z == c(0.0, 0.0)));
        }
    }

    #[test]
    fn unit_sphere_mean_power() {
        let pairs = sample_oscillator_pairs(&EnsembleSpec::new(500, 11)).unwrap();
        let p: Vec<f64> = pairs.iter().map(|p| p[0].norm_sqr()).collect();
        let n = p.len() as f64;
        let mean = p.iter().sum::<f64>() / n;
        let sd = (p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn ensemble_needs_two_members() {
        assert!(sample_oscillator_pairs(&EnsembleSpec::new(1, 0)).is_err());
    }

    #[test]
    fn equal_amplitudes_integrate_to_one() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.5).collect();
        let pairs: Vec<Pair> = times
            .iter()
            .map(|t| {
                let z = Complex64::from_polar(1.0 + 0.3 * t, -t);
                [z, z]
            })
            .collect();
        let r = ratio_integral_samples(&times, &pairs, 50.0, DEFAULT_POLE_EPS).unwrap();
        assert!(r.valid);
        assert_eq!(r.value, c(1.0, 0.0));
    }

    #[test]
    fn constant_ratio_independent_of_t() {
        let a0 = c(0.3, -1.7);
        let times: Vec<f64> = (0..=40).map(|k| k as f64).collect();
        let pairs: Vec<Pair> = times.iter().map(|t| [a0 * (1.0 + t), c(1.0 + t, 0.0)]).collect();
        for t_obs in [1.0, 17.0, 33.5, 40.0] {
            let r = ratio_integral_samples(&times, &pairs, t_obs, DEFAULT_POLE_EPS).unwrap();
            assert!((r.value - a0).norm() < 1e-14);
        }
    }

    #[test]
    fn pole_guard_discards() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let mut pairs: Vec<Pair> = vec![[c(1.0, 0.0), c(1.0, 0.0)]; 11];
        pairs[5] = [c(1.0, 0.0), c(0.0, 0.0)];
        // two of ten intervals touch the pole
        let r = ratio_integral_samples(&times, &pairs, 10.0, DEFAULT_POLE_EPS).unwrap();
        assert!(!r.valid);
        assert!((r.excluded_fraction - 0.2).abs() < 1e-14);
        assert_eq!(r.value, c(1.0, 0.0));

        let all_bad = vec![[c(1.0, 0.0), c(0.0, 0.0)]; 11];
        let r = ratio_integral_samples(&times, &all_bad, 10.0, DEFAULT_POLE_EPS).unwrap();
        assert!(!r.valid);
    }

    #[test]
    fn observation_time_must_fit() {
        let times = vec![0.0, 1.0, 2.0];
        let pairs = vec![[c(1.0, 0.0), c(1.0, 0.0)]; 3];
        assert!(ratio_integral_samples(&times, &pairs, 3.0, 1e-6).is_err());
    }

    #[test]
    fn below_ep_integral_approaches_attractor() {
        let cfg = reduced_config(0.006);
        let settings = OrderSettings::new(100.0 / 0.02, 1.0);
        let pairs = sample_oscillator_pairs(&EnsembleSpec::new(20, 5)).unwrap();
        let ints = member_integrals(&cfg, &ReducedModel, &pairs, &settings).unwrap();
        let attractor = c(0.0, -1.0 / 3.0);
        for r in ints.iter().filter(|r| r.valid) {
            assert!((r.value - attractor).norm() < 0.05, "{}", r.value);
        }
    }

    #[test]
    fn reduced_order_parameter_dichotomy() {
        let settings = OrderSettings::new(100.0 / 0.02, 1.0);
        let ens = EnsembleSpec::new(200, 9);
        let below = order_parameter(&reduced_config(0.005), &ReducedModel, &ens, &settings).unwrap();
        let above = order_parameter(&reduced_config(0.02), &ReducedModel, &ens, &settings).unwrap();
        // below the EP only the initial transient, O((1/(2sT))²) with the
        // eigenvalue half-splitting s, survives the time average
        assert!(below.abs_var < 1e-3, "below {}", below.abs_var);
        assert!(above.abs_var > 1e-2, "above {}", above.abs_var);
        assert!(above.abs_var > 100.0 * below.abs_var);
        assert_eq!(below.n_valid + below.n_discarded, 200);
        assert_eq!(below.abs_var, below.var_d.norm());
    }

    #[test]
    fn order_parameter_is_deterministic() {
        let settings = OrderSettings::new(500.0, 1.0);
        let ens = EnsembleSpec::new(64, 1);
        let model = ModelRegistry::builtin().get("hermitian").unwrap();
        let cfg = crate::presets::system("fig7").unwrap();
        let a = order_parameter(&cfg, model.as_ref(), &ens, &settings).unwrap();
        let b = order_parameter(&cfg, model.as_ref(), &ens, &settings).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn global_phase_leaves_integral_unchanged() {
        let cfg = crate::presets::system("fig7").unwrap();
        let settings = OrderSettings::new(400.0, 0.5);
        let model = ModelRegistry::builtin().get("hermitian").unwrap();
        let a0 = [c(0.6, 0.2), c(-0.1, 0.77)];
        let ph = Complex64::from_polar(2.5, 1.234);
        let ints = member_integrals(&cfg, model.as_ref(), &[a0, [a0[0] * ph, a0[1] * ph]], &settings).unwrap();
        assert!((ints[0].value - ints[1].value).norm() < 1e-10);
    }

    #[test]
    fn single_point_sweep() {
        let settings = OrderSettings::new(1000.0, 1.0);
        let out = sweep(&reduced_config(0.0), &[0.004], &ReducedModel, &EnsembleSpec::new(10, 2), &settings).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].outcome.is_ok());
        assert!(sweep(&reduced_config(0.0), &[0.02, 0.01], &ReducedModel, &EnsembleSpec::new(10, 2), &settings).is_err());
    }

    fn synthetic(ys: &[f64], xs: &[f64]) -> Vec<SweepResult> {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| SweepResult {
                coupling: x,
                mean_i: c(0.0, 0.0),
                var_d: c(y, 0.0),
                abs_var: y,
                n_valid: 10,
                n_discarded: 0,
                observation_time: 1.0,
                seed: 0,
            })
            .collect()
    }

    #[test]
    fn detect_flat_and_step() {
        let xs: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        assert!(matches!(detect_transition(&synthetic(&[0.3; 8], &xs)), Err(Error::NoTransition)));
        let ys = [0.0, 0.0, 0.01, 0.02, 0.9, 1.0, 1.0, 0.95];
        let est = detect_transition(&synthetic(&ys, &xs)).unwrap();
        assert_eq!(est.index, 3);
        assert_eq!(est.coupling, 4.5);
        assert_eq!(est.uncertainty, 1.0);
        assert!(detect_transition(&synthetic(&ys[..4], &xs[..4])).is_err());
    }

    #[test]
    fn detect_on_log_grid() {
        let xs: Vec<f64> = (0..8).map(|i| 1e-3 * 2f64.powi(i)).collect();
        let ys = [0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0];
        let est = detect_transition(&synthetic(&ys, &xs)).unwrap();
        assert!(est.log_grid);
        assert!((est.coupling - (xs[2] * xs[3]).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "0.1ep:3ep:30".parse().unwrap();
        assert!(g.relative_to_ep && !g.log && g.steps == 30);
        let v = g.values(0.01).unwrap();
        assert!((v[0] - 0.001).abs() < 1e-15 && (v[29] - 0.03).abs() < 1e-15);
        let l: GridSpec = "1e-4:1e-2:3:log".parse().unwrap();
        let v = l.values(123.0).unwrap();
        assert!((v[1] - 1e-3).abs() < 1e-15);
        assert!("1:2".parse::<GridSpec>().is_err());
        assert!("0:1:5:log".parse::<GridSpec>().is_err());
    }

    #[test]
    fn silent_oscillator_has_no_revivals() {
        // Ω = 0 and g2 = 0: oscillator 2 is a free oscillator
        let mut cfg = crate::presets::system("fig6a").unwrap();
        cfg.coupling = 0.0;
        cfg.reservoir2.coupling = 0.0;
        let t_r = cfg.min_return_time().unwrap();
        let times = crate::propagation::sample_times(3.0 * t_r, t_r / 200.0).unwrap();
        let model = ModelRegistry::builtin().get("hermitian").unwrap();
        let pairs = model.prepare(&cfg, &times).unwrap().evolve([c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rep = revival_diagnostics_samples(&times, &pairs, &RevivalSettings { threshold: 0.05, window: t_r / 20.0 }).unwrap();
        assert!(rep.peaks[1].is_empty());
        assert!(!rep.peaks[0].is_empty());
        assert!(rep.sync_score.abs() <= 1.0);
    }

    #[test]
    fn reduced_params_from_explicit_rates() {
        let p = ReducedParams::from_config(&reduced_config(0.0));
        assert_eq!((p.gamma1, p.gamma2), (0.03, 0.01));
    }
}
