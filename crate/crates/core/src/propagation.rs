//! Exact propagation of `dv/dt = -i M v` through the eigendecomposition of
//! `M`, plus a fixed-step RK4 integrator used as an independent cross-check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ArrowheadOperator, FullState, SystemConfig};

const RECONSTRUCTION_TOL: f64 = 1e-10;
const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Short stable identifier of a configuration (hex prefix of its SHA-256).
pub fn config_hash(config: &SystemConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `M = Q diag(Λ) Qᵀ` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    tag: String,
}

impl SpectralPropagator {
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        let m = crate::model::build_generator(config)?;
        let mut prop = diagonalize(&m)?;
        prop.tag = config_hash(config);
        Ok(prop)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Upper-left 2x2 block of `exp(-i M t)`, i.e. the map from the initial
    /// oscillator pair to the oscillator pair at `t` when reservoirs start
    /// empty.
    pub fn oscillator_block(&self, t: f64) -> [[Complex64; 2]; 2] {
        let q = &self.eigenvectors;
        let mut u = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (n, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lambda * t);
            let (q0, q1) = (q[(0, n)], q[(1, n)]);
            u[0][0] += phase * (q0 * q0);
            u[0][1] += phase * (q0 * q1);
            u[1][0] += phase * (q1 * q0);
            u[1][1] += phase * (q1 * q1);
        }
        u
    }
}

/// Symmetric eigendecomposition with reconstruction and orthogonality checks.
pub fn diagonalize(m: &DMatrix<f64>) -> Result<SpectralPropagator> {
    let dim = m.nrows();
    if m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: m.ncols(),
        });
    }
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or_else(|| {
        Error::EigenFailure {
            dim,
            reason: "did not converge".into(),
        }
    })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let scale = eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    let recon = &eigenvectors * DMatrix::from_diagonal(&eigenvalues) * eigenvectors.transpose();
    let recon_err = (&recon - m).amax();
    if recon_err > RECONSTRUCTION_TOL * scale {
        return Err(Error::EigenFailure {
            dim,
            reason: format!("reconstruction error {recon_err:.3e}"),
        });
    }
    let ortho_err = (eigenvectors.transpose() * &eigenvectors - DMatrix::identity(dim, dim)).amax();
    if ortho_err > ORTHOGONALITY_TOL {
        return Err(Error::EigenFailure {
            dim,
            reason: format!("orthogonality error {ortho_err:.3e}"),
        });
    }

    Ok(SpectralPropagator {
        eigenvalues,
        eigenvectors,
        tag: String::from("unbound"),
    })
}

/// `Q exp(-iΛt) Qᵀ v0`.
pub fn propagate(prop: &SpectralPropagator, initial: &FullState, t: f64) -> Result<FullState> {
    let dim = prop.dim();
    if initial.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: initial.dim(),
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let q = &prop.eigenvectors;
    let re = DVector::from_iterator(dim, initial.0.iter().map(|z| z.re));
    let im = DVector::from_iterator(dim, initial.0.iter().map(|z| z.im));
    let cr = q.tr_mul(&re);
    let ci = q.tr_mul(&im);

    let mut rot_re = DVector::zeros(dim);
    let mut rot_im = DVector::zeros(dim);
    for n in 0..dim {
        let phase = Complex64::from_polar(1.0, -prop.eigenvalues[n] * t);
        let c = Complex64::new(cr[n], ci[n]) * phase;
        rot_re[n] = c.re;
        rot_im[n] = c.im;
    }
    let out_re = q * rot_re;
    let out_im = q * rot_im;
    Ok(FullState(
        out_re
            .iter()
            .zip(out_im.iter())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect(),
    ))
}

/// Sample instants `0, dt, 2dt, … ≤ t_max`.
pub fn sample_times(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && dt > 0.0 && dt <= t_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "need t_max > 0 and 0 < dt_sample <= t_max (t_max = {t_max}, dt_sample = {dt})"
        )));
    }
    let n = (t_max / dt * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

/// Sampled states; reservoir amplitudes may be dropped to save memory.
#[derive(Debug, Clone)]
pub enum TrajectoryStates {
    Full(Vec<FullState>),
    Oscillators(Vec<[Complex64; 2]>),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: TrajectoryStates,
    pub config_hash: String,
}

impl Trajectory {
    /// Validates the sampling invariants.
    pub fn new(times: Vec<f64>, states: TrajectoryStates, config_hash: String) -> Result<Self> {
        let n = match &states {
            TrajectoryStates::Full(s) => s.len(),
            TrajectoryStates::Oscillators(s) => s.len(),
        };
        if n != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                actual: n,
            });
        }
        if times.first().is_some_and(|&t| t != 0.0) {
            return Err(Error::InvalidArgument("trajectory must start at t = 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("trajectory times must increase strictly".into()));
        }
        Ok(Self {
            times,
            states,
            config_hash,
        })
    }

    pub fn from_pairs(times: Vec<f64>, pairs: Vec<[Complex64; 2]>) -> Result<Self> {
        Self::new(times, TrajectoryStates::Oscillators(pairs), "unbound".into())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn pair(&self, i: usize) -> [Complex64; 2] {
        match &self.states {
            TrajectoryStates::Full(s) => s[i].oscillators(),
            TrajectoryStates::Oscillators(p) => p[i],
        }
    }

    pub fn pairs(&self) -> Vec<[Complex64; 2]> {
        (0..self.len()).map(|i| self.pair(i)).collect()
    }

    pub fn full_states(&self) -> Option<&[FullState]> {
        match &self.states {
            TrajectoryStates::Full(s) => Some(s),
            TrajectoryStates::Oscillators(_) => None,
        }
    }
}

/// Every sample is computed directly from the initial state, so no error
/// accumulates from one sample to the next.
pub fn sample_trajectory(
    prop: &SpectralPropagator,
    initial: &FullState,
    t_max: f64,
    dt_sample: f64,
    keep_reservoirs: bool,
) -> Result<Trajectory> {
    let times = sample_times(t_max, dt_sample)?;
    let states = if keep_reservoirs {
        TrajectoryStates::Full(
            times
                .iter()
                .map(|&t| propagate(prop, initial, t))
                .collect::<Result<_>>()?,
        )
    } else {
        TrajectoryStates::Oscillators(
            times
                .iter()
                .map(|&t| propagate(prop, initial, t).map(|s| s.oscillators()))
                .collect::<Result<_>>()?,
        )
    };
    Trajectory::new(times, states, prop.tag.clone())
}

/// Classic fourth-order Runge–Kutta on `dv/dt = -i M v`, landing exactly on
/// each sample instant.
pub fn integrate_rk(
    config: &SystemConfig,
    initial: &FullState,
    t_max: f64,
    dt_step: f64,
    dt_sample: f64,
) -> Result<Trajectory> {
    config.validate()?;
    let op = ArrowheadOperator::new(config);
    let dim = op.dim();
    if initial.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: initial.dim(),
        });
    }
    if !(dt_step > 0.0 && dt_step.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt_step must be > 0, got {dt_step}")));
    }
    let times = sample_times(t_max, dt_sample)?;
    let norm0 = initial.norm_sqr();

    let zero = Complex64::new(0.0, 0.0);
    let mut v = initial.0.clone();
    let mut k1 = vec![zero; dim];
    let mut k2 = vec![zero; dim];
    let mut k3 = vec![zero; dim];
    let mut k4 = vec![zero; dim];
    let mut tmp = vec![zero; dim];

    let mut states = Vec::with_capacity(times.len());
    states.push(FullState(v.clone()));
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = (span / dt_step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            op.apply_minus_i(&v, &mut k1);
            for i in 0..dim {
                tmp[i] = v[i] + k1[i] * (0.5 * h);
            }
            op.apply_minus_i(&tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = v[i] + k2[i] * (0.5 * h);
            }
            op.apply_minus_i(&tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = v[i] + k3[i] * h;
            }
            op.apply_minus_i(&tmp, &mut k4);
            for i in 0..dim {
                v[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let drift = if norm0 > 0.0 { (norm / norm0 - 1.0).abs() } else { norm };
        if !drift.is_finite() || drift > 0.01 {
            return Err(Error::Unstable { time: w[1], drift });
        }
        states.push(FullState(v.clone()));
    }
    Trajectory::new(times, TrajectoryStates::Full(states), config_hash(config))
}
