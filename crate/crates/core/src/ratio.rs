//! Riccati dynamics of the amplitude ratio `A = a1/a2` of the two-mode model:
//!
//! ```text
//! dA/dt = (γ2 - γ1) A + iΩA² - iΩ
//! ```
//!
//! split into real and imaginary parts, its fixed points, and phase
//! portraits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduced::{ep_coupling, ReducedParams};

/// Trajectories are cut off once `|A|` exceeds this radius (pole at `a2 = 0`).
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub re: f64,
    pub im: f64,
}

impl RatioPoint {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn norm(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn dist(&self, other: &RatioPoint) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

/// `(dRe A/dt, dIm A/dt)`
pub fn riccati_rhs(a: RatioPoint, params: &ReducedParams) -> (f64, f64) {
    let k = params.gamma2 - params.gamma1;
    let om = params.coupling;
    let (x, y) = (a.re, a.im);
    (k * x - 2.0 * om * x * y, k * y + om * (x * x - y * y) - om)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attractor,
    Repeller,
    Center,
    /// Both fixed points merged at the EP; the Jacobian vanishes.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub point: RatioPoint,
    pub stability: Stability,
    /// Jacobian eigenvalues `(re ± i im)`.
    pub jacobian_eigenvalues: [(f64, f64); 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPoints {
    Pair([FixedPoint; 2]),
    /// `Ω = 0`: the only finite fixed point is `A = 0`, the other lies at
    /// infinity.
    Uncoupled { origin: FixedPoint },
}

/// Jacobian of the planar field. For a holomorphic field it has the form
/// `[[a, -b], [b, a]]` with eigenvalues `a ± ib`.
pub fn jacobian(a: RatioPoint, params: &ReducedParams) -> [[f64; 2]; 2] {
    let k = params.gamma2 - params.gamma1;
    let om = params.coupling;
    [
        [k - 2.0 * om * a.im, -2.0 * om * a.re],
        [2.0 * om * a.re, k - 2.0 * om * a.im],
    ]
}

fn classify(a: RatioPoint, params: &ReducedParams) -> FixedPoint {
    let j = jacobian(a, params);
    let trace_half = 0.5 * (j[0][0] + j[1][1]);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = trace_half * trace_half - det;
    let eig = if disc >= 0.0 {
        [(trace_half + disc.sqrt(), 0.0), (trace_half - disc.sqrt(), 0.0)]
    } else {
        [(trace_half, (-disc).sqrt()), (trace_half, -(-disc).sqrt())]
    };
    let scale = params.rate_difference().abs().max(params.coupling.abs());
    let tol = 1e-7 * scale;
    let stability = if eig.iter().all(|e| e.0.abs() <= tol && e.1.abs() <= tol) {
        Stability::Degenerate
    } else if eig.iter().all(|e| e.0.abs() <= tol) {
        Stability::Center
    } else if eig.iter().all(|e| e.0 < 0.0) {
        Stability::Attractor
    } else {
        Stability::Repeller
    };
    FixedPoint {
        point: a,
        stability,
        jacobian_eigenvalues: eig,
    }
}

/// Both finite fixed points. Below the EP they lie on the imaginary axis
/// at `Im A = (γ2-γ1 ± sqrt((γ1-γ2)² - 4Ω²)) / (2Ω)`; at and above it at
/// `(±sqrt(4Ω² - (γ1-γ2)²) / (2Ω), (γ2-γ1) / (2Ω))`, on the unit circle.
pub fn fixed_points(params: &ReducedParams) -> FixedPoints {
    let om = params.coupling;
    if om == 0.0 {
        return FixedPoints::Uncoupled {
            origin: classify(RatioPoint::new(0.0, 0.0), params),
        };
    }
    let k = params.gamma2 - params.gamma1;
    let half = 0.5 * k.abs();
    // (γ1-γ2)² - 4Ω², factored
    let disc = 4.0 * (half - om.abs()) * (half + om.abs());
    let points = if om.abs() < ep_coupling(params) {
        let r = disc.sqrt();
        [
            RatioPoint::new(0.0, (k + r) / (2.0 * om)),
            RatioPoint::new(0.0, (k - r) / (2.0 * om)),
        ]
    } else {
        let r = (-disc).max(0.0).sqrt();
        let y = k / (2.0 * om);
        [
            RatioPoint::new(r / (2.0 * om.abs()), y),
            RatioPoint::new(-r / (2.0 * om.abs()), y),
        ]
    };
    FixedPoints::Pair(points.map(|p| classify(p, params)))
}

impl FixedPoints {
    pub fn points(&self) -> Vec<FixedPoint> {
        match self {
            FixedPoints::Pair(p) => p.to_vec(),
            FixedPoints::Uncoupled { origin } => vec![*origin],
        }
    }

    pub fn attractor(&self) -> Option<RatioPoint> {
        self.points()
            .into_iter()
            .find(|p| p.stability == Stability::Attractor)
            .map(|p| p.point)
    }
}

#[derive(Debug, Clone)]
pub struct RatioTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<RatioPoint>,
    /// The trajectory left the escape radius and was truncated.
    pub escaped: bool,
}

impl RatioTrajectory {
    pub fn last(&self) -> RatioPoint {
        *self.points.last().expect("trajectory has at least the seed")
    }
}

/// Default step `10⁻² / max(|γ1-γ2|, |Ω|, Ω_EP)`.
pub fn default_step(params: &ReducedParams) -> f64 {
    let scale = params
        .rate_difference()
        .abs()
        .max(params.coupling.abs())
        .max(ep_coupling(params));
    if scale > 0.0 {
        1e-2 / scale
    } else {
        1.0
    }
}

/// RK4 integration of the ratio field, adjusted so the last step lands on
/// `t_span`.
pub fn integrate_ratio(
    a0: RatioPoint,
    params: &ReducedParams,
    t_span: f64,
    dt: f64,
    escape_radius: f64,
) -> Result<RatioTrajectory> {
    if !(t_span >= 0.0 && t_span.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t_span >= 0 and dt > 0 (t_span = {t_span}, dt = {dt})"
        )));
    }
    if !(a0.re.is_finite() && a0.im.is_finite()) {
        return Err(Error::InvalidArgument("seed ratio must be finite".into()));
    }
    let n = (t_span / dt).ceil() as usize;
    let h = if n > 0 { t_span / n as f64 } else { 0.0 };
    let f = |p: RatioPoint| riccati_rhs(p, params);
    let shift = |p: RatioPoint, d: (f64, f64), s: f64| RatioPoint::new(p.re + s * d.0, p.im + s * d.1);

    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    times.push(0.0);
    points.push(a0);
    let mut p = a0;
    let mut escaped = a0.norm() > escape_radius;
    if !escaped {
        for i in 1..=n {
            let k1 = f(p);
            let k2 = f(shift(p, k1, 0.5 * h));
            let k3 = f(shift(p, k2, 0.5 * h));
            let k4 = f(shift(p, k3, h));
            p = RatioPoint::new(
                p.re + h / 6.0 * (k1.0 + 2.0 * (k2.0 + k3.0) + k4.0),
                p.im + h / 6.0 * (k1.1 + 2.0 * (k2.1 + k3.1) + k4.1),
            );
            if !(p.norm() <= escape_radius) {
                escaped = true;
                break;
            }
            times.push(i as f64 * h);
            points.push(p);
        }
    }
    Ok(RatioTrajectory {
        times,
        points,
        escaped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitSpec {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub grid: (usize, usize),
    #[serde(default)]
    pub seeds: Vec<RatioPoint>,
    pub t_span: f64,
}

impl PortraitSpec {
    /// `[-3, 3]²` on a 25x25 grid with no seeds.
    pub fn with_defaults(t_span: f64) -> Self {
        Self {
            re_range: (-3.0, 3.0),
            im_range: (-3.0, 3.0),
            grid: (25, 25),
            seeds: Vec::new(),
            t_span,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(self.re_range) || !ok(self.im_range) {
            return Err(Error::config("portrait", "ranges must be finite with lo < hi"));
        }
        if self.grid.0 < 2 || self.grid.1 < 2 {
            return Err(Error::config("portrait.grid", "counts must be >= 2"));
        }
        if !(self.t_span >= 0.0) {
            return Err(Error::config("portrait.t_span", "must be >= 0"));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn nodes(&self) -> Vec<RatioPoint> {
        let xs = Self::axis(self.re_range, self.grid.0);
        let ys = Self::axis(self.im_range, self.grid.1);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| RatioPoint::new(x, y)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PortraitNode {
    pub at: RatioPoint,
    pub velocity: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct Portrait {
    pub nodes: Vec<PortraitNode>,
    pub trajectories: Vec<RatioTrajectory>,
    pub fixed_points: FixedPoints,
}

pub fn generate_portrait(spec: &PortraitSpec, params: &ReducedParams) -> Result<Portrait> {
    spec.validate()?;
    let nodes = spec
        .nodes()
        .into_iter()
        .map(|at| PortraitNode {
            at,
            velocity: riccati_rhs(at, params),
        })
        .collect();
    let dt = default_step(params);
    let trajectories = spec
        .seeds
        .iter()
        .map(|&s| integrate_ratio(s, params, spec.t_span, dt, DEFAULT_ESCAPE_RADIUS))
        .collect::<Result<_>>()?;
    Ok(Portrait {
        nodes,
        trajectories,
        fixed_points: fixed_points(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::ReducedSolver;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(om: f64) -> ReducedParams {
        // γ1 - γ2 = 0.02, Ω_EP = 0.01
        ReducedParams::new(1.0, om, 0.03, 0.01)
    }

    fn rhs_norm(p: RatioPoint, params: &ReducedParams) -> f64 {
        let (u, v) = riccati_rhs(p, params);
        u.hypot(v)
    }

    #[test]
    fn rhs_at_origin() {
        let p = params(0.007);
        assert_eq!(riccati_rhs(RatioPoint::new(0.0, 0.0), &p), (0.0, -0.007));
    }

    #[test]
    fn below_ep_fixed_points() {
        let p = params(0.006);
        for y in [-3.0, -1.0 / 3.0] {
            assert!(rhs_norm(RatioPoint::new(0.0, y), &p) < 1e-15);
        }
        let FixedPoints::Pair(fp) = fixed_points(&p) else {
            panic!("expected a pair")
        };
        let mut ys: Vec<f64> = fp.iter().map(|f| f.point.im).collect();
        ys.sort_by(f64::total_cmp);
        assert!((ys[0] + 3.0).abs() < 1e-12 && (ys[1] + 1.0 / 3.0).abs() < 1e-12);
        let attractor = fixed_points(&p).attractor().unwrap();
        assert!((attractor.im + 1.0 / 3.0).abs() < 1e-12);
        assert!(fp.iter().any(|f| f.stability == Stability::Repeller));
    }

    #[test]
    fn above_ep_centers_on_unit_circle() {
        let p = params(0.0125);
        let FixedPoints::Pair(fp) = fixed_points(&p) else {
            panic!()
        };
        for f in &fp {
            assert_eq!(f.stability, Stability::Center);
            assert!((f.point.norm() - 1.0).abs() < 1e-14);
            assert!((f.point.re.abs() - 0.6).abs() < 1e-14);
            assert!((f.point.im + 0.8).abs() < 1e-14);
            assert!(rhs_norm(f.point, &p) < 1e-15);
        }
    }

    #[test]
    fn merge_at_ep() {
        let p = params(0.01);
        let FixedPoints::Pair(fp) = fixed_points(&p) else {
            panic!()
        };
        for f in &fp {
            assert!(f.point.dist(&RatioPoint::new(0.0, -1.0)) < 1e-7);
            assert_eq!(f.stability, Stability::Degenerate);
        }
    }

    #[test]
    fn uncoupled_is_special() {
        assert!(matches!(fixed_points(&params(0.0)), FixedPoints::Uncoupled { .. }));
    }

    #[test]
    fn negative_coupling_fixed_points() {
        for om in [-0.004, -0.02] {
            let p = params(om);
            for f in fixed_points(&p).points() {
                assert!(rhs_norm(f.point, &p) < 1e-14);
            }
        }
    }

    #[test]
    fn planar_form_matches_complex_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = params(0.0137);
        for _ in 0..100 {
            let a = Complex64::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let i = Complex64::new(0.0, 1.0);
            let om = p.coupling;
            let d = a * (p.gamma2 - p.gamma1) + i * om * a * a - i * om;
            let (u, v) = riccati_rhs(RatioPoint::new(a.re, a.im), &p);
            assert!((d.re - u).abs() < 1e-15 && (d.im - v).abs() < 1e-15);
        }
    }

    #[test]
    fn seed_at_attractor_stays() {
        let p = params(0.006);
        let a = fixed_points(&p).attractor().unwrap();
        let tr = integrate_ratio(a, &p, 2000.0, default_step(&p), DEFAULT_ESCAPE_RADIUS).unwrap();
        assert!(tr.points.iter().all(|q| q.dist(&a) < 1e-12));
    }

    #[test]
    fn matches_linear_model_ratio() {
        let p = params(0.0137);
        let solver = ReducedSolver::new(p);
        let a0 = [Complex64::new(0.4, 0.2), Complex64::new(0.8, -0.1)];
        let seed = a0[0] / a0[1];
        let tr = integrate_ratio(RatioPoint::new(seed.re, seed.im), &p, 500.0, 0.05, DEFAULT_ESCAPE_RADIUS).unwrap();
        for (t, q) in tr.times.iter().zip(&tr.points).step_by(50) {
            let a = solver.evolve(a0, *t);
            let r = a[0] / a[1];
            assert!((r.re - q.re).hypot(r.im - q.im) < 1e-6);
        }
    }

    #[test]
    fn escape_is_flagged() {
        // a trajectory through the pole: a2(0) = 0 is the worst case, start near it
        let p = params(0.02);
        let tr = integrate_ratio(RatioPoint::new(0.0, 5e5), &p, 1000.0, 0.01, 1e6).unwrap();
        assert!(tr.escaped);
        assert!(tr.points.iter().all(|q| q.norm() <= 1e6));
    }

    #[test]
    fn portrait_grid_layout() {
        let spec = PortraitSpec::with_defaults(10.0);
        let nodes = spec.nodes();
        assert_eq!(nodes.len(), 625);
        assert_eq!((nodes[0].re, nodes[0].im), (-3.0, -3.0));
        assert!(nodes.iter().any(|n| n.re == 0.0 && n.im == 0.0));
        let bad = PortraitSpec {
            grid: (1, 5),
            ..PortraitSpec::with_defaults(1.0)
        };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mirror_symmetry_is_exact(
                x in -10.0f64..10.0, y in -10.0f64..10.0,
                g1 in 0.0f64..0.1, g2 in 0.0f64..0.1, om in -0.1f64..0.1,
            ) {
                let p = ReducedParams::new(1.0, om, g1, g2);
                let (u, v) = riccati_rhs(RatioPoint::new(x, y), &p);
                let (um, vm) = riccati_rhs(RatioPoint::new(-x, y), &p);
                prop_assert_eq!(um, -u);
                prop_assert_eq!(vm, v);
            }

            #[test]
            fn imaginary_axis_is_invariant(y in -10.0f64..10.0, om in -0.1f64..0.1) {
                let p = ReducedParams::new(1.0, om, 0.03, 0.01);
                prop_assert_eq!(riccati_rhs(RatioPoint::new(0.0, y), &p).0, 0.0);
            }
        }
    }
}
