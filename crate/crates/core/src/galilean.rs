//! Trajectories of massless "Galilean" particles, `ẍ = ω × ẋ` with constant `ω`.
//!
//! The solution of this system is a helix: a circular motion about the axis
//! `n = ω/|ω|` superposed with a uniform drift along `n`. This module provides
//! the closed form, an RK4 integrator for the same equations (used as a cross
//! check), the Galilei-group action and the split of the closed form into a
//! rotation, a boost and a translation.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use nalgebra::{SVector, Vector3};

use crate::error::{Error, Result};
use crate::integrate::{rk4_fixed, step_count};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `| |n| - 1 |` for rotation axes.
pub const UNIT_AXIS_TOL: f64 = 1e-12;

/// Below this value of `|ω| t` the closed form switches to its Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

fn check_unit_axis(n: &Vec3) -> Result<()> {
    let norm = n.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_AXIS_TOL {
        return Err(Error::InvalidInput(format!(
            "rotation axis must be a unit vector, |n| = {norm}"
        )));
    }
    Ok(())
}

fn check_finite(v: &Vec3, what: &str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite components")))
    }
}

/// Parameters of a Galilei transformation connected to the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalileiParams {
    axis: Vec3,
    angle: f64,
    boost: Vec3,
    translation: Vec3,
    time_shift: f64,
}

impl GalileiParams {
    pub fn new(axis: Vec3, angle: f64, boost: Vec3, translation: Vec3, time_shift: f64) -> Result<Self> {
        check_unit_axis(&axis)?;
        check_finite(&boost, "boost")?;
        check_finite(&translation, "translation")?;
        if !angle.is_finite() || !time_shift.is_finite() {
            return Err(Error::InvalidInput("angle and time shift must be finite".into()));
        }
        Ok(Self { axis, angle, boost, translation, time_shift })
    }

    pub fn identity() -> Self {
        Self {
            axis: Vec3::z(),
            angle: 0.0,
            boost: Vec3::zeros(),
            translation: Vec3::zeros(),
            time_shift: 0.0,
        }
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// Apply `(x, t) ↦ (R x + g t + b, t + s)`.
pub fn galilei_transform(point: &Vec3, t: f64, params: &GalileiParams) -> Result<(Vec3, f64)> {
    let rotated = rodrigues_rotate(&params.axis, params.angle, point)?;
    Ok((rotated + params.boost * t + params.translation, t + params.time_shift))
}

/// Rotate `r` by `phi` about the unit axis `n`.
pub fn rodrigues_rotate(n: &Vec3, phi: f64, r: &Vec3) -> Result<Vec3> {
    check_unit_axis(n)?;
    let perp = r - n * r.dot(n);
    Ok(r - perp * (1.0 - phi.cos()) + n.cross(r) * phi.sin())
}

/// The nine integration constants of the helical motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryParams {
    pub x0: Vec3,
    pub v0: Vec3,
    pub omega: Vec3,
}

impl TrajectoryParams {
    pub fn new(x0: Vec3, v0: Vec3, omega: Vec3) -> Result<Self> {
        check_finite(&x0, "x0")?;
        check_finite(&v0, "v0")?;
        check_finite(&omega, "omega")?;
        Ok(Self { x0, v0, omega })
    }
}

/// Position on the helix at time `t`.
pub fn closed_form_trajectory(params: &TrajectoryParams, t: f64) -> Vec3 {
    if params.omega.norm() * t.abs() < SERIES_THRESHOLD {
        closed_form_series(params, t)
    } else {
        closed_form_direct(params, t)
    }
}

/// Direct evaluation; requires `ω ≠ 0`. `1 - cos` is written as `2 sin²(·/2)`.
pub(crate) fn closed_form_direct(params: &TrajectoryParams, t: f64) -> Vec3 {
    let TrajectoryParams { x0, v0, omega } = *params;
    let w = omega.norm();
    let n = omega / w;
    let phase = w * t;
    let half = (0.5 * phase).sin();
    let along = n * v0.dot(&n);
    n.cross(&v0) * (2.0 * half * half / w) + (v0 - along) * (phase.sin() / w) + along * t + x0
}

/// Taylor form around `|ω| t = 0`, written in `ω` itself so that `ω = 0` is regular.
pub(crate) fn closed_form_series(params: &TrajectoryParams, t: f64) -> Vec3 {
    let TrajectoryParams { x0, v0, omega } = *params;
    let w2 = omega.norm_squared();
    let t2 = t * t;
    let t3 = t2 * t;
    omega.cross(&v0) * (0.5 * t2 - w2 * t2 * t2 / 24.0)
        + v0 * (t - w2 * t3 / 6.0)
        + omega * (v0.dot(&omega) * t3 / 6.0)
        + x0
}

/// Velocity on the helix at time `t`.
pub fn closed_form_velocity(params: &TrajectoryParams, t: f64) -> Vec3 {
    let TrajectoryParams { v0, omega, .. } = *params;
    let w = omega.norm();
    if w == 0.0 {
        return v0;
    }
    let n = omega / w;
    let along = n * v0.dot(&n);
    let phase = w * t;
    n.cross(&v0) * phase.sin() + (v0 - along) * phase.cos() + along
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "t,x1,x2,x3,v1,v2,v3";

    /// Write `t,x1,x2,x3,v1,v2,v3` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.x[0], s.x[1], s.x[2], s.v[0], s.v[1], s.v[2]
            )?;
        }
        Ok(())
    }
}

/// RK4 integration of `ẍ = ω × ẋ`, sampled at the (non-decreasing, non-negative) times `t_grid`.
pub fn integrate_eom(params: &TrajectoryParams, t_grid: &[f64], dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {dt}")));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("sample times must be finite, non-negative and sorted".into()));
    }
    let omega = params.omega;
    let rhs = |y: &SVector<f64, 6>| {
        let v = Vec3::new(y[3], y[4], y[5]);
        let a = omega.cross(&v);
        SVector::<f64, 6>::from([v[0], v[1], v[2], a[0], a[1], a[2]])
    };

    let mut state = SVector::<f64, 6>::from([
        params.x0[0], params.x0[1], params.x0[2], params.v0[0], params.v0[1], params.v0[2],
    ]);
    let mut now = 0.0;
    let mut samples = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - now;
        let steps = step_count(span, dt);
        state = rk4_fixed(&rhs, &state, span, steps, |dt_elapsed, y| {
            if y.iter().all(|c| c.is_finite()) {
                Ok(())
            } else {
                Err(Error::FlowFailure {
                    time: now + dt_elapsed,
                    reason: "non-finite state".into(),
                })
            }
        })?;
        now = target;
        samples.push(TrajectorySample {
            t: target,
            x: Vec3::new(state[0], state[1], state[2]),
            v: Vec3::new(state[3], state[4], state[5]),
        });
    }
    Ok(Trajectory { samples })
}

/// The helix written as a rotation of `r0 = v0/|ω|`, a boost and a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalileiDecomposition {
    pub rotated: Vec3,
    pub boost: Vec3,
    pub translation: Vec3,
}

impl GalileiDecomposition {
    pub fn total(&self) -> Vec3 {
        self.rotated + self.boost + self.translation
    }
}

pub fn galilei_decomposition(params: &TrajectoryParams, t: f64) -> Result<GalileiDecomposition> {
    let w = params.omega.norm();
    if w == 0.0 {
        return Err(Error::Domain("decomposition needs a non-zero angular velocity".into()));
    }
    let n = params.omega / w;
    let r0 = params.v0 / w;
    let rotated = rodrigues_rotate(&n, w * t - FRAC_PI_2, &r0)?;
    let boost = n * params.v0.dot(&n) * t;
    let translation = n.cross(&r0) - n * n.dot(&r0) + params.x0;
    Ok(GalileiDecomposition { rotated, boost, translation })
}

/// Velocity and acceleration in the inertial frame from rotating-frame quantities.
pub fn rotating_frame_kinematics(
    x: &Vec3,
    v_rot: &Vec3,
    a_rot: &Vec3,
    omega: &Vec3,
    omega_dot: &Vec3,
) -> (Vec3, Vec3) {
    let v = v_rot + omega.cross(x);
    let a = a_rot + omega.cross(v_rot) * 2.0 + omega_dot.cross(x) + omega.cross(&omega.cross(x));
    (v, a)
}
