//! Canonical mechanics of the Galilean particle on `ℝ³ × SO(3)`.
//!
//! The rotational state is carried by Euler angles `α = (θ, φ, ψ)`. The rate
//! matrix `A(α)` maps the (space-frame) angular velocity to Euler-angle rates,
//! `α̇ = A ω`. The Lagrangian `L = d0 A⁻¹_{ik} ẋ_i α̇_k` is bilinear in the two
//! velocities, which makes the dynamics strongly degenerate: the momentum
//! conjugate to `x` is `p = d0 ω` and is conserved.
//!
//! Matrix convention: `a[(i, k)]` is `A_{ik}` and `da[s][(i, k)]` is
//! `∂A_{ik}/∂α_s`. All derivatives are analytic.

use nalgebra::{Matrix3, SVector};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::galilean::Vec3;
use crate::integrate::{rk4_fixed, step_count};

/// Operations needing `A⁻¹` or `∂A` refuse `|sin θ|` below this.
pub const SINGULARITY_GUARD: f64 = 1e-12;

/// Levi-Civita symbol on indices `0..3`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Euler angles `(θ, φ, ψ)`, in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(theta: f64, phi: f64, psi: f64) -> Self {
        Self { theta, phi, psi }
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(&self) -> Vec3 {
        Vec3::new(self.theta, self.phi, self.psi)
    }

    pub fn check_regular(&self) -> Result<()> {
        let s = self.theta.sin();
        if !(s.abs() >= SINGULARITY_GUARD) {
            return Err(Error::CoordinateSingularity { sin_theta: s });
        }
        Ok(())
    }

    /// Body symmetry axis (third body axis) expressed in the space frame.
    pub fn body_axis(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(st * sp, -st * cp, ct)
    }
}

/// `A(α)`; singular entries are `±inf` at `sin θ = 0`.
pub fn rate_matrix(alpha: &EulerAngles) -> Matrix3<f64> {
    let (st, ct) = alpha.theta.sin_cos();
    let (sp, cp) = alpha.phi.sin_cos();
    let cot = ct / st;
    let csc = 1.0 / st;
    Matrix3::new(
        cp, sp, 0.0,
        -cot * sp, cot * cp, 1.0,
        csc * sp, -csc * cp, 0.0,
    )
}

/// Closed-form `A⁻¹(α)`; regular everywhere.
pub fn inverse_rate_matrix(alpha: &EulerAngles) -> Matrix3<f64> {
    let (st, ct) = alpha.theta.sin_cos();
    let (sp, cp) = alpha.phi.sin_cos();
    Matrix3::new(
        cp, 0.0, st * sp,
        sp, 0.0, -st * cp,
        0.0, 1.0, ct,
    )
}

/// `[∂A/∂θ, ∂A/∂φ, ∂A/∂ψ]`.
pub fn rate_matrix_derivatives(alpha: &EulerAngles) -> [Matrix3<f64>; 3] {
    let (st, ct) = alpha.theta.sin_cos();
    let (sp, cp) = alpha.phi.sin_cos();
    let cot = ct / st;
    let csc = 1.0 / st;
    let csc2 = csc * csc;
    let d_theta = Matrix3::new(
        0.0, 0.0, 0.0,
        csc2 * sp, -csc2 * cp, 0.0,
        -csc * cot * sp, csc * cot * cp, 0.0,
    );
    let d_phi = Matrix3::new(
        -sp, cp, 0.0,
        -cot * cp, -cot * sp, 0.0,
        csc * cp, csc * sp, 0.0,
    );
    [d_theta, d_phi, Matrix3::zeros()]
}

/// `[∂A⁻¹/∂θ, ∂A⁻¹/∂φ, ∂A⁻¹/∂ψ]`.
pub fn inverse_rate_matrix_derivatives(alpha: &EulerAngles) -> [Matrix3<f64>; 3] {
    let (st, ct) = alpha.theta.sin_cos();
    let (sp, cp) = alpha.phi.sin_cos();
    let d_theta = Matrix3::new(
        0.0, 0.0, ct * sp,
        0.0, 0.0, -ct * cp,
        0.0, 0.0, -st,
    );
    let d_phi = Matrix3::new(
        -sp, 0.0, st * cp,
        cp, 0.0, st * sp,
        0.0, 0.0, 0.0,
    );
    [d_theta, d_phi, Matrix3::zeros()]
}

/// `A(α)` together with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMatrix {
    pub a: Matrix3<f64>,
    pub inverse: Matrix3<f64>,
}

pub fn euler_rate_matrix(alpha: &EulerAngles) -> Result<RateMatrix> {
    alpha.check_regular()?;
    Ok(RateMatrix { a: rate_matrix(alpha), inverse: inverse_rate_matrix(alpha) })
}

/// Largest violations of the two structure identities of the rate matrix.
///
/// The first is `[∂_s A⁻¹_{kr} − ∂_r A⁻¹_{ks}] A_{si} = ε_{ijk} A⁻¹_{jr}`, the
/// second `A_{rk} ∂_r A_{ji} − A_{ri} ∂_r A_{jk} = ε_{ikr} A_{jr}`.
pub fn structure_identities_residual(alpha: &EulerAngles) -> Result<(f64, f64)> {
    alpha.check_regular()?;
    let a = rate_matrix(alpha);
    let ai = inverse_rate_matrix(alpha);
    let da = rate_matrix_derivatives(alpha);
    let dai = inverse_rate_matrix_derivatives(alpha);

    let mut first = 0.0f64;
    for k in 0..3 {
        for r in 0..3 {
            for i in 0..3 {
                let lhs: f64 = (0..3).map(|s| (dai[s][(k, r)] - dai[r][(k, s)]) * a[(s, i)]).sum();
                let rhs: f64 = (0..3).map(|j| levi_civita(i, j, k) * ai[(j, r)]).sum();
                first = first.max((lhs - rhs).abs());
            }
        }
    }

    let mut second = 0.0f64;
    for i in 0..3 {
        for k in 0..3 {
            for j in 0..3 {
                let lhs: f64 = (0..3)
                    .map(|r| a[(r, k)] * da[r][(j, i)] - a[(r, i)] * da[r][(j, k)])
                    .sum();
                let rhs: f64 = (0..3).map(|r| levi_civita(i, k, r) * a[(j, r)]).sum();
                second = second.max((lhs - rhs).abs());
            }
        }
    }
    Ok((first, second))
}

/// `L = d0 A⁻¹_{ik}(α) ẋ_i α̇_k`.
pub fn lagrangian(x_dot: &Vec3, alpha_dot: &Vec3, alpha: &EulerAngles, consts: &Constants) -> Result<f64> {
    alpha.check_regular()?;
    Ok(consts.d0() * x_dot.dot(&(inverse_rate_matrix(alpha) * alpha_dot)))
}

/// Conjugate momenta `(p, π)` from the velocities.
pub fn momenta(x_dot: &Vec3, alpha_dot: &Vec3, alpha: &EulerAngles, consts: &Constants) -> Result<(Vec3, Vec3)> {
    alpha.check_regular()?;
    let ai = inverse_rate_matrix(alpha);
    let p = ai * alpha_dot * consts.d0();
    let pi = ai.transpose() * x_dot * consts.d0();
    Ok((p, pi))
}

/// `H = d0⁻¹ A_{ki}(α) p_i π_k`.
pub fn hamiltonian(alpha: &EulerAngles, p: &Vec3, pi: &Vec3, consts: &Constants) -> f64 {
    pi.dot(&(rate_matrix(alpha) * p)) / consts.d0()
}

/// A point `(x, α, p, π)` of the 12-dimensional phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalState {
    pub x: Vec3,
    pub alpha: EulerAngles,
    pub p: Vec3,
    pub pi: Vec3,
}

impl CanonicalState {
    pub fn to_vector(&self) -> SVector<f64, 12> {
        let a = self.alpha.to_vector();
        SVector::<f64, 12>::from_iterator(
            self.x.iter().chain(a.iter()).chain(self.p.iter()).chain(self.pi.iter()).copied(),
        )
    }

    pub fn from_vector(v: &SVector<f64, 12>) -> Self {
        Self {
            x: Vec3::new(v[0], v[1], v[2]),
            alpha: EulerAngles::new(v[3], v[4], v[5]),
            p: Vec3::new(v[6], v[7], v[8]),
            pi: Vec3::new(v[9], v[10], v[11]),
        }
    }

    /// State with the given position, orientation, velocity and angular velocity.
    pub fn from_velocities(x: Vec3, alpha: EulerAngles, v: &Vec3, omega: &Vec3, consts: &Constants) -> Result<Self> {
        let alpha_dot = rate_matrix(&alpha) * omega;
        let (p, pi) = momenta(v, &alpha_dot, &alpha, consts)?;
        Ok(Self { x, alpha, p, pi })
    }
}

/// Time derivative of a [`CanonicalState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalRates {
    pub x_dot: Vec3,
    pub alpha_dot: Vec3,
    pub p_dot: Vec3,
    pub pi_dot: Vec3,
}

pub fn canonical_rhs(state: &CanonicalState, consts: &Constants) -> CanonicalRates {
    let inv_d0 = 1.0 / consts.d0();
    let a = rate_matrix(&state.alpha);
    let da = rate_matrix_derivatives(&state.alpha);
    let x_dot = a.transpose() * state.pi * inv_d0;
    let alpha_dot = a * state.p * inv_d0;
    let pi_dot = Vec3::from_fn(|k, _| -state.pi.dot(&(da[k] * state.p)) * inv_d0);
    CanonicalRates { x_dot, alpha_dot, p_dot: Vec3::zeros(), pi_dot }
}

/// Second-order Euler–Lagrange equations: returns `(α̈, ẍ)`.
pub fn lagrange_eom_rhs(alpha: &EulerAngles, alpha_dot: &Vec3, x_dot: &Vec3) -> Result<(Vec3, Vec3)> {
    alpha.check_regular()?;
    let a = rate_matrix(alpha);
    let dai = inverse_rate_matrix_derivatives(alpha);
    let contracted = dai[0] * alpha_dot[0] + dai[1] * alpha_dot[1] + dai[2] * alpha_dot[2];
    let alpha_ddot = -(a * contracted * alpha_dot);
    let omega = inverse_rate_matrix(alpha) * alpha_dot;
    Ok((alpha_ddot, omega.cross(x_dot)))
}

/// `m_k = A_{ik}(α) π_i`.
pub fn angular_momentum_m(alpha: &EulerAngles, pi: &Vec3) -> Vec3 {
    rate_matrix(alpha).transpose() * pi
}

/// `{m_i, m_k}` with respect to `(α, π)`, from analytic derivatives.
pub fn poisson_bracket_m(i: usize, k: usize, state: &CanonicalState) -> Result<f64> {
    if i > 2 || k > 2 {
        return Err(Error::InvalidInput(format!("component indices must be < 3, got ({i}, {k})")));
    }
    state.alpha.check_regular()?;
    let a = rate_matrix(&state.alpha);
    let da = rate_matrix_derivatives(&state.alpha);
    // ∂m_c/∂α_l = (∂_l Aᵀ π)_c and ∂m_c/∂π_l = A_{lc}
    let dm_dalpha = |c: usize, l: usize| (da[l].transpose() * state.pi)[c];
    Ok((0..3)
        .map(|l| dm_dalpha(i, l) * a[(l, k)] - a[(l, i)] * dm_dalpha(k, l))
        .sum())
}

/// Variables `(u, ω, α, π)` with `u = d0 x`, `ω = p / d0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub u: Vec3,
    pub omega: Vec3,
    pub alpha: EulerAngles,
    pub pi: Vec3,
}

pub fn rescale(state: &CanonicalState, consts: &Constants) -> ScaledState {
    ScaledState {
        u: state.x * consts.d0(),
        omega: state.p / consts.d0(),
        alpha: state.alpha,
        pi: state.pi,
    }
}

pub fn unrescale(scaled: &ScaledState, consts: &Constants) -> CanonicalState {
    CanonicalState {
        x: scaled.u / consts.d0(),
        alpha: scaled.alpha,
        p: scaled.omega * consts.d0(),
        pi: scaled.pi,
    }
}

/// `H = A_{ki}(α) ω_i π_k` in scaled variables.
pub fn scaled_hamiltonian(scaled: &ScaledState) -> f64 {
    scaled.pi.dot(&(rate_matrix(&scaled.alpha) * scaled.omega))
}

/// Range `[θ_min, θ_max]` swept by the polar angle when the body rotates with
/// constant `omega` from orientation `alpha`.
///
/// The body axis precesses on a cone about `n = ω/|ω|`, so `θ` stays within
/// `|γ − β| ..= min(γ + β, 2π − γ − β)` with `γ = ∠(n, ẑ)` and `β = ∠(n, body axis)`.
pub fn polar_angle_range(alpha: &EulerAngles, omega: &Vec3) -> (f64, f64) {
    let w = omega.norm();
    if w == 0.0 {
        return (alpha.theta, alpha.theta);
    }
    let n = omega / w;
    let gamma = n[2].clamp(-1.0, 1.0).acos();
    let beta = n.dot(&alpha.body_axis()).clamp(-1.0, 1.0).acos();
    let hi = gamma + beta;
    ((gamma - beta).abs(), hi.min(2.0 * std::f64::consts::PI - hi))
}

/// Flags a flow that reaches or steps across `sin θ = 0`.
#[derive(Debug, Clone, Copy)]
pub struct PoleMonitor {
    last_sin: f64,
}

impl PoleMonitor {
    pub fn new(theta0: f64) -> Self {
        Self { last_sin: theta0.sin() }
    }

    pub fn check(&mut self, time: f64, theta: f64, finite: bool) -> Result<()> {
        if !finite {
            return Err(Error::FlowFailure { time, reason: "non-finite state".into() });
        }
        let s = theta.sin();
        if s.abs() < SINGULARITY_GUARD || s.signum() != self.last_sin.signum() {
            return Err(Error::FlowFailure { time, reason: "reached sin(theta) = 0".into() });
        }
        self.last_sin = s;
        Ok(())
    }
}

/// RK4 integration of the canonical equations sampled at `t_grid`.
pub fn integrate_canonical(
    state: &CanonicalState,
    t_grid: &[f64],
    dt: f64,
    consts: &Constants,
) -> Result<Vec<CanonicalState>> {
    check_grid(t_grid, dt)?;
    let rhs = |y: &SVector<f64, 12>| {
        let r = canonical_rhs(&CanonicalState::from_vector(y), consts);
        let CanonicalRates { x_dot, alpha_dot, p_dot, pi_dot } = r;
        SVector::<f64, 12>::from_iterator(
            x_dot.iter().chain(alpha_dot.iter()).chain(p_dot.iter()).chain(pi_dot.iter()).copied(),
        )
    };
    let mut y = state.to_vector();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - now;
        let start = now;
        let mut monitor = PoleMonitor::new(y[3]);
        y = rk4_fixed(&rhs, &y, span, step_count(span, dt), |t, y| {
            monitor.check(start + t, y[3], y.iter().all(|c| c.is_finite()))
        })?;
        now = target;
        out.push(CanonicalState::from_vector(&y));
    }
    Ok(out)
}

/// Sample of the second-order (Lagrangian) flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeState {
    pub x: Vec3,
    pub x_dot: Vec3,
    pub alpha: EulerAngles,
    pub alpha_dot: Vec3,
}

/// RK4 integration of the Euler–Lagrange equations sampled at `t_grid`.
pub fn integrate_lagrange(state: &LagrangeState, t_grid: &[f64], dt: f64) -> Result<Vec<LagrangeState>> {
    check_grid(t_grid, dt)?;
    state.alpha.check_regular()?;
    // Layout: x, ẋ, α, α̇.
    let rhs = |y: &SVector<f64, 12>| {
        let alpha = EulerAngles::new(y[6], y[7], y[8]);
        let x_dot = Vec3::new(y[3], y[4], y[5]);
        let alpha_dot = Vec3::new(y[9], y[10], y[11]);
        let (alpha_ddot, x_ddot) = lagrange_eom_rhs(&alpha, &alpha_dot, &x_dot)
            .unwrap_or((Vec3::repeat(f64::NAN), Vec3::repeat(f64::NAN)));
        SVector::<f64, 12>::from_iterator(
            x_dot.iter().chain(x_ddot.iter()).chain(alpha_dot.iter()).chain(alpha_ddot.iter()).copied(),
        )
    };
    let pack = |s: &LagrangeState| {
        let a = s.alpha.to_vector();
        SVector::<f64, 12>::from_iterator(
            s.x.iter().chain(s.x_dot.iter()).chain(a.iter()).chain(s.alpha_dot.iter()).copied(),
        )
    };
    let mut y = pack(state);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - now;
        let start = now;
        let mut monitor = PoleMonitor::new(y[6]);
        y = rk4_fixed(&rhs, &y, span, step_count(span, dt), |t, y| {
            monitor.check(start + t, y[6], y.iter().all(|c| c.is_finite()))
        })?;
        now = target;
        out.push(LagrangeState {
            x: Vec3::new(y[0], y[1], y[2]),
            x_dot: Vec3::new(y[3], y[4], y[5]),
            alpha: EulerAngles::new(y[6], y[7], y[8]),
            alpha_dot: Vec3::new(y[9], y[10], y[11]),
        });
    }
    Ok(out)
}

fn check_grid(t_grid: &[f64], dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {dt}")));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("sample times must be finite, non-negative and sorted".into()));
    }
    Ok(())
}
