//! The canonical flow as a map on the 12-dimensional phase space and the
//! passage from trajectories to a complex field on that space.
//!
//! Coordinates are the scaled variables `y = (u, ω, α, π)` with `u = d0 x`
//! and `ω = p / d0`, in which the Hamiltonian `H = ωᵀ Aᵀ(α) π` carries no
//! constants at all. The flow therefore never needs `Constants`; only the
//! Madelung phase `S / s0` does.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::canonical::{inverse_rate_matrix, rate_matrix, rate_matrix_derivatives, EulerAngles, PoleMonitor, ScaledState};
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::galilean::Vec3;
use crate::integrate::{rk4_fixed, step_count};

pub type PhaseVector = SVector<f64, 12>;
pub type PhaseMatrix = SMatrix<f64, 12, 12>;

/// A point `(u₁..u₃, ω₁..ω₃, α₁..α₃, π₁..π₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint(pub PhaseVector);

impl PhasePoint {
    pub fn new(u: Vec3, omega: Vec3, alpha: EulerAngles, pi: Vec3) -> Self {
        let a = alpha.to_vector();
        Self(PhaseVector::from_iterator(
            u.iter().chain(omega.iter()).chain(a.iter()).chain(pi.iter()).copied(),
        ))
    }

    fn block(&self, k: usize) -> Vec3 {
        Vec3::new(self.0[3 * k], self.0[3 * k + 1], self.0[3 * k + 2])
    }

    pub fn u(&self) -> Vec3 {
        self.block(0)
    }

    pub fn omega(&self) -> Vec3 {
        self.block(1)
    }

    pub fn alpha(&self) -> EulerAngles {
        EulerAngles::from_vector(&self.block(2))
    }

    pub fn pi(&self) -> Vec3 {
        self.block(3)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn from_scaled(s: &ScaledState) -> Self {
        Self::new(s.u, s.omega, s.alpha, s.pi)
    }

    pub fn to_scaled(&self) -> ScaledState {
        ScaledState { u: self.u(), omega: self.omega(), alpha: self.alpha(), pi: self.pi() }
    }
}

/// `H(y) = ωᵀ Aᵀ π`.
pub fn phase_hamiltonian(y: &PhasePoint) -> f64 {
    y.pi().dot(&(rate_matrix(&y.alpha()) * y.omega()))
}

/// Partial derivatives of `H` grouped as `(H_u, H_ω, H_α, H_π)`.
pub fn hamiltonian_gradient(y: &PhasePoint) -> [Vec3; 4] {
    let alpha = y.alpha();
    let a = rate_matrix(&alpha);
    let da = rate_matrix_derivatives(&alpha);
    let (omega, pi) = (y.omega(), y.pi());
    let h_alpha = Vec3::from_fn(|k, _| pi.dot(&(da[k] * omega)));
    [Vec3::zeros(), a.transpose() * pi, h_alpha, a * omega]
}

/// Hamiltonian vector field `ẏ`.
pub fn phase_rhs(y: &PhasePoint) -> PhaseVector {
    let [h_u, h_omega, h_alpha, h_pi] = hamiltonian_gradient(y);
    PhasePoint::new(h_omega, -h_u, EulerAngles::from_vector(&h_pi), -h_alpha).0
}

/// `L̄ = ω·H_ω + π·H_π − H`, the integrand of the action.
pub fn action_integrand(y: &PhasePoint) -> f64 {
    let [_, h_omega, _, h_pi] = hamiltonian_gradient(y);
    y.omega().dot(&h_omega) + y.pi().dot(&h_pi) - phase_hamiltonian(y)
}


fn check_step(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {dt}")));
    }
    Ok(())
}

/// `f(t, y)` in exactly `steps` uniform RK4 steps; `t` may be negative.
pub fn flow_map_steps(y: &PhasePoint, t: f64, steps: usize) -> Result<PhasePoint> {
    y.alpha().check_regular()?;
    let rhs = |v: &PhaseVector| phase_rhs(&PhasePoint(*v));
    let mut monitor = PoleMonitor::new(y.0[6]);
    rk4_fixed(&rhs, &y.0, t, steps, |s, v| monitor.check(s, v[6], v.iter().all(|c| c.is_finite())))
        .map(PhasePoint)
}

/// `f(t, y)` with steps no larger than `dt`.
pub fn flow_map(y: &PhasePoint, t: f64, dt: f64) -> Result<PhasePoint> {
    check_step(dt)?;
    flow_map_steps(y, t, step_count(t, dt))
}

/// Finite-difference functional matrix of the flow map.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowJacobian {
    pub matrix: PhaseMatrix,
    pub det: f64,
    /// Column norms of `∂f/∂π⁰`.
    pub col_norms_pi0: [f64; 3],
}

pub fn flow_jacobian(y: &PhasePoint, t: f64, dt: f64, h_fd: f64) -> Result<FlowJacobian> {
    check_step(dt)?;
    if !(h_fd > 0.0 && h_fd.is_finite()) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {h_fd}")));
    }
    let steps = step_count(t, dt);
    let mut matrix = PhaseMatrix::zeros();
    for nu in 0..12 {
        let mut plus = y.0;
        let mut minus = y.0;
        plus[nu] += h_fd;
        minus[nu] -= h_fd;
        let fp = flow_map_steps(&PhasePoint(plus), t, steps)?;
        let fm = flow_map_steps(&PhasePoint(minus), t, steps)?;
        matrix.set_column(nu, &((fp.0 - fm.0) / (2.0 * h_fd)));
    }
    let det = matrix.lu().determinant();
    let col_norms_pi0 = [9, 10, 11].map(|c| matrix.column(c).norm());
    Ok(FlowJacobian { matrix, det, col_norms_pi0 })
}

/// Jacobian experiment record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianReport {
    pub t: f64,
    pub det: f64,
    pub col_norms_pi0: Vec<f64>,
    pub generic: bool,
}

impl JacobianReport {
    pub fn new(t: f64, jac: &FlowJacobian, generic: bool) -> Self {
        Self { t, det: jac.det, col_norms_pi0: jac.col_norms_pi0.to_vec(), generic }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Initial data with velocity parallel to the angular velocity, `v = r ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateFamily {
    pub alpha0: EulerAngles,
    pub omega0: Vec3,
    pub r: f64,
    pub u0: Vec3,
}

/// `π⁰_i = r A⁻¹_{ki}(α⁰) ω⁰_k`, so that `u̇(0) = r ω⁰`.
pub fn degenerate_initial_point(fam: &DegenerateFamily) -> Result<PhasePoint> {
    fam.alpha0.check_regular()?;
    let pi0 = inverse_rate_matrix(&fam.alpha0).transpose() * fam.omega0 * fam.r;
    Ok(PhasePoint::new(fam.u0, fam.omega0, fam.alpha0, pi0))
}

/// `u̇ = Aᵀ π` at `y`.
pub fn phase_velocity(y: &PhasePoint) -> Vec3 {
    rate_matrix(&y.alpha()).transpose() * y.pi()
}

/// Density and action carried to time `t` along one characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSample {
    pub t: f64,
    pub point: PhasePoint,
    pub rho: f64,
    pub action: f64,
}

/// Transports `(ρ₀, S = 0)` from `y₀` in `steps` RK4 steps.
pub fn transport_density_action_steps(y0: &PhasePoint, rho0: f64, t: f64, steps: usize) -> Result<TransportSample> {
    if !(rho0 >= 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidInput(format!("density must be non-negative, got {rho0}")));
    }
    y0.alpha().check_regular()?;
    let rhs = |v: &SVector<f64, 13>| {
        let y = PhasePoint(v.fixed_rows::<12>(0).into_owned());
        let mut out = SVector::<f64, 13>::zeros();
        out.fixed_rows_mut::<12>(0).copy_from(&phase_rhs(&y));
        // the density has vanishing material derivative
        out[12] = action_integrand(&y);
        out
    };
    let mut v0 = SVector::<f64, 13>::zeros();
    v0.fixed_rows_mut::<12>(0).copy_from(&y0.0);
    let mut monitor = PoleMonitor::new(y0.0[6]);
    let v = rk4_fixed(&rhs, &v0, t, steps, |s, v| monitor.check(s, v[6], v.iter().all(|c| c.is_finite())))?;
    Ok(TransportSample { t, point: PhasePoint(v.fixed_rows::<12>(0).into_owned()), rho: rho0, action: v[12] })
}

pub fn transport_density_action(y0: &PhasePoint, rho0: f64, t: f64, dt: f64) -> Result<TransportSample> {
    check_step(dt)?;
    transport_density_action_steps(y0, rho0, t, step_count(t, dt))
}

/// `ψ = √ρ e^{iS/s0}`.
pub fn madelung_combine(rho: f64, action: f64, s0: f64) -> Result<Complex64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!("density must be non-negative, got {rho}")));
    }
    if !(s0 > 0.0) {
        return Err(Error::InvalidInput(format!("s0 must be positive, got {s0}")));
    }
    Ok(Complex64::from_polar(rho.sqrt(), action / s0))
}

/// Initial density and action on phase space.
pub trait InitialData {
    fn density(&self, y: &PhasePoint) -> f64;
    fn action(&self, y: &PhasePoint) -> f64;
}

/// `ρ₀ = 1`, `S₀ = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformData;

impl InitialData for UniformData {
    fn density(&self, _: &PhasePoint) -> f64 {
        1.0
    }

    fn action(&self, _: &PhasePoint) -> f64 {
        0.0
    }
}

/// Gaussian density with a linear initial action `S₀ = k·y`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianData {
    pub center: PhaseVector,
    pub width: f64,
    pub wave: PhaseVector,
}

impl InitialData for GaussianData {
    fn density(&self, y: &PhasePoint) -> f64 {
        (-(y.0 - self.center).norm_squared() / (2.0 * self.width * self.width)).exp()
    }

    fn action(&self, y: &PhasePoint) -> f64 {
        self.wave.dot(&y.0)
    }
}

/// Field value `ψ(x, t)`: trace `x` back to `y = f(−t, x)` and carry
/// `(ρ₀(y), S₀(y))` forward again. A fixed step count keeps the numerical
/// field smooth in `t`.
pub fn eulerian_psi(
    x: &PhasePoint,
    t: f64,
    data: &dyn InitialData,
    steps: usize,
    s0: f64,
) -> Result<(f64, f64, Complex64)> {
    let y = flow_map_steps(x, -t, steps)?;
    let sample = transport_density_action_steps(&y, data.density(&y), t, steps)?;
    let action = data.action(&y) + sample.action;
    Ok((sample.rho, action, madelung_combine(sample.rho, action, s0)?))
}

/// Placement of a 2-plane slice in phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSpec {
    /// Grid origin (node `(0, 0)`).
    pub origin: PhasePoint,
    /// Coordinate indices spanning the plane; default `(u₁, π₁)`.
    pub axes: (usize, usize),
    pub shape: (usize, usize),
    /// Spacing `h`, used in-plane and for the off-plane stencils.
    pub h: f64,
    /// Time spacing `Δt`.
    pub dt: f64,
    pub t: f64,
    /// RK4 steps per characteristic.
    pub flow_steps: usize,
}

impl SliceSpec {
    pub const DEFAULT_AXES: (usize, usize) = (0, 9);

    /// 3×3 slice centred on `center` in the default plane.
    pub fn centered(center: &PhasePoint, h: f64, dt: f64, t: f64, flow_steps: usize) -> Self {
        let (a, b) = Self::DEFAULT_AXES;
        let mut origin = center.0;
        origin[a] -= h;
        origin[b] -= h;
        Self { origin: PhasePoint(origin), axes: Self::DEFAULT_AXES, shape: (3, 3), h, dt, t, flow_steps }
    }
}

/// Per-node field data.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub point: PhasePoint,
    pub rho: f64,
    pub action: f64,
    pub psi: Complex64,
    /// `ψ` at `t − Δt` and `t + Δt`.
    pub psi_time: [Complex64; 2],
    /// `ψ` at `∓h` along every coordinate; in-plane entries are left to the grid.
    pub psi_off: [[Complex64; 2]; 12],
}

/// `ψ` on a structured 2-plane slice at time `t`, with stencil values.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridField {
    pub spec: SliceSpec,
    pub s0: f64,
    pub nodes: Vec<GridNode>,
}

impl PhaseGridField {
    pub fn build(spec: SliceSpec, data: &dyn InitialData, consts: &Constants) -> Result<Self> {
        let (a, b) = spec.axes;
        if a >= 12 || b >= 12 || a == b {
            return Err(Error::InvalidInput(format!("invalid slice axes ({a}, {b})")));
        }
        if spec.shape.0 < 3 || spec.shape.1 < 3 {
            return Err(Error::InvalidInput("slice needs at least 3×3 nodes".into()));
        }
        if !(spec.h > 0.0 && spec.h.is_finite() && spec.dt > 0.0 && spec.dt.is_finite()) {
            return Err(Error::InvalidInput("spacings must be positive".into()));
        }
        let s0 = consts.s0();
        let psi_at = |x: &PhasePoint, t: f64| eulerian_psi(x, t, data, spec.flow_steps, s0);
        let mut nodes = Vec::with_capacity(spec.shape.0 * spec.shape.1);
        for j in 0..spec.shape.1 {
            for i in 0..spec.shape.0 {
                let mut x = spec.origin.0;
                x[a] += i as f64 * spec.h;
                x[b] += j as f64 * spec.h;
                let point = PhasePoint(x);
                let (rho, action, psi) = psi_at(&point, spec.t)?;
                let psi_time = [psi_at(&point, spec.t - spec.dt)?.2, psi_at(&point, spec.t + spec.dt)?.2];
                let mut psi_off = [[Complex64::new(f64::NAN, f64::NAN); 2]; 12];
                for (c, entry) in psi_off.iter_mut().enumerate() {
                    if c == a || c == b {
                        continue;
                    }
                    for (side, sign) in [-1.0, 1.0].into_iter().enumerate() {
                        let mut shifted = x;
                        shifted[c] += sign * spec.h;
                        entry[side] = psi_at(&PhasePoint(shifted), spec.t)?.2;
                    }
                }
                nodes.push(GridNode { point, rho, action, psi, psi_time, psi_off });
            }
        }
        Ok(Self { spec, s0, nodes })
    }

    pub fn node(&self, i: usize, j: usize) -> Option<&GridNode> {
        (i < self.spec.shape.0 && j < self.spec.shape.1).then(|| &self.nodes[j * self.spec.shape.0 + i])
    }

    /// Central-difference gradient of `ψ` in all 12 coordinates at node `(i, j)`.
    pub fn gradient(&self, i: usize, j: usize) -> Result<[Complex64; 12]> {
        let (nx, ny) = self.spec.shape;
        if i == 0 || j == 0 || i + 1 >= nx || j + 1 >= ny {
            return Err(Error::Stencil(format!("node ({i}, {j}) is not interior to a {nx}×{ny} slice")));
        }
        let node = &self.nodes[j * nx + i];
        let (a, b) = self.spec.axes;
        let two_h = 2.0 * self.spec.h;
        let mut grad = [Complex64::new(0.0, 0.0); 12];
        for (c, g) in grad.iter_mut().enumerate() {
            let (minus, plus) = if c == a {
                (self.nodes[j * nx + i - 1].psi, self.nodes[j * nx + i + 1].psi)
            } else if c == b {
                (self.nodes[(j - 1) * nx + i].psi, self.nodes[(j + 1) * nx + i].psi)
            } else {
                (node.psi_off[c][0], node.psi_off[c][1])
            };
            *g = (plus - minus) / two_h;
        }
        Ok(grad)
    }
}

/// Residual of the phase-space wave equation at node `(i, j)`:
/// `(s0/i) ψ_t − Σ H_ω(ωψ − (s0/i)∂_u ψ) − Σ H_π(πψ − (s0/i)∂_α ψ)
///  − (s0/i) Σ (H_u ∂_ω + H_α ∂_π) ψ + H ψ`, all by central differences.
pub fn phase_equation_residual(grid: &PhaseGridField, node: (usize, usize), consts: &Constants) -> Result<Complex64> {
    let grad = grid.gradient(node.0, node.1)?;
    let nd = &grid.nodes[node.1 * grid.spec.shape.0 + node.0];
    let y = &nd.point;
    let psi = nd.psi;
    let s_over_i = Complex64::new(0.0, -consts.s0());
    let psi_t = (nd.psi_time[1] - nd.psi_time[0]) / (2.0 * grid.spec.dt);
    let [h_u, h_omega, h_alpha, h_pi] = hamiltonian_gradient(y);
    let (omega, pi) = (y.omega(), y.pi());

    let mut r = s_over_i * psi_t + phase_hamiltonian(y) * psi;
    for k in 0..3 {
        r -= h_omega[k] * (omega[k] * psi - s_over_i * grad[k]);
        r -= h_pi[k] * (pi[k] * psi - s_over_i * grad[6 + k]);
        r -= s_over_i * (h_u[k] * grad[3 + k] + h_alpha[k] * grad[9 + k]);
    }
    Ok(r)
}

/// Outcome of halving `h` and `Δt` together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceResult {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
    pub order: f64,
}

/// Largest centre-node residual over `centers` at spacing `(h, Δt)` and at
/// `(h/2, Δt/2)`.
pub fn residual_convergence(
    centers: &[PhasePoint],
    data: &dyn InitialData,
    h: f64,
    dt: f64,
    t: f64,
    flow_steps: usize,
    consts: &Constants,
) -> Result<ConvergenceResult> {
    let max_residual = |h: f64, dt: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        for c in centers {
            let grid = PhaseGridField::build(SliceSpec::centered(c, h, dt, t, flow_steps), data, consts)?;
            worst = worst.max(phase_equation_residual(&grid, (1, 1), consts)?.norm());
        }
        Ok(worst)
    };
    let coarse = max_residual(h, dt)?;
    let fine = max_residual(h / 2.0, dt / 2.0)?;
    let ratio = coarse / fine;
    Ok(ConvergenceResult { coarse, fine, ratio, order: ratio.log2() })
}
