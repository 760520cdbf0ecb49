//! Free three-component fields `G = E + iB` in a periodic box.
//!
//! A field is a finite set of plane-wave modes labelled by an integer lattice
//! vector `n` (momentum `p = s0 · 2π n / L`) and a helicity. Each mode is an
//! exact solution, so derivatives are taken analytically and time evolution
//! is a phase rotation.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canonical::levi_civita;
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::galilean::Vec3;
use crate::so3::{angular_momentum_matrices, OperatorMatrix3};

pub type CVec3 = Vector3<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this value of `(p₁² + p₂²)/|p|²` the on-axis eigenvectors are used.
pub const ON_AXIS_THRESHOLD: f64 = 1e-24;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &OperatorMatrix3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Passage from the spherical l = 1 basis to Cartesian components.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisChange {
    pub u: OperatorMatrix3,
    /// `S^i_{jk} = (s0/i) ε_{ijk}`.
    pub s: [OperatorMatrix3; 3],
    /// `V^i = S^i / d0`.
    pub v: [OperatorMatrix3; 3],
    /// `max_i max|U⁻¹ M^i U − S^i|`.
    pub similarity_residual: f64,
    /// `max|U U† − I|`.
    pub unitarity_residual: f64,
}

pub fn basis_change(consts: &Constants) -> BasisChange {
    let r = 1.0 / 2f64.sqrt();
    let z = c(0.0);
    let u = OperatorMatrix3::new(c(r), I * r, z, z, z, c(1.0), c(-r), I * r, z);
    let s0 = consts.s0();
    let s = [0, 1, 2].map(|i| OperatorMatrix3::from_fn(|j, k| -I * s0 * levi_civita(i, j, k)));
    let v = s.map(|m| m / c(consts.d0()));
    let u_inv = u.try_inverse().expect("U is invertible");
    let m = angular_momentum_matrices(s0);
    let similarity_residual = (0..3).map(|i| max_abs(&(u_inv * m[i] * u - s[i]))).fold(0.0, f64::max);
    let unitarity_residual = max_abs(&(u * u.adjoint() - OperatorMatrix3::identity()));
    BasisChange { u, s, v, similarity_residual, unitarity_residual }
}

/// Sorted eigenvalues of a Hermitian 3×3 matrix.
pub fn hermitian_eigenvalues(m: &OperatorMatrix3) -> [f64; 3] {
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    [e[0], e[1], e[2]]
}

/// Helicity label of a mode; `Zero` is the longitudinal solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Helicity {
    Zero,
    Plus,
    Minus,
}

impl Helicity {
    pub const ALL: [Helicity; 3] = [Helicity::Zero, Helicity::Plus, Helicity::Minus];

    fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Helicity::Zero => "0",
            Helicity::Plus => "+",
            Helicity::Minus => "-",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Helicity::Zero),
            "+" => Ok(Helicity::Plus),
            "-" => Ok(Helicity::Minus),
            other => Err(Error::InvalidInput(format!("unknown helicity {other:?}"))),
        }
    }
}

impl fmt::Display for Helicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Eigen-decomposition of `V·p`, indexed by [`Helicity`].
#[derive(Debug, Clone, PartialEq)]
pub struct HelicityEigensystem {
    pub p: Vec3,
    pub energies: [f64; 3],
    pub vectors: [CVec3; 3],
}

impl HelicityEigensystem {
    pub fn energy(&self, a: Helicity) -> f64 {
        self.energies[a.index()]
    }

    pub fn vector(&self, a: Helicity) -> &CVec3 {
        &self.vectors[a.index()]
    }
}

/// `(V·p) u = i c (p × u)`.
pub fn v_dot_p(p: &Vec3, u: &CVec3, consts: &Constants) -> CVec3 {
    let pc = p.map(c);
    pc.cross(u) * (I * consts.c())
}

/// Scales `u` so its first non-negligible component is real and positive.
fn fix_phase(u: CVec3) -> CVec3 {
    match u.iter().find(|z| z.norm() > 1e-12) {
        Some(z) => u * (z.conj() / z.norm()),
        None => u,
    }
}

pub fn helicity_eigensystem(p: &Vec3, consts: &Constants) -> Result<HelicityEigensystem> {
    let pn = p.norm();
    if !(pn > 0.0) || !pn.is_finite() {
        return Err(Error::Domain(format!("helicity basis undefined for p = {p:?}")));
    }
    let energies = [0.0, consts.c() * pn, -consts.c() * pn];
    let u0 = (p / pn).map(c);
    let perp2 = p[0] * p[0] + p[1] * p[1];
    let (plus, minus) = if perp2 < ON_AXIS_THRESHOLD * pn * pn {
        let s = if p[2] >= 0.0 { 1.0 } else { -1.0 };
        let r = 1.0 / 2f64.sqrt();
        (CVec3::new(c(r), I * (s * r), c(0.0)), CVec3::new(c(r), I * (-s * r), c(0.0)))
    } else {
        let norm = 1.0 / (2.0 * pn * pn * perp2).sqrt();
        let build = |sign: f64| {
            CVec3::new(
                Complex64::new(-p[0] * p[2], sign * p[1] * pn),
                Complex64::new(-p[1] * p[2], -sign * p[0] * pn),
                c(perp2),
            ) * c(norm)
        };
        (build(1.0), build(-1.0))
    };
    Ok(HelicityEigensystem { p: *p, energies, vectors: [u0, fix_phase(plus), fix_phase(minus)] })
}

fn normalization(consts: &Constants) -> f64 {
    (2.0 * PI * consts.s0()).powf(-1.5)
}

/// `φ^a_p(x, t) = (2π s0)^{-3/2} u^a(p) e^{i(p·x − E^a t)/s0}`.
pub fn plane_wave(p: &Vec3, a: Helicity, x: &Vec3, t: f64, consts: &Constants) -> Result<CVec3> {
    let eig = helicity_eigensystem(p, consts)?;
    let phase = Complex64::from_polar(normalization(consts), (p.dot(x) - eig.energy(a) * t) / consts.s0());
    Ok(eig.vector(a) * phase)
}

/// One plane-wave component of a [`FieldState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub n: [i64; 3],
    pub helicity: Helicity,
    pub amplitude: Complex64,
}

impl Mode {
    pub fn new(n: [i64; 3], helicity: Helicity, amplitude: Complex64) -> Self {
        Self { n, helicity, amplitude }
    }

    /// Wavevector `2π n / L`.
    pub fn wavevector(&self, box_side: f64) -> Vec3 {
        Vec3::new(self.n[0] as f64, self.n[1] as f64, self.n[2] as f64) * (2.0 * PI / box_side)
    }

    pub fn momentum(&self, box_side: f64, consts: &Constants) -> Vec3 {
        self.wavevector(box_side) * consts.s0()
    }

    /// `c |k|`, so that `s0 ω = |E^±|`.
    pub fn angular_frequency(&self, box_side: f64, consts: &Constants) -> f64 {
        consts.c() * self.wavevector(box_side).norm()
    }
}

/// A finite superposition of modes in a box of side `L`, with amplitudes
/// referred to time `t0`. Modes are kept sorted by `(n, helicity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    box_side: f64,
    t0: f64,
    modes: Vec<Mode>,
}

impl FieldState {
    pub fn new(box_side: f64, t0: f64, mut modes: Vec<Mode>) -> Result<Self> {
        if !(box_side > 0.0 && box_side.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidInput(format!("invalid box side {box_side} or reference time {t0}")));
        }
        modes.sort_by_key(|m| (m.n, m.helicity));
        let mut keys = BTreeSet::new();
        for m in &modes {
            if m.n == [0, 0, 0] {
                return Err(Error::InvalidInput("mode with zero wavevector".into()));
            }
            if !(m.amplitude.re.is_finite() && m.amplitude.im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite amplitude for mode {:?}", m.n)));
            }
            if !keys.insert((m.n, m.helicity)) {
                return Err(Error::InvalidInput(format!("duplicate mode {:?} {}", m.n, m.helicity)));
            }
        }
        Ok(Self { box_side, t0, modes })
    }

    pub fn empty(box_side: f64) -> Result<Self> {
        Self::new(box_side, 0.0, Vec::new())
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn is_transverse(&self) -> bool {
        self.modes.iter().all(|m| m.helicity != Helicity::Zero)
    }

    /// Union of two mode sets in the same box at the same reference time.
    pub fn concat(&self, other: &FieldState) -> Result<FieldState> {
        if self.box_side != other.box_side || self.t0 != other.t0 {
            return Err(Error::InvalidInput("fields live in different boxes or reference times".into()));
        }
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        FieldState::new(self.box_side, self.t0, modes)
    }

    fn with_modes(&self, modes: Vec<Mode>) -> FieldState {
        FieldState { box_side: self.box_side, t0: self.t0, modes }
    }
}

/// `G`, its time derivative and `∂_i G_j` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub g: CVec3,
    pub g_t: CVec3,
    /// `grad[(i, j)] = ∂G_j/∂x_i`.
    pub grad: Matrix3<Complex64>,
}

impl FieldJet {
    pub fn e(&self) -> Vec3 {
        self.g.map(|z| z.re)
    }

    pub fn b(&self) -> Vec3 {
        self.g.map(|z| z.im)
    }
}

/// Analytic value and first derivatives of the field at `(x, t)`.
pub fn field_jet(field: &FieldState, x: &Vec3, t: f64, consts: &Constants) -> FieldJet {
    let s0 = consts.s0();
    let norm = normalization(consts);
    let mut jet = FieldJet { g: CVec3::zeros(), g_t: CVec3::zeros(), grad: Matrix3::zeros() };
    for m in &field.modes {
        let p = m.momentum(field.box_side, consts);
        let eig = helicity_eigensystem(&p, consts).expect("stored modes have p ≠ 0");
        let e = eig.energy(m.helicity);
        let term = eig.vector(m.helicity)
            * (m.amplitude * Complex64::from_polar(norm, (p.dot(x) - e * (t - field.t0)) / s0));
        jet.g += term;
        jet.g_t += term * Complex64::new(0.0, -e / s0);
        for i in 0..3 {
            let factor = Complex64::new(0.0, p[i] / s0);
            for j in 0..3 {
                jet.grad[(i, j)] += factor * term[j];
            }
        }
    }
    jet
}

/// Field value split into `G`, `E = Re G` and `B = Im G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub g: CVec3,
    pub e: Vec3,
    pub b: Vec3,
}

pub fn synthesize(field: &FieldState, x: &Vec3, t: f64, consts: &Constants) -> FieldSample {
    let g = field_jet(field, x, t, consts).g;
    FieldSample { g, e: g.map(|z| z.re), b: g.map(|z| z.im) }
}

fn curl(grad: &Matrix3<f64>) -> Vec3 {
    Vec3::new(grad[(1, 2)] - grad[(2, 1)], grad[(2, 0)] - grad[(0, 2)], grad[(0, 1)] - grad[(1, 0)])
}

/// Residuals of both curl equations and both divergences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellResidual {
    /// `∇×B − (1/c) ∂_t E`.
    pub ampere: Vec3,
    /// `∇×E + (1/c) ∂_t B`.
    pub faraday: Vec3,
    pub div_e: f64,
    pub div_b: f64,
}

impl MaxwellResidual {
    pub fn curl_max(&self) -> f64 {
        self.ampere.amax().max(self.faraday.amax())
    }

    pub fn div_max(&self) -> f64 {
        self.div_e.abs().max(self.div_b.abs())
    }
}

pub fn maxwell_residual(field: &FieldState, x: &Vec3, t: f64, consts: &Constants) -> MaxwellResidual {
    let jet = field_jet(field, x, t, consts);
    let inv_c = 1.0 / consts.c();
    let grad_e = jet.grad.map(|z| z.re);
    let grad_b = jet.grad.map(|z| z.im);
    MaxwellResidual {
        ampere: curl(&grad_b) - jet.g_t.map(|z| z.re) * inv_c,
        faraday: curl(&grad_e) + jet.g_t.map(|z| z.im) * inv_c,
        div_e: grad_e.trace(),
        div_b: grad_b.trace(),
    }
}

/// Drops every longitudinal mode.
pub fn transversality_project(field: &FieldState) -> FieldState {
    field.with_modes(field.modes.iter().copied().filter(|m| m.helicity != Helicity::Zero).collect())
}

/// `G̃(n) = (2π s0)^{-3/2} Σ_a A^a u^a(p)` per lattice vector.
pub fn mode_spectrum(field: &FieldState, consts: &Constants) -> Vec<([i64; 3], CVec3)> {
    let norm = normalization(consts);
    let mut out: Vec<([i64; 3], CVec3)> = Vec::new();
    for m in &field.modes {
        let eig = helicity_eigensystem(&m.momentum(field.box_side, consts), consts).expect("p ≠ 0");
        let term = eig.vector(m.helicity) * (m.amplitude * norm);
        match out.last_mut() {
            Some((n, g)) if *n == m.n => *g += term,
            _ => out.push((m.n, term)),
        }
    }
    out
}

/// Helicity amplitudes `A^a = (2π s0)^{3/2} (u^a, G̃)` for every lattice vector.
pub fn analyze(
    box_side: f64,
    t0: f64,
    spectrum: &[([i64; 3], CVec3)],
    consts: &Constants,
) -> Result<FieldState> {
    let inv_norm = 1.0 / normalization(consts);
    let mut modes = Vec::with_capacity(3 * spectrum.len());
    for (n, g) in spectrum {
        if *n == [0, 0, 0] {
            return Err(Error::InvalidInput("spectrum has content at p = 0".into()));
        }
        let probe = Mode::new(*n, Helicity::Zero, c(0.0));
        let eig = helicity_eigensystem(&probe.momentum(box_side, consts), consts)?;
        for a in Helicity::ALL {
            modes.push(Mode::new(*n, a, eig.vector(a).dotc(g) * inv_norm));
        }
    }
    FieldState::new(box_side, t0, modes)
}

/// `∫_box |G|² = L³ (2π s0)^{-3} Σ |A|²`.
pub fn energy_parseval(field: &FieldState, consts: &Constants) -> f64 {
    let sum: f64 = mode_spectrum(field, consts).iter().map(|(_, g)| g.norm_squared()).sum();
    field.box_side.powi(3) * sum
}

/// `∫_box (E² + B²)` by the trapezoid rule on an `n³` grid; exact once `n`
/// exceeds twice the largest lattice component.
pub fn energy_quadrature(field: &FieldState, t: f64, n: usize, consts: &Constants) -> f64 {
    let h = field.box_side / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = Vec3::new(i as f64, j as f64, k as f64) * h;
                sum += synthesize(field, &x, t, consts).g.norm_squared();
            }
        }
    }
    sum * h * h * h
}

/// `(1/2c) ∂_t(E² + B²)` and `∇·(B × E)` at `(x, t)`.
pub fn poynting_terms(field: &FieldState, x: &Vec3, t: f64, consts: &Constants) -> (f64, f64) {
    let jet = field_jet(field, x, t, consts);
    let (e, b) = (jet.e(), jet.b());
    let (e_t, b_t) = (jet.g_t.map(|z| z.re), jet.g_t.map(|z| z.im));
    let grad_e = jet.grad.map(|z| z.re);
    let grad_b = jet.grad.map(|z| z.im);
    let time = (e.dot(&e_t) + b.dot(&b_t)) / consts.c();
    // ∇·(B × E) = E·(∇×B) − B·(∇×E)
    let flux = e.dot(&curl(&grad_b)) - b.dot(&curl(&grad_e));
    (time, flux)
}

/// Local energy balance `(1/2c) ∂_t(E² + B²) + ∇·(E × B)` at `(x, t)`.
///
/// With `∂_t E = c ∇×B` and `∂_t B = −c ∇×E` the flux that closes the balance
/// is `E × B`; the opposite orientation leaves twice the time term behind.
pub fn poynting_residual(field: &FieldState, x: &Vec3, t: f64, consts: &Constants) -> f64 {
    let (time, flux) = poynting_terms(field, x, t, consts);
    time - flux
}

/// Magnitude of `|G|² |k|` used to make local energy residuals relative.
pub fn poynting_scale(field: &FieldState, consts: &Constants) -> f64 {
    let norm = normalization(consts);
    let amp: f64 = field.modes.iter().map(|m| m.amplitude.norm()).sum::<f64>() * norm;
    let k = field.modes.iter().map(|m| m.wavevector(field.box_side).norm()).fold(0.0, f64::max);
    amp * amp * k
}

/// Outcome of the energy checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub total: f64,
    pub quadrature: f64,
    pub pointwise_max: f64,
}

/// Energy by Parseval and by real-space quadrature, plus the largest local
/// conservation residual over `probes`.
pub fn energy_poynting(
    field: &FieldState,
    t: f64,
    probes: &[(Vec3, f64)],
    quadrature_n: usize,
    consts: &Constants,
) -> EnergyReport {
    if !field.is_transverse() {
        log::warn!("energy check on a field with longitudinal modes");
    }
    let pointwise_max = probes
        .iter()
        .map(|(x, s)| poynting_residual(field, x, *s, consts).abs())
        .fold(0.0, f64::max);
    EnergyReport {
        total: energy_parseval(field, consts),
        quadrature: energy_quadrature(field, t, quadrature_n, consts),
        pointwise_max,
    }
}

/// Rescales amplitudes so that `∫_box (E² + B²) = 1`.
pub fn normalize_probabilistic(field: &FieldState, consts: &Constants) -> Result<FieldState> {
    let energy = energy_parseval(field, consts);
    if !(energy > 0.0) {
        return Err(Error::ZeroField);
    }
    let scale = 1.0 / energy.sqrt();
    Ok(field.with_modes(field.modes.iter().map(|m| Mode { amplitude: m.amplitude * scale, ..*m }).collect()))
}

/// Exact evolution by `dt`: each amplitude picks up `e^{−i E^a dt / s0}`.
pub fn evolve(field: &FieldState, dt: f64, consts: &Constants) -> FieldState {
    let modes = field
        .modes
        .iter()
        .map(|m| {
            let e = match m.helicity {
                Helicity::Zero => 0.0,
                Helicity::Plus => consts.c() * m.momentum(field.box_side, consts).norm(),
                Helicity::Minus => -consts.c() * m.momentum(field.box_side, consts).norm(),
            };
            Mode { amplitude: m.amplitude * Complex64::from_polar(1.0, -e * dt / consts.s0()), ..*m }
        })
        .collect();
    FieldState { box_side: field.box_side, t0: field.t0 + dt, modes }
}

pub const FIELD_CSV_HEADER: &str = "t,x1,x2,x3,E1,E2,E3,B1,B2,B3";

pub fn write_field_csv<W: Write>(
    field: &FieldState,
    points: &[(Vec3, f64)],
    consts: &Constants,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{FIELD_CSV_HEADER}")?;
    for (x, t) in points {
        let s = synthesize(field, x, *t, consts);
        let cols: Vec<String> = [*t, x[0], x[1], x[2], s.e[0], s.e[1], s.e[2], s.b[0], s.b[1], s.b[2]]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect();
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ModeRecord {
    n: [i64; 3],
    a: String,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldRecord {
    #[serde(rename = "L")]
    box_side: f64,
    t0: f64,
    modes: Vec<ModeRecord>,
}

impl FieldState {
    pub fn to_json(&self) -> String {
        let record = FieldRecord {
            box_side: self.box_side,
            t0: self.t0,
            modes: self
                .modes
                .iter()
                .map(|m| ModeRecord { n: m.n, a: m.helicity.symbol().into(), re: m.amplitude.re, im: m.amplitude.im })
                .collect(),
        };
        serde_json::to_string_pretty(&record).expect("field serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: FieldRecord =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("mode file: {e}")))?;
        let modes = record
            .modes
            .iter()
            .map(|m| Ok(Mode::new(m.n, Helicity::parse(&m.a)?, Complex64::new(m.re, m.im))))
            .collect::<Result<Vec<_>>>()?;
        FieldState::new(record.box_side, record.t0, modes)
    }
}
