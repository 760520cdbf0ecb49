//! The acceptance criteria as named, tolerance-bearing checks grouped into suites.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use hllk_core::canonical::{
    angular_momentum_m, canonical_rhs, hamiltonian, integrate_canonical, integrate_lagrange,
    levi_civita, poisson_bracket_m, polar_angle_range, rate_matrix, structure_identities_residual, CanonicalState,
    EulerAngles, LagrangeState,
};
use hllk_core::galilean::{closed_form_trajectory, galilei_decomposition, integrate_eom, TrajectoryParams};
use hllk_core::maxwell::{
    basis_change, energy_parseval, energy_quadrature, evolve, helicity_eigensystem, hermitian_eigenvalues,
    maxwell_residual, poynting_residual, poynting_scale, v_dot_p, FieldState, Helicity, Mode,
};
use hllk_core::phase_flow::{
    degenerate_initial_point, flow_jacobian, flow_map, phase_velocity, residual_convergence, DegenerateFamily,
    GaussianData, JacobianReport, PhasePoint, PhaseVector,
};
use hllk_core::so3::{
    angular_momentum_matrices, build_grid, commutator_residual, delta_bracket, dispersion_check, emergent_constant,
    inner_product_so3, matrix_elements_m, AngularFunction, OperatorMatrix3, Ordering, OrderingForms, WignerD,
};
use hllk_core::{Constants, Vec3};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{summarize, Bound, Check, CriterionSummary, Informational, Report, ReportSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Trajectory,
    Canonical,
    Flow,
    So3,
    Maxwell,
    VerifyAll,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Trajectory => "trajectory",
            Suite::Canonical => "canonical",
            Suite::Flow => "flow",
            Suite::So3 => "so3",
            Suite::Maxwell => "maxwell",
            Suite::VerifyAll => "verify-all",
        }
    }

    pub fn criteria(self) -> Vec<u8> {
        CRITERIA.iter().filter(|c| self == Suite::VerifyAll || c.suite == self).map(|c| c.id).collect()
    }
}

pub struct CriterionDef {
    pub id: u8,
    pub name: &'static str,
    pub suite: Suite,
}

pub const CRITERIA: [CriterionDef; 15] = [
    CriterionDef { id: 1, name: "trajectory_equivalence", suite: Suite::Trajectory },
    CriterionDef { id: 2, name: "galilei_decomposition", suite: Suite::Trajectory },
    CriterionDef { id: 3, name: "structure_identities", suite: Suite::Canonical },
    CriterionDef { id: 4, name: "canonical_vs_lagrangian_flow", suite: Suite::Canonical },
    CriterionDef { id: 5, name: "poisson_brackets", suite: Suite::Canonical },
    CriterionDef { id: 6, name: "so3_quadrature", suite: Suite::So3 },
    CriterionDef { id: 7, name: "angular_momentum_matrices", suite: Suite::So3 },
    CriterionDef { id: 8, name: "operator_ordering", suite: Suite::So3 },
    CriterionDef { id: 9, name: "cartesian_basis_change", suite: Suite::Maxwell },
    CriterionDef { id: 10, name: "helicity_eigensystem", suite: Suite::Maxwell },
    CriterionDef { id: 11, name: "maxwell_recovery", suite: Suite::Maxwell },
    CriterionDef { id: 12, name: "energy_conservation", suite: Suite::Maxwell },
    CriterionDef { id: 13, name: "dispersion", suite: Suite::So3 },
    CriterionDef { id: 14, name: "flow_map_experiment", suite: Suite::Flow },
    CriterionDef { id: 15, name: "phase_space_equation", suite: Suite::Flow },
];

pub struct CheckDef {
    pub name: &'static str,
    pub criterion: u8,
    pub paper_ref: &'static str,
    pub tolerance: f64,
    pub bound: Bound,
}

const fn upper(name: &'static str, criterion: u8, paper_ref: &'static str, tolerance: f64) -> CheckDef {
    CheckDef { name, criterion, paper_ref, tolerance, bound: Bound::Upper }
}

const fn lower(name: &'static str, criterion: u8, paper_ref: &'static str, tolerance: f64) -> CheckDef {
    CheckDef { name, criterion, paper_ref, tolerance, bound: Bound::Lower }
}

pub const CHECKS: &[CheckDef] = &[
    upper("trajectory.rk4_vs_closed_form", 1, "helix closed form vs equation of motion", 1e-8),
    upper("galilei.decomposition_residual", 2, "helix as rotation + boost + translation", 1e-12),
    upper("structure.inverse_rate_curl", 3, "structure identity of the inverse rate matrix", 1e-10),
    upper("structure.rate_bracket", 3, "structure identity of the rate matrix", 1e-10),
    upper("canonical.trajectory_agreement", 4, "canonical vs Euler-Lagrange flow", 1e-8),
    upper("canonical.p_drift", 4, "conservation of p", 1e-10),
    upper("canonical.h_drift", 4, "conservation of H", 1e-10),
    upper("canonical.m_minus_d0v", 4, "angular momentum m = d0 v", 1e-10),
    upper("canonical.poisson_bracket_residual", 5, "Poisson brackets of m", 1e-12),
    upper("so3.volume_residual", 6, "SO(3) group volume", 1e-12),
    upper("so3.orthonormality", 6, "Wigner D orthonormality", 1e-12),
    upper("so3.m_vs_closed_form", 7, "l = 1 angular momentum matrices", 1e-10),
    upper("so3.commutators", 7, "angular momentum commutators", 1e-12),
    upper("so3.hermiticity_residual", 8, "Hermiticity with the adopted ordering", 1e-10),
    upper("so3.delta_bracket", 8, "divergence bracket identity", 1e-11),
    lower("so3.reversed_ordering_fraction", 8, "non-Hermiticity of the reversed ordering", 0.9),
    upper("maxwell.similarity", 9, "S = U^-1 M U", 1e-12),
    upper("maxwell.unitarity", 9, "unitarity of U", 1e-14),
    upper("maxwell.v_eigenvalues", 9, "spectrum {0, +-c} of V", 1e-12),
    upper("maxwell.eigenvector_phase_agreement", 10, "closed-form helicity eigenvectors", 1e-10),
    upper("maxwell.on_axis_eigen_relation", 10, "on-axis helicity eigenvectors", 1e-12),
    upper("maxwell.longitudinal_exact", 10, "longitudinal eigenvector p/|p|", 0.0),
    upper("maxwell.curl_residual", 11, "curl equations", 1e-12),
    upper("maxwell.divergence_residual", 11, "divergence conditions", 1e-12),
    upper("maxwell.longitudinal_curl_residual", 11, "curl equations for a longitudinal mode", 1e-12),
    lower("maxwell.longitudinal_divergence", 11, "longitudinal mode breaks transversality", 0.5),
    upper("maxwell.energy_drift", 12, "field energy under exact evolution", 1e-12),
    upper("maxwell.energy_quadrature_agreement", 12, "Parseval vs real-space energy", 1e-12),
    upper("maxwell.poynting_residual", 12, "local energy balance", 1e-10),
    upper("so3.dispersion_residual", 13, "dispersion c p = s0 omega", 0.0),
    upper("so3.c_rescaling_invariance", 13, "c = s0/d0 under common rescaling", 1e-15),
    upper("flow.generic_det", 14, "determinant of the flow functional matrix", 1e-4),
    upper("flow.degenerate_invariance", 14, "degenerate family v = r omega", 1e-8),
    upper("flow.convergence_order_deviation", 15, "phase-space wave equation residual order", 0.25),
];

pub fn check_def(name: &str) -> Option<&'static CheckDef> {
    CHECKS.iter().find(|c| c.name == name)
}

pub fn criterion_def(id: u8) -> &'static CriterionDef {
    CRITERIA.iter().find(|c| c.id == id).expect("criterion ids are 1..=15")
}

/// Checks and informational records produced by one criterion.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub informational: Vec<Informational>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Recorder<'a> {
    config: &'a RunConfig,
    criterion: u8,
    out: Outcome,
}

impl Recorder<'_> {
    fn record(&mut self, name: &str, value: f64) {
        let def = check_def(name).expect("check is declared");
        debug_assert_eq!(def.criterion, self.criterion);
        let tolerance = self.config.tolerance(name, def.tolerance);
        self.out.checks.push(Check {
            name: name.into(),
            criterion: def.criterion,
            paper_ref: def.paper_ref.into(),
            value: Some(value),
            tolerance,
            bound: def.bound,
            pass: def.bound.admits(value, tolerance),
            error: None,
        });
    }

    fn note(&mut self, name: &str, paper_ref: &str, data: impl Serialize) {
        self.out.informational.push(Informational {
            name: name.into(),
            criterion: self.criterion,
            paper_ref: paper_ref.into(),
            informational: true,
            data: serde_json::to_value(data).expect("informational data serializes"),
        });
    }

    /// Marks every check of the criterion that has no value yet as failed.
    fn fail_remaining(&mut self, err: &hllk_core::Error) {
        let done: BTreeSet<String> = self.out.checks.iter().map(|c| c.name.clone()).collect();
        for def in CHECKS.iter().filter(|d| d.criterion == self.criterion && !done.contains(d.name)) {
            self.out.checks.push(Check {
                name: def.name.into(),
                criterion: def.criterion,
                paper_ref: def.paper_ref.into(),
                value: None,
                tolerance: self.config.tolerance(def.name, def.tolerance),
                bound: def.bound,
                pass: false,
                error: Some(err.to_string()),
            });
        }
    }
}

/// Runs one acceptance criterion.
pub fn run_criterion(id: u8, config: &RunConfig) -> Outcome {
    let mut rec = Recorder { config, criterion: id, out: Outcome::default() };
    let mut rng = config.rng(id);
    let result = match id {
        1 => trajectory_equivalence(&mut rec, &mut rng),
        2 => decomposition(&mut rec, &mut rng),
        3 => structure(&mut rec, &mut rng),
        4 => canonical_vs_lagrangian(&mut rec, &mut rng),
        5 => poisson_brackets(&mut rec, &mut rng),
        6 => so3_quadrature(&mut rec),
        7 => angular_momentum(&mut rec),
        8 => operator_ordering(&mut rec, &mut rng),
        9 => cartesian_basis(&mut rec),
        10 => helicity(&mut rec, &mut rng),
        11 => maxwell_recovery(&mut rec, &mut rng),
        12 => energy_conservation(&mut rec, &mut rng),
        13 => dispersion(&mut rec, &mut rng),
        14 => flow_map_experiment(&mut rec, &mut rng),
        15 => phase_space_equation(&mut rec, &mut rng),
        other => panic!("no acceptance criterion {other}"),
    };
    if let Err(e) = result {
        rec.fail_remaining(&e);
    }
    rec.out
}

pub fn run_suite(suite: Suite, config: &RunConfig) -> Report {
    let start = Instant::now();
    let mut criteria = Vec::new();
    let mut checks = Vec::new();
    let mut informational = Vec::new();
    for id in suite.criteria() {
        let outcome = run_criterion(id, config);
        criteria.push(CriterionSummary {
            id,
            name: criterion_def(id).name.into(),
            checks: outcome.checks.len(),
            pass: outcome.passed(),
        });
        checks.extend(outcome.checks);
        informational.extend(outcome.informational);
    }
    let summary = summarize(&checks);
    Report {
        suite: suite.name().into(),
        seed: config.seed,
        rng: "ChaCha8Rng::seed_from_u64(seed), stream = criterion id".into(),
        settings: ReportSettings { grid: config.grid, box_side: config.box_side },
        criteria,
        checks,
        informational,
        summary,
        wall_time_s: config.timing.then(|| start.elapsed().as_secs_f64()),
    }
}

type Res = hllk_core::Result<()>;

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

fn random_alpha(rng: &mut ChaCha8Rng, min_sin: f64) -> EulerAngles {
    loop {
        let a = EulerAngles::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        if a.theta.sin() > min_sin {
            return a;
        }
    }
}

/// Orientation and angular velocity whose polar angle stays in `[0.4, π − 0.4]`.
fn safe_rotation(rng: &mut ChaCha8Rng) -> (EulerAngles, Vec3) {
    loop {
        let alpha = random_alpha(rng, 0.3);
        let omega = random_vec(rng, 1.0);
        let (lo, hi) = polar_angle_range(&alpha, &omega);
        if lo >= 0.4 && hi <= PI - 0.4 && omega.norm() >= 0.1 {
            return (alpha, omega);
        }
    }
}

fn trajectory_params(rng: &mut ChaCha8Rng, k: usize) -> hllk_core::Result<TrajectoryParams> {
    let x0 = random_vec(rng, 1.0);
    let mut v0 = random_vec(rng, 1.0);
    let mut omega = random_vec(rng, 1.5);
    match k {
        0 => v0 = omega.normalize() * 0.7,
        1 => omega = Vec3::zeros(),
        2 => omega = omega.normalize() * 1e-7,
        _ => {}
    }
    TrajectoryParams::new(x0, v0, omega)
}

fn trajectory_equivalence(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let grid: Vec<f64> = (1..=1000).map(|j| j as f64 * 0.01).collect();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let params = trajectory_params(rng, k)?;
        for s in integrate_eom(&params, &grid, 1e-3)?.samples {
            worst = worst.max((s.x - closed_form_trajectory(&params, s.t)).norm());
        }
    }
    rec.record("trajectory.rk4_vs_closed_form", worst);
    Ok(())
}

fn decomposition(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let params = trajectory_params(rng, 3)?;
        if params.omega.norm() < 0.1 {
            continue;
        }
        let t = rng.gen_range(0.0..10.0);
        let d = galilei_decomposition(&params, t)?;
        worst = worst.max((d.total() - closed_form_trajectory(&params, t)).norm());
        done += 1;
    }
    rec.record("galilei.decomposition_residual", worst);
    Ok(())
}

fn structure(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (a, b) = structure_identities_residual(&random_alpha(rng, 0.05))?;
        first = first.max(a);
        second = second.max(b);
    }
    rec.record("structure.inverse_rate_curl", first);
    rec.record("structure.rate_bracket", second);
    Ok(())
}

fn canonical_vs_lagrangian(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let consts = Constants::new(1.0, 2.0)?;
    let grid: Vec<f64> = (1..=100).map(|k| k as f64 * 0.1).collect();
    let (mut agree, mut p_drift, mut h_drift, mut m_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..3 {
        let (alpha, omega) = safe_rotation(rng);
        let x0 = random_vec(rng, 1.0);
        let v0 = random_vec(rng, 1.0);
        let state = CanonicalState::from_velocities(x0, alpha, &v0, &omega, &consts)?;
        let lag0 = LagrangeState { x: x0, x_dot: v0, alpha, alpha_dot: rate_matrix(&alpha) * omega };
        let h0 = hamiltonian(&state.alpha, &state.p, &state.pi, &consts);
        let can = integrate_canonical(&state, &grid, 1e-3, &consts)?;
        let lag = integrate_lagrange(&lag0, &grid, 1e-3)?;
        for (c, l) in can.iter().zip(&lag) {
            agree = agree.max((c.x - l.x).norm()).max((c.alpha.to_vector() - l.alpha.to_vector()).norm());
            p_drift = p_drift.max((c.p - state.p).norm());
            h_drift = h_drift.max((hamiltonian(&c.alpha, &c.p, &c.pi, &consts) - h0).abs());
            let v = canonical_rhs(c, &consts).x_dot;
            m_dev = m_dev.max((angular_momentum_m(&c.alpha, &c.pi) - v * consts.d0()).norm());
        }
    }
    rec.record("canonical.trajectory_agreement", agree);
    rec.record("canonical.p_drift", p_drift);
    rec.record("canonical.h_drift", h_drift);
    rec.record("canonical.m_minus_d0v", m_dev);
    Ok(())
}

fn poisson_brackets(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = random_alpha(rng, 0.05);
        let state = CanonicalState { x: random_vec(rng, 1.0), alpha, p: random_vec(rng, 1.0), pi: random_vec(rng, 2.0) };
        let m = angular_momentum_m(&alpha, &state.pi);
        for i in 0..3 {
            for k in 0..3 {
                let expected: f64 = (0..3).map(|l| levi_civita(i, k, l) * m[l]).sum();
                worst = worst.max((poisson_bracket_m(i, k, &state)? - expected).abs());
            }
        }
    }
    rec.record("canonical.poisson_bracket_residual", worst);
    Ok(())
}

fn so3_grid(rec: &Recorder) -> hllk_core::Result<hllk_core::so3::SO3Grid> {
    let [n1, n2, n3] = rec.config.grid;
    build_grid(n1, n2, n3)
}

fn so3_quadrature(rec: &mut Recorder) -> Res {
    let grid = so3_grid(rec)?;
    rec.record("so3.volume_residual", (grid.volume() - 8.0 * PI * PI).abs());
    let all = WignerD::all(2)?;
    let samples: Vec<_> = all.iter().map(|d| grid.sample(d)).collect();
    let mut worst = 0.0f64;
    for (a, da) in all.iter().enumerate() {
        for (b, db) in all.iter().enumerate() {
            let ip = inner_product_so3(&samples[a], &samples[b], &grid)? * (da.norm_factor() * db.norm_factor());
            let e = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((ip - e).norm());
        }
    }
    rec.record("so3.orthonormality", worst);
    Ok(())
}

fn max_abs(m: &OperatorMatrix3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn angular_momentum(rec: &mut Recorder) -> Res {
    let grid = so3_grid(rec)?;
    let s0 = Constants::default().s0();
    let closed = angular_momentum_matrices(s0);
    let mut quad = [OperatorMatrix3::zeros(); 3];
    let mut worst = 0.0f64;
    for i in 0..3 {
        quad[i] = matrix_elements_m(i, &grid, s0)?;
        worst = worst.max(max_abs(&(quad[i] - closed[i])));
    }
    rec.record("so3.m_vs_closed_form", worst);
    rec.record("so3.commutators", commutator_residual(&quad, s0));
    Ok(())
}

fn operator_ordering(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let grid = so3_grid(rec)?;
    let consts = Constants::default();
    let basis = WignerD::all(2)?;
    let refs: Vec<&dyn AngularFunction> = basis.iter().map(|d| d as &dyn AngularFunction).collect();
    let forms = OrderingForms::new(&refs, &grid, &consts)?;
    let coefficients = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..forms.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    };
    let trials = 100;
    let (mut standard, mut nonzero) = (0.0f64, 0usize);
    for _ in 0..trials {
        let f = coefficients(rng);
        let g = coefficients(rng);
        let k = random_vec(rng, 1.0);
        standard = standard.max(forms.residual(&f, &g, &k, Ordering::Standard)?.norm());
        let reversed = forms.residual(&f, &g, &k, Ordering::Reversed)?.norm();
        if reversed >= 1e-3 * forms.norm(&f)? * forms.norm(&g)? {
            nonzero += 1;
        }
    }
    let mut bracket = 0.0f64;
    for _ in 0..1000 {
        let alpha = random_alpha(rng, 0.05);
        for k in 0..3 {
            bracket = bracket.max(delta_bracket(&alpha, k)?.abs());
        }
    }
    rec.record("so3.hermiticity_residual", standard);
    rec.record("so3.delta_bracket", bracket);
    rec.record("so3.reversed_ordering_fraction", nonzero as f64 / trials as f64);
    Ok(())
}

fn cartesian_basis(rec: &mut Recorder) -> Res {
    let (mut sim, mut unit, mut eig) = (0.0f64, 0.0f64, 0.0f64);
    for consts in [Constants::default(), Constants::new(2.5, 0.5)?] {
        let bc = basis_change(&consts);
        sim = sim.max(bc.similarity_residual / consts.s0());
        unit = unit.max(bc.unitarity_residual);
        let c = consts.c();
        for v in &bc.v {
            let e = hermitian_eigenvalues(v);
            eig = eig.max(((e[0] + c).abs().max(e[1].abs()).max((e[2] - c).abs())) / c);
        }
    }
    rec.record("maxwell.similarity", sim);
    rec.record("maxwell.unitarity", unit);
    rec.record("maxwell.v_eigenvalues", eig);
    Ok(())
}

/// `V·p` assembled entrywise, independently of the closed-form eigenvectors.
fn v_dot_p_matrix(p: &Vec3, consts: &Constants) -> OperatorMatrix3 {
    let v = basis_change(consts).v;
    v[0] * Complex64::from(p[0]) + v[1] * Complex64::from(p[1]) + v[2] * Complex64::from(p[2])
}

fn helicity(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let consts = Constants::default();
    let mut phase = 0.0f64;
    let mut longitudinal = 0.0f64;
    for _ in 0..500 {
        let p = random_vec(rng, 3.0);
        let numeric = v_dot_p_matrix(&p, &consts).symmetric_eigen();
        let eig = helicity_eigensystem(&p, &consts)?;
        for a in Helicity::ALL {
            let idx = (0..3)
                .min_by(|&x, &y| {
                    let dx = (numeric.eigenvalues[x] - eig.energy(a)).abs();
                    let dy = (numeric.eigenvalues[y] - eig.energy(a)).abs();
                    dx.total_cmp(&dy)
                })
                .expect("three eigenvalues");
            let u_num = numeric.eigenvectors.column(idx).into_owned();
            let overlap = u_num.dotc(eig.vector(a));
            let aligned = u_num * (overlap / overlap.norm());
            phase = phase
                .max((aligned - eig.vector(a)).norm())
                .max((numeric.eigenvalues[idx] - eig.energy(a)).abs() / (1.0 + p.norm()));
        }
        longitudinal = longitudinal.max((eig.vector(Helicity::Zero) - (p / p.norm()).map(Complex64::from)).norm());
    }
    let mut on_axis = 0.0f64;
    for p in [
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(0.0, 0.0, -2.5),
        Vec3::new(1e-14, -1e-14, 0.7),
        Vec3::new(0.0, 1e-13, -3.0),
    ] {
        let eig = helicity_eigensystem(&p, &consts)?;
        for a in Helicity::ALL {
            let u = eig.vector(a);
            on_axis = on_axis.max((v_dot_p(&p, u, &consts) - u * Complex64::from(eig.energy(a))).norm());
        }
    }
    rec.record("maxwell.eigenvector_phase_agreement", phase);
    rec.record("maxwell.on_axis_eigen_relation", on_axis);
    rec.record("maxwell.longitudinal_exact", longitudinal);
    Ok(())
}

/// A random superposition of `count` distinct modes with `|n_i| ≤ 3`.
pub fn random_field(
    rng: &mut ChaCha8Rng,
    box_side: f64,
    count: usize,
    helicities: &[Helicity],
) -> hllk_core::Result<FieldState> {
    let mut keys = BTreeSet::new();
    let mut modes = Vec::with_capacity(count);
    while modes.len() < count {
        let n = [rng.gen_range(-3..=3), rng.gen_range(-3..=3), rng.gen_range(-3..=3)];
        let a = helicities[rng.gen_range(0..helicities.len())];
        if n == [0, 0, 0] || !keys.insert((n, a)) {
            continue;
        }
        modes.push(Mode::new(n, a, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    }
    FieldState::new(box_side, 0.0, modes)
}

/// The 50-mode transverse field used by the field checks.
pub fn reference_field(config: &RunConfig) -> hllk_core::Result<FieldState> {
    random_field(&mut config.rng(11), config.box_side, 50, &[Helicity::Plus, Helicity::Minus])
}

fn probe(rng: &mut ChaCha8Rng, box_side: f64) -> (Vec3, f64) {
    (Vec3::from_fn(|_, _| rng.gen_range(0.0..box_side)), rng.gen_range(-5.0..5.0))
}

fn maxwell_recovery(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let consts = Constants::default();
    let l = rec.config.box_side;
    let field = random_field(rng, l, 50, &[Helicity::Plus, Helicity::Minus])?;
    let (mut curl, mut div) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (x, t) = probe(rng, l);
        let r = maxwell_residual(&field, &x, t, &consts);
        curl = curl.max(r.curl_max());
        div = div.max(r.div_max());
    }
    rec.record("maxwell.curl_residual", curl);
    rec.record("maxwell.divergence_residual", div);

    let mode = Mode::new([1, -2, 1], Helicity::Zero, Complex64::new(0.8, -0.6));
    let longitudinal = FieldState::new(l, 0.0, vec![mode])?;
    let scale = mode.wavevector(l).norm() * mode.amplitude.norm() * (2.0 * PI * consts.s0()).powf(-1.5);
    let (mut curl, mut div) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (x, t) = probe(rng, l);
        let r = maxwell_residual(&longitudinal, &x, t, &consts);
        curl = curl.max(r.curl_max());
        div = div.max(r.div_e.hypot(r.div_b) / scale);
    }
    rec.record("maxwell.longitudinal_curl_residual", curl);
    rec.record("maxwell.longitudinal_divergence", div);
    Ok(())
}

fn energy_conservation(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let consts = Constants::default();
    let l = rec.config.box_side;
    let mut field = random_field(rng, l, 20, &[Helicity::Plus, Helicity::Minus])?;
    let u0 = energy_parseval(&field, &consts);
    let mut drift = 0.0f64;
    for _ in 0..1000 {
        field = evolve(&field, 0.01, &consts);
        drift = drift.max((energy_parseval(&field, &consts) - u0).abs() / u0);
    }
    // |n_i| ≤ 3, so an 8-point trapezoid rule per axis is exact.
    let quadrature = energy_quadrature(&field, field.t0(), 8, &consts);
    rec.record("maxwell.energy_drift", drift);
    rec.record("maxwell.energy_quadrature_agreement", (quadrature - u0).abs() / u0);

    let n = [1, 1, 2];
    let standing = FieldState::new(
        l,
        0.0,
        vec![
            Mode::new(n, Helicity::Plus, Complex64::new(1.0, 0.0)),
            Mode::new(n.map(|c| -c), Helicity::Plus, Complex64::new(1.0, 0.0)),
        ],
    )?;
    let scale = poynting_scale(&standing, &consts);
    let mut local = 0.0f64;
    for _ in 0..100 {
        let (x, t) = probe(rng, l);
        local = local.max(poynting_residual(&standing, &x, t, &consts).abs() / scale);
    }
    rec.record("maxwell.poynting_residual", local);
    Ok(())
}

fn dispersion(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let consts = Constants::default();
    let field = random_field(rng, rec.config.box_side, 50, &[Helicity::Plus, Helicity::Minus])?;
    let mut residual = 0.0f64;
    for m in field.modes() {
        let p = m.momentum(field.box_side(), &consts).norm();
        let omega = m.angular_frequency(field.box_side(), &consts);
        residual = residual.max(dispersion_check(p, omega, &consts).residual.abs());
    }
    rec.record("so3.dispersion_residual", residual);

    let mut invariance = 0.0f64;
    for (s0, d0) in [(1.0, 1.0), (1.3, 0.7), (1.054_571_817e-27, 3.517_672_726e-38)] {
        let base = emergent_constant(s0, d0)?.c();
        for lambda in [0.125, 2.0, 1024.0, 3.0, 0.1, 37.0, 1e3] {
            let scaled = emergent_constant(s0 * lambda, d0 * lambda)?.c();
            invariance = invariance.max((scaled - base).abs() / base);
        }
    }
    rec.record("so3.c_rescaling_invariance", invariance);
    Ok(())
}

fn sample_point(rng: &mut ChaCha8Rng) -> PhasePoint {
    let (alpha, omega) = safe_rotation(rng);
    PhasePoint::new(random_vec(rng, 1.0), omega, alpha, random_vec(rng, 1.0))
}

#[derive(Serialize)]
struct JacobianExperiment {
    generic: Vec<JacobianReport>,
    degenerate: Vec<JacobianReport>,
}

fn flow_map_experiment(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let (t, dt, h_fd) = (2.0, 1e-3, 1e-5);
    let mut generic = Vec::new();
    let mut det = 0.0f64;
    for _ in 0..3 {
        let jac = flow_jacobian(&sample_point(rng), t, dt, h_fd)?;
        det = det.max((jac.det - 1.0).abs());
        generic.push(JacobianReport::new(t, &jac, true));
    }
    rec.record("flow.generic_det", det);

    let mut invariance = 0.0f64;
    let mut degenerate = Vec::new();
    for _ in 0..5 {
        let y = sample_point(rng);
        let fam = DegenerateFamily { alpha0: y.alpha(), omega0: y.omega(), r: rng.gen_range(-2.0..2.0), u0: y.u() };
        let y0 = degenerate_initial_point(&fam)?;
        invariance = invariance.max((phase_velocity(&y0) - fam.omega0 * fam.r).norm());
        for k in 1..=10 {
            let yt = flow_map(&y0, 0.5 * k as f64, dt)?;
            invariance = invariance.max((phase_velocity(&yt) - yt.omega() * fam.r).norm());
        }
        if degenerate.is_empty() {
            degenerate.push(JacobianReport::new(t, &flow_jacobian(&y0, t, dt, h_fd)?, false));
        }
    }
    rec.record("flow.degenerate_invariance", invariance);
    rec.note(
        "flow.jacobian_experiment",
        "flow functional matrix on generic and degenerate initial data",
        JacobianExperiment { generic, degenerate },
    );
    Ok(())
}

fn phase_space_equation(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Res {
    let centers: Vec<PhasePoint> = (0..2).map(|_| sample_point(rng)).collect();
    let wave = PhaseVector::from_fn(|i, _| 0.3 + 0.1 * i as f64);
    let data = GaussianData { center: centers[0].0, width: 1.5, wave };
    let r = residual_convergence(&centers, &data, 0.1, 0.1, 1.0, 200, &Constants::default())?;
    rec.record("flow.convergence_order_deviation", (r.order - 2.0).abs());
    rec.note("flow.convergence", "phase-space wave equation residual at (h, dt) and (h/2, dt/2)", r);
    Ok(())
}
