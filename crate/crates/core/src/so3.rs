//! Functions on SO(3) in Euler angles: quadrature, low-order Wigner
//! functions, the angular-momentum operators `m̂_k = (s0/i) A_{ik} ∂_i` and
//! their l = 1 matrix elements.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use serde::Serialize;

use crate::canonical::{levi_civita, rate_matrix, rate_matrix_derivatives, EulerAngles};
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::galilean::Vec3;

pub type OperatorMatrix3 = Matrix3<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Product quadrature for `∫ dα₁ dα₂ dα₃ sin α₁`: Gauss–Legendre in
/// `cos α₁`, periodic trapezoid in `α₂` and `α₃`.
#[derive(Debug, Clone, PartialEq)]
pub struct SO3Grid {
    pub shape: (usize, usize, usize),
    pub nodes: Vec<EulerAngles>,
    pub weights: Vec<f64>,
}

pub fn build_grid(n1: usize, n2: usize, n3: usize) -> Result<SO3Grid> {
    if n1 < 2 || n2 < 2 || n3 < 2 {
        return Err(Error::InvalidInput(format!("grid needs at least 2 nodes per axis, got ({n1}, {n2}, {n3})")));
    }
    let gl = GaussLegendre::new(n1).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (h2, h3) = (2.0 * PI / n2 as f64, 2.0 * PI / n3 as f64);
    let mut nodes = Vec::with_capacity(n1 * n2 * n3);
    let mut weights = Vec::with_capacity(n1 * n2 * n3);
    for &(z, wz) in gl.as_node_weight_pairs() {
        let theta = z.acos();
        for j in 0..n2 {
            for k in 0..n3 {
                nodes.push(EulerAngles::new(theta, j as f64 * h2, k as f64 * h3));
                weights.push(wz * h2 * h3);
            }
        }
    }
    Ok(SO3Grid { shape: (n1, n2, n3), nodes, weights })
}

impl SO3Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn volume(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    pub fn sample(&self, f: &dyn AngularFunction) -> Vec<Complex64> {
        self.nodes.iter().map(|a| f.value(a)).collect()
    }

    pub fn sample_with(&self, f: impl Fn(&EulerAngles) -> Complex64) -> Vec<Complex64> {
        self.nodes.iter().map(f).collect()
    }
}

/// `Σ w conj(f) g`.
pub fn inner_product_so3(f: &[Complex64], g: &[Complex64], grid: &SO3Grid) -> Result<Complex64> {
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "samples of length {} and {} on a grid of {} nodes",
            f.len(),
            g.len(),
            grid.len()
        )));
    }
    let terms = || f.iter().zip(g).zip(&grid.weights).map(|((a, b), w)| a.conj() * b * *w);
    Ok(Complex64::new(neumaier_sum(terms().map(|c| c.re)), neumaier_sum(terms().map(|c| c.im))))
}

/// Compensated summation; plain summation over ~10⁴ nodes loses about 1e-12.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// A complex function of the Euler angles with analytic derivatives.
pub trait AngularFunction {
    fn value(&self, alpha: &EulerAngles) -> Complex64;
    fn gradient(&self, alpha: &EulerAngles) -> [Complex64; 3];
    fn hessian(&self, alpha: &EulerAngles) -> [[Complex64; 3]; 3];
}

/// Rejects functions that are not 2π-periodic in `α₂` and `α₃`.
pub fn check_periodic(f: &dyn AngularFunction) -> Result<()> {
    const PROBES: [(f64, f64, f64); 3] = [(0.4, 0.3, 1.7), (1.3, 2.9, 0.2), (2.6, 5.1, 4.4)];
    for (t, p, s) in PROBES {
        let base = f.value(&EulerAngles::new(t, p, s));
        for shifted in [EulerAngles::new(t, p + 2.0 * PI, s), EulerAngles::new(t, p, s + 2.0 * PI)] {
            if (f.value(&shifted) - base).norm() > 1e-10 * (1.0 + base.norm()) {
                return Err(Error::InvalidInput("function is not 2π-periodic in the Euler angles".into()));
            }
        }
    }
    Ok(())
}

/// `c^a s^b` with `c = cos(β/2)`, `s = sin(β/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HalfAngleTerm {
    coef: f64,
    a: i32,
    b: i32,
}

fn differentiate(terms: &[HalfAngleTerm]) -> Vec<HalfAngleTerm> {
    let mut out = Vec::with_capacity(2 * terms.len());
    for t in terms {
        if t.a > 0 {
            out.push(HalfAngleTerm { coef: -0.5 * t.coef * t.a as f64, a: t.a - 1, b: t.b + 1 });
        }
        if t.b > 0 {
            out.push(HalfAngleTerm { coef: 0.5 * t.coef * t.b as f64, a: t.a + 1, b: t.b - 1 });
        }
    }
    out
}

fn evaluate(terms: &[HalfAngleTerm], beta: f64) -> f64 {
    let (s, c) = (0.5 * beta).sin_cos();
    terms.iter().map(|t| t.coef * c.powi(t.a) * s.powi(t.b)).sum()
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `D^l_{mn}(α) = e^{imα₂} d^l_{mn}(α₁) e^{inα₃}` for `l ≤ 2`, with the
/// Wigner small-d function written as a sum of half-angle monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerD {
    pub l: i32,
    pub m: i32,
    pub n: i32,
    d: [Vec<HalfAngleTerm>; 3],
}

impl WignerD {
    pub fn new(l: i32, m: i32, n: i32) -> Result<Self> {
        if !(0..=2).contains(&l) || m.abs() > l || n.abs() > l {
            return Err(Error::InvalidInput(format!("unsupported Wigner function ({l}, {m}, {n})")));
        }
        let norm = (factorial(l + m) * factorial(l - m) * factorial(l + n) * factorial(l - n)).sqrt();
        let mut terms = Vec::new();
        for s in 0..=2 * l {
            let dens = [l + n - s, s, m - n + s, l - m - s];
            if dens.iter().any(|&d| d < 0) {
                continue;
            }
            let sign = if (m - n + s) % 2 == 0 { 1.0 } else { -1.0 };
            let coef = sign * norm / dens.iter().map(|&d| factorial(d)).product::<f64>();
            terms.push(HalfAngleTerm { coef, a: 2 * l + n - m - 2 * s, b: m - n + 2 * s });
        }
        let d1 = differentiate(&terms);
        let d2 = differentiate(&d1);
        Ok(Self { l, m, n, d: [terms, d1, d2] })
    }

    /// Every `D^l_{mn}` with `l ≤ lmax ≤ 2`.
    pub fn all(lmax: i32) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for l in 0..=lmax {
            for m in -l..=l {
                for n in -l..=l {
                    out.push(Self::new(l, m, n)?);
                }
            }
        }
        Ok(out)
    }

    /// Small-d function and its first two derivatives at `β`.
    pub fn small_d(&self, beta: f64) -> [f64; 3] {
        [evaluate(&self.d[0], beta), evaluate(&self.d[1], beta), evaluate(&self.d[2], beta)]
    }

    fn phase(&self, alpha: &EulerAngles) -> Complex64 {
        Complex64::from_polar(1.0, self.m as f64 * alpha.phi + self.n as f64 * alpha.psi)
    }

    /// Normalization making `(D, D)_R = 1`.
    pub fn norm_factor(&self) -> f64 {
        ((2 * self.l + 1) as f64 / (8.0 * PI * PI)).sqrt()
    }
}

impl AngularFunction for WignerD {
    fn value(&self, alpha: &EulerAngles) -> Complex64 {
        self.phase(alpha) * evaluate(&self.d[0], alpha.theta)
    }

    fn gradient(&self, alpha: &EulerAngles) -> [Complex64; 3] {
        let e = self.phase(alpha);
        let [d0, d1, _] = self.small_d(alpha.theta);
        [e * d1, I * self.m as f64 * e * d0, I * self.n as f64 * e * d0]
    }

    fn hessian(&self, alpha: &EulerAngles) -> [[Complex64; 3]; 3] {
        let e = self.phase(alpha);
        let [d0, d1, d2] = self.small_d(alpha.theta);
        let (m, n) = (self.m as f64, self.n as f64);
        let tp = I * m * e * d1;
        let ts = I * n * e * d1;
        let ps = -m * n * e * d0;
        [[e * d2, tp, ts], [tp, -m * m * e * d0, ps], [ts, ps, -n * n * e * d0]]
    }
}

/// A finite linear combination of angular functions.
pub struct Combination<F> {
    pub terms: Vec<(Complex64, F)>,
}

impl<F: AngularFunction> AngularFunction for Combination<F> {
    fn value(&self, alpha: &EulerAngles) -> Complex64 {
        self.terms.iter().map(|(c, f)| c * f.value(alpha)).sum()
    }

    fn gradient(&self, alpha: &EulerAngles) -> [Complex64; 3] {
        let mut g = [Complex64::new(0.0, 0.0); 3];
        for (c, f) in &self.terms {
            for (gi, fi) in g.iter_mut().zip(f.gradient(alpha)) {
                *gi += c * fi;
            }
        }
        g
    }

    fn hessian(&self, alpha: &EulerAngles) -> [[Complex64; 3]; 3] {
        let mut h = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (c, f) in &self.terms {
            let fh = f.hessian(alpha);
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += c * fh[i][j];
                }
            }
        }
        h
    }
}

/// The orthonormal l = 1, n = 0 functions in order `a = −1, 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WignerL1Basis {
    pub a: i32,
}

impl WignerL1Basis {
    pub fn all() -> [Self; 3] {
        [Self { a: -1 }, Self { a: 0 }, Self { a: 1 }]
    }
}

fn l1_side() -> f64 {
    3f64.sqrt() / (4.0 * PI)
}

fn l1_mid() -> f64 {
    3f64.sqrt() / (2.0 * PI * 2f64.sqrt())
}

impl AngularFunction for WignerL1Basis {
    fn value(&self, alpha: &EulerAngles) -> Complex64 {
        match self.a {
            0 => Complex64::from(l1_mid() * alpha.theta.cos()),
            a => I * l1_side() * Complex64::from_polar(1.0, a as f64 * alpha.phi) * alpha.theta.sin(),
        }
    }

    fn gradient(&self, alpha: &EulerAngles) -> [Complex64; 3] {
        let zero = Complex64::new(0.0, 0.0);
        match self.a {
            0 => [Complex64::from(-l1_mid() * alpha.theta.sin()), zero, zero],
            a => {
                let e = I * l1_side() * Complex64::from_polar(1.0, a as f64 * alpha.phi);
                [e * alpha.theta.cos(), I * a as f64 * e * alpha.theta.sin(), zero]
            }
        }
    }

    fn hessian(&self, alpha: &EulerAngles) -> [[Complex64; 3]; 3] {
        let zero = Complex64::new(0.0, 0.0);
        match self.a {
            0 => [[Complex64::from(-l1_mid() * alpha.theta.cos()), zero, zero], [zero; 3], [zero; 3]],
            a => {
                let a = a as f64;
                let e = I * l1_side() * Complex64::from_polar(1.0, a * alpha.phi);
                let (s, c) = alpha.theta.sin_cos();
                let tp = I * a * e * c;
                [[-e * s, tp, zero], [tp, -a * a * e * s, zero], [zero; 3]]
            }
        }
    }
}

fn check_index(k: usize) -> Result<()> {
    if k > 2 {
        return Err(Error::InvalidInput(format!("component index must be < 3, got {k}")));
    }
    Ok(())
}

/// `(m̂_k f)(α) = (s0/i) A_{ik}(α) ∂f/∂α_i`.
pub fn m_hat_apply(k: usize, f: &dyn AngularFunction, alpha: &EulerAngles, s0: f64) -> Result<Complex64> {
    check_index(k)?;
    alpha.check_regular()?;
    let a = rate_matrix(alpha);
    let g = f.gradient(alpha);
    Ok(-I * s0 * (0..3).map(|i| a[(i, k)] * g[i]).sum::<Complex64>())
}

/// `(m̂_i m̂_k f)(α)`, using the analytic Hessian of `f`.
pub fn m_hat_pair_apply(i: usize, k: usize, f: &dyn AngularFunction, alpha: &EulerAngles, s0: f64) -> Result<Complex64> {
    check_index(i)?;
    check_index(k)?;
    alpha.check_regular()?;
    let a = rate_matrix(alpha);
    let da = rate_matrix_derivatives(alpha);
    let g = f.gradient(alpha);
    let h = f.hessian(alpha);
    // ∂_r (A_{jk} ∂_j f) = (∂_r A_{jk}) ∂_j f + A_{jk} ∂_r ∂_j f
    let inner = |r: usize| -> Complex64 { (0..3).map(|j| da[r][(j, k)] * g[j] + a[(j, k)] * h[r][j]).sum() };
    Ok(-(s0 * s0) * (0..3).map(|r| a[(r, i)] * inner(r)).sum::<Complex64>())
}

/// `M^i_{ab} = (D_a, m̂_i D_b)_R` by quadrature.
pub fn matrix_elements_m(i: usize, grid: &SO3Grid, s0: f64) -> Result<OperatorMatrix3> {
    check_index(i)?;
    let basis = WignerL1Basis::all();
    let samples: Vec<Vec<Complex64>> = basis.iter().map(|d| grid.sample(d)).collect();
    let mut m = OperatorMatrix3::zeros();
    for (b, db) in basis.iter().enumerate() {
        let applied = grid
            .nodes
            .iter()
            .map(|alpha| m_hat_apply(i, db, alpha, s0))
            .collect::<Result<Vec<_>>>()?;
        for a in 0..3 {
            m[(a, b)] = inner_product_so3(&samples[a], &applied, grid)?;
        }
    }
    Ok(m)
}

/// Closed-form l = 1 matrices in basis order `a = −1, 0, 1`.
pub fn angular_momentum_matrices(s0: f64) -> [OperatorMatrix3; 3] {
    let r = s0 / 2f64.sqrt();
    let (z, one) = (Complex64::new(0.0, 0.0), Complex64::new(r, 0.0));
    let ii = I * r;
    [
        OperatorMatrix3::new(z, one, z, one, z, one, z, one, z),
        OperatorMatrix3::new(z, ii, z, -ii, z, ii, z, -ii, z),
        OperatorMatrix3::from_diagonal(&nalgebra::Vector3::new(-s0, 0.0, s0).map(Complex64::from)),
    ]
}

/// `max_{i,k} max|[M^i, M^k] + (s0/i) ε_{ikl} M^l|`.
pub fn commutator_residual(m: &[OperatorMatrix3; 3], s0: f64) -> f64 {
    let s_over_i = -I * s0;
    let mut worst = 0.0f64;
    for i in 0..3 {
        for k in 0..3 {
            let mut r = m[i] * m[k] - m[k] * m[i];
            for (l, ml) in m.iter().enumerate() {
                r += ml * (s_over_i * levi_civita(i, k, l));
            }
            worst = worst.max(r.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// Operator ordering inside the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    /// `A_{lk}` to the left of `∂_l`.
    Standard,
    /// `∂_l` to the left, acting on `A_{lk}` as well.
    Reversed,
}

/// `Σ_k k_k B_k f` with `B_k = (s0/i) A_{lk} ∂_l` or its reversed ordering.
fn b_apply(f: &dyn AngularFunction, k: &Vec3, alpha: &EulerAngles, s0: f64, ordering: Ordering) -> Complex64 {
    let a = rate_matrix(alpha);
    let g = f.gradient(alpha);
    let mut out = Complex64::new(0.0, 0.0);
    for kk in 0..3 {
        out += k[kk] * (0..3).map(|l| a[(l, kk)] * g[l]).sum::<Complex64>();
    }
    if ordering == Ordering::Reversed {
        let da = rate_matrix_derivatives(alpha);
        let div: f64 = (0..3).map(|kk| k[kk] * (0..3).map(|l| da[l][(l, kk)]).sum::<f64>()).sum();
        out += div * f.value(alpha);
    }
    -I * s0 * out
}

/// `(s0/d0) [(f, B g)_R − (B f, g)_R]` with the spatial plane wave `e^{ik·x}`
/// factored out; vanishes for the standard ordering.
pub fn hermiticity_residual(
    f: &dyn AngularFunction,
    g: &dyn AngularFunction,
    k: &Vec3,
    grid: &SO3Grid,
    ordering: Ordering,
    consts: &Constants,
) -> Result<Complex64> {
    check_periodic(f)?;
    check_periodic(g)?;
    let s0 = consts.s0();
    let fs = grid.sample(f);
    let gs = grid.sample(g);
    let bf = grid.sample_with(|a| b_apply(f, k, a, s0, ordering));
    let bg = grid.sample_with(|a| b_apply(g, k, a, s0, ordering));
    Ok((inner_product_so3(&fs, &bg, grid)? - inner_product_so3(&bf, &gs, grid)?) * (s0 / consts.d0()))
}

/// Quadrature matrices `(D_s, B_k D_t)_R` of a fixed set of angular functions
/// for both orderings, so that the ordering residual of any two combinations
/// `f = Σ f_s D_s`, `g = Σ g_t D_t` is the bilinear form `f† (H − H†) g`.
#[derive(Debug, Clone)]
pub struct OrderingForms {
    consts: Constants,
    gram: DMatrix<Complex64>,
    forms: [[DMatrix<Complex64>; 3]; 2],
}

impl OrderingForms {
    pub fn new(basis: &[&dyn AngularFunction], grid: &SO3Grid, consts: &Constants) -> Result<Self> {
        for f in basis {
            check_periodic(*f)?;
        }
        let n = basis.len();
        let samples: Vec<Vec<Complex64>> = basis.iter().map(|f| grid.sample(*f)).collect();
        let gram_matrix = |applied: &[Vec<Complex64>]| -> Result<DMatrix<Complex64>> {
            let mut m = DMatrix::zeros(n, n);
            for s in 0..n {
                for t in 0..n {
                    m[(s, t)] = inner_product_so3(&samples[s], &applied[t], grid)?;
                }
            }
            Ok(m)
        };
        let gram = gram_matrix(&samples)?;
        let mut forms = [0, 1].map(|_| [0, 1, 2].map(|_| DMatrix::zeros(n, n)));
        for (o, ordering) in [Ordering::Standard, Ordering::Reversed].into_iter().enumerate() {
            for k in 0..3 {
                let e = Vec3::ith(k, 1.0);
                let applied: Vec<Vec<Complex64>> = basis
                    .iter()
                    .map(|f| grid.sample_with(|a| b_apply(*f, &e, a, consts.s0(), ordering)))
                    .collect();
                forms[o][k] = gram_matrix(&applied)?;
            }
        }
        Ok(Self { consts: *consts, gram, forms })
    }

    pub fn len(&self) -> usize {
        self.gram.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_len(&self, c: &[Complex64]) -> Result<()> {
        if c.len() != self.len() {
            return Err(Error::InvalidInput(format!("{} coefficients for a basis of {}", c.len(), self.len())));
        }
        Ok(())
    }

    /// `‖f‖_R` of the combination with coefficients `f`.
    pub fn norm(&self, f: &[Complex64]) -> Result<f64> {
        self.check_len(f)?;
        let f = DVector::from_column_slice(f);
        Ok(f.dotc(&(&self.gram * &f)).re.max(0.0).sqrt())
    }

    /// Same quantity as [`hermiticity_residual`] for the combinations `f`, `g`.
    pub fn residual(&self, f: &[Complex64], g: &[Complex64], k: &Vec3, ordering: Ordering) -> Result<Complex64> {
        self.check_len(f)?;
        self.check_len(g)?;
        let o = match ordering {
            Ordering::Standard => 0,
            Ordering::Reversed => 1,
        };
        let h = &self.forms[o][0] * Complex64::from(k[0])
            + &self.forms[o][1] * Complex64::from(k[1])
            + &self.forms[o][2] * Complex64::from(k[2]);
        let f = DVector::from_column_slice(f);
        let g = DVector::from_column_slice(g);
        let r = f.dotc(&(&h * &g)) - f.dotc(&(h.adjoint() * &g));
        Ok(r * (self.consts.s0() / self.consts.d0()))
    }
}

/// `∂A_{lk}/∂α_l + cot α₁ A_{1k}`; identically zero.
pub fn delta_bracket(alpha: &EulerAngles, k: usize) -> Result<f64> {
    check_index(k)?;
    alpha.check_regular()?;
    let a = rate_matrix(alpha);
    let da = rate_matrix_derivatives(alpha);
    let div: f64 = (0..3).map(|l| da[l][(l, k)]).sum();
    Ok(div + alpha.theta.cos() / alpha.theta.sin() * a[(0, k)])
}

/// `c = s0 / d0` packaged as [`Constants`].
pub fn emergent_constant(s0: f64, d0: f64) -> Result<Constants> {
    Constants::new(s0, d0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dispersion {
    /// `c p − s0 ω`.
    pub residual: f64,
    /// `2π s0 / p`.
    pub wavelength: f64,
}

pub fn dispersion_check(p: f64, omega: f64, consts: &Constants) -> Dispersion {
    Dispersion { residual: consts.c() * p - consts.s0() * omega, wavelength: 2.0 * PI * consts.s0() / p }
}

/// Summary of the SO(3) checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct So3Report {
    pub volume_residual: f64,
    pub orthonormality_max: f64,
    #[serde(rename = "M_vs_closed_form_max")]
    pub m_vs_closed_form_max: f64,
    pub commutator_max: f64,
    pub hermiticity_standard_max: f64,
    pub hermiticity_reversed_min: f64,
    pub delta_bracket_max: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::SINGULARITY_GUARD;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &OperatorMatrix3) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn random_alpha(rng: &mut ChaCha8Rng) -> EulerAngles {
        EulerAngles::new(rng.gen_range(0.2..PI - 0.2), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI))
    }

    fn random_combination(rng: &mut ChaCha8Rng) -> Combination<WignerD> {
        let terms = WignerD::all(2)
            .unwrap()
            .into_iter()
            .map(|d| (Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), d))
            .collect();
        Combination { terms }
    }

    #[test]
    fn grid_volume() {
        assert!(build_grid(1, 4, 4).is_err());
        for n in [2, 16, 24] {
            let g = build_grid(n, n, n).unwrap();
            assert!((g.volume() - 8.0 * PI * PI).abs() <= 1e-12, "{n}: {:e}", g.volume() - 8.0 * PI * PI);
            assert!(g.weights.iter().all(|w| *w > 0.0));
        }
        let g = build_grid(16, 16, 16).unwrap();
        let one = vec![Complex64::new(1.0, 0.0); g.len()];
        assert!((inner_product_so3(&one, &one, &g).unwrap() - 8.0 * PI * PI).norm() <= 1e-12);
        assert!(inner_product_so3(&one[1..], &one, &g).is_err());
    }

    #[test]
    fn l1_basis_orthonormal() {
        let g = build_grid(24, 24, 24).unwrap();
        let samples: Vec<_> = WignerL1Basis::all().iter().map(|d| g.sample(d)).collect();
        for a in 0..3 {
            for b in 0..3 {
                let ip = inner_product_so3(&samples[a], &samples[b], &g).unwrap();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((ip - e).norm() <= 1e-13, "({a}, {b}) {ip}");
            }
        }
        // independent of α₃
        let d = WignerL1Basis { a: 1 };
        assert_eq!(d.value(&EulerAngles::new(0.7, 0.2, 0.0)), d.value(&EulerAngles::new(0.7, 0.2, 2.5)));
    }

    #[test]
    fn l1_basis_is_wigner_span() {
        // D_a ∝ D^1_{a,0} up to a constant factor
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for a in [-1, 0, 1] {
            let basis = WignerL1Basis { a };
            let wigner = WignerD::new(1, a, 0).unwrap();
            let probe = random_alpha(&mut rng);
            let ratio = basis.value(&probe) / wigner.value(&probe);
            for _ in 0..10 {
                let alpha = random_alpha(&mut rng);
                assert!((basis.value(&alpha) - ratio * wigner.value(&alpha)).norm() <= 1e-14);
            }
            assert!((ratio.norm() - wigner.norm_factor()).abs() <= 1e-14);
        }
    }

    #[test]
    fn wigner_d_known_values() {
        let beta = 0.9f64;
        let d = |l, m, n| WignerD::new(l, m, n).unwrap().small_d(beta)[0];
        assert!((d(1, 0, 0) - beta.cos()).abs() <= 1e-15);
        assert!((d(1, 1, 1) - (1.0 + beta.cos()) / 2.0).abs() <= 1e-15);
        assert!((d(1, 1, 0) + beta.sin() / 2f64.sqrt()).abs() <= 1e-15);
        assert!((d(2, 0, 0) - (3.0 * beta.cos().powi(2) - 1.0) / 2.0).abs() <= 1e-15);
        assert!((d(2, 2, -2) - ((1.0 - beta.cos()) / 2.0).powi(2)).abs() <= 1e-15);
        assert_eq!(d(0, 0, 0), 1.0);
        assert!(WignerD::new(3, 0, 0).is_err());
        assert!(WignerD::new(1, 2, 0).is_err());
    }

    #[test]
    fn wigner_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for d in WignerD::all(2).unwrap() {
            let alpha = random_alpha(&mut rng);
            let g = d.gradient(&alpha);
            let hs = d.hessian(&alpha);
            for i in 0..3 {
                let shift = |s: f64| {
                    let mut v = alpha.to_vector();
                    v[i] += s;
                    EulerAngles::from_vector(&v)
                };
                let fd = (d.value(&shift(h)) - d.value(&shift(-h))) / (2.0 * h);
                assert!((fd - g[i]).norm() <= 1e-9);
                for j in 0..3 {
                    let fd = (d.gradient(&shift(h))[j] - d.gradient(&shift(-h))[j]) / (2.0 * h);
                    assert!((fd - hs[i][j]).norm() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn wigner_functions_orthonormal() {
        let g = build_grid(24, 24, 24).unwrap();
        let all = WignerD::all(2).unwrap();
        let samples: Vec<_> = all.iter().map(|d| g.sample(d)).collect();
        for (a, da) in all.iter().enumerate() {
            for (b, _) in all.iter().enumerate() {
                let ip = inner_product_so3(&samples[a], &samples[b], &g).unwrap();
                let e = if a == b { 1.0 / (da.norm_factor() * da.norm_factor()) } else { 0.0 };
                assert!((ip - e).norm() <= 1e-12 * (1.0 + e));
            }
        }
    }

    #[test]
    fn m3_is_azimuthal_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s0 = 1.7;
        for _ in 0..20 {
            let alpha = random_alpha(&mut rng);
            for d in WignerL1Basis::all() {
                let got = m_hat_apply(2, &d, &alpha, s0).unwrap();
                assert!((got - s0 * d.a as f64 * d.value(&alpha)).norm() <= 1e-14);
            }
        }
        assert!(m_hat_apply(3, &WignerL1Basis { a: 0 }, &EulerAngles::new(1.0, 0.0, 0.0), 1.0).is_err());
        assert!(m_hat_apply(0, &WignerL1Basis { a: 0 }, &EulerAngles::new(SINGULARITY_GUARD / 2.0, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn operator_commutators_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s0 = 0.8;
        for _ in 0..20 {
            let f = random_combination(&mut rng);
            let alpha = random_alpha(&mut rng);
            for i in 0..3 {
                for k in 0..3 {
                    let lhs = m_hat_pair_apply(i, k, &f, &alpha, s0).unwrap() - m_hat_pair_apply(k, i, &f, &alpha, s0).unwrap();
                    let rhs: Complex64 = (0..3)
                        .map(|l| I * s0 * levi_civita(i, k, l) * m_hat_apply(l, &f, &alpha, s0).unwrap())
                        .sum();
                    assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
                }
            }
        }
    }

    #[test]
    fn matrix_elements_match_closed_form() {
        let s0 = 1.3;
        let g = build_grid(24, 24, 24).unwrap();
        let g2 = build_grid(48, 48, 48).unwrap();
        let expected = angular_momentum_matrices(s0);
        let mut quad = [OperatorMatrix3::zeros(); 3];
        for i in 0..3 {
            quad[i] = matrix_elements_m(i, &g, s0).unwrap();
            assert!(max_abs(&(quad[i] - expected[i])) <= 1e-10, "M{}: {}", i + 1, quad[i]);
            assert!(max_abs(&(quad[i] - quad[i].adjoint())) <= 1e-12);
            let fine = matrix_elements_m(i, &g2, s0).unwrap();
            assert!(max_abs(&(fine - quad[i])) <= 1e-12);
        }
        assert!((quad[0][(0, 1)] - s0 / 2f64.sqrt()).norm() <= 1e-12);
        assert!(commutator_residual(&quad, s0) <= 1e-12);
        assert!(commutator_residual(&expected, s0) <= 1e-15);
        let c12 = expected[0] * expected[1] - expected[1] * expected[0];
        assert!(max_abs(&(c12 - expected[2] * (I * s0))) <= 1e-15);
    }

    #[test]
    fn hermiticity_orderings() {
        let g = build_grid(24, 24, 24).unwrap();
        let consts = Constants::new(1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut nonzero = 0;
        for _ in 0..20 {
            let f = random_combination(&mut rng);
            let h = random_combination(&mut rng);
            let k = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let standard = hermiticity_residual(&f, &h, &k, &g, Ordering::Standard, &consts).unwrap();
            assert!(standard.norm() <= 1e-10, "{standard}");
            let same = hermiticity_residual(&f, &f, &k, &g, Ordering::Standard, &consts).unwrap();
            assert!(same.norm() <= 1e-10);
            let norm = |c: &Combination<WignerD>| {
                let s = g.sample(c);
                inner_product_so3(&s, &s, &g).unwrap().re.sqrt()
            };
            let rev = hermiticity_residual(&f, &h, &k, &g, Ordering::Reversed, &consts).unwrap();
            if rev.norm() >= 1e-3 * norm(&f) * norm(&h) {
                nonzero += 1;
            }
        }
        assert!(nonzero >= 18);
    }

    #[test]
    fn ordering_forms_match_direct_quadrature() {
        let g = build_grid(12, 12, 12).unwrap();
        let consts = Constants::new(1.5, 0.5).unwrap();
        let basis = WignerD::all(2).unwrap();
        let refs: Vec<&dyn AngularFunction> = basis.iter().map(|d| d as &dyn AngularFunction).collect();
        let forms = OrderingForms::new(&refs, &g, &consts).unwrap();
        assert_eq!(forms.len(), 35);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let f = random_combination(&mut rng);
            let h = random_combination(&mut rng);
            let k = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let fc: Vec<Complex64> = f.terms.iter().map(|t| t.0).collect();
            let hc: Vec<Complex64> = h.terms.iter().map(|t| t.0).collect();
            for ordering in [Ordering::Standard, Ordering::Reversed] {
                let direct = hermiticity_residual(&f, &h, &k, &g, ordering, &consts).unwrap();
                let bilinear = forms.residual(&fc, &hc, &k, ordering).unwrap();
                assert!((direct - bilinear).norm() <= 1e-11 * (1.0 + direct.norm()), "{direct} {bilinear}");
            }
            let s = g.sample(&f);
            let direct = inner_product_so3(&s, &s, &g).unwrap().re.sqrt();
            assert!((forms.norm(&fc).unwrap() - direct).abs() <= 1e-12 * direct);
        }
        assert!(forms.residual(&[Complex64::new(1.0, 0.0)], &[], &Vec3::x(), Ordering::Standard).is_err());
    }

    struct HalfFrequency;

    impl AngularFunction for HalfFrequency {
        fn value(&self, a: &EulerAngles) -> Complex64 {
            Complex64::from_polar(1.0, 0.5 * a.phi)
        }
        fn gradient(&self, a: &EulerAngles) -> [Complex64; 3] {
            [Complex64::new(0.0, 0.0), 0.5 * I * self.value(a), Complex64::new(0.0, 0.0)]
        }
        fn hessian(&self, _: &EulerAngles) -> [[Complex64; 3]; 3] {
            [[Complex64::new(0.0, 0.0); 3]; 3]
        }
    }

    #[test]
    fn non_periodic_input_rejected() {
        let g = build_grid(4, 4, 4).unwrap();
        let d = WignerL1Basis { a: 1 };
        let r = hermiticity_residual(&HalfFrequency, &d, &Vec3::x(), &g, Ordering::Standard, &Constants::natural());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn delta_bracket_vanishes() {
        for k in 0..3 {
            assert!(delta_bracket(&EulerAngles::new(PI / 3.0, 1.0, 2.0), k).unwrap().abs() <= 1e-13);
            let eq = EulerAngles::new(PI / 2.0, 1.0, 2.0);
            let da = rate_matrix_derivatives(&eq);
            assert!((0..3).map(|l| da[l][(l, k)]).sum::<f64>().abs() <= 1e-13);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let alpha = EulerAngles::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
            if alpha.theta.sin() <= 0.05 {
                continue;
            }
            for k in 0..3 {
                assert!(delta_bracket(&alpha, k).unwrap().abs() <= 1e-11);
            }
        }
        assert!(delta_bracket(&EulerAngles::new(0.0, 1.0, 2.0), 0).is_err());
    }

    #[test]
    fn emergent_constant_and_dispersion() {
        let hbar = 1.054_571_817e-27;
        let c_light = 2.997_924_58e10;
        let consts = emergent_constant(hbar, hbar / c_light).unwrap();
        assert!((consts.c() - c_light).abs() <= 1e-15 * c_light);
        assert!(emergent_constant(0.0, 1.0).is_err());

        let unit = Constants::natural();
        for omega in [0.5, 1.0, 3.25] {
            let d = dispersion_check(unit.d0() * omega, omega, &unit);
            assert_eq!(d.residual, 0.0);
            assert_eq!(d.wavelength, 2.0 * PI / omega);
        }
        let scaled = emergent_constant(2.0, 0.5).unwrap();
        assert_eq!(dispersion_check(0.5 * 3.0, 3.0, &scaled).residual, 0.0);
        for lambda in [2.0, 0.1, 37.0] {
            let a = emergent_constant(1.3, 0.7).unwrap();
            let b = emergent_constant(1.3 * lambda, 0.7 * lambda).unwrap();
            assert!((a.c() - b.c()).abs() <= 1e-15 * a.c());
        }
    }
}
