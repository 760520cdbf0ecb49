//! Classical fixed-step fourth-order Runge–Kutta.
//!
//! All flows in this crate are smooth and non-stiff away from the Euler-angle
//! singularity, and each one has a closed form or conserved quantity to check
//! against, so a fixed step is all that is needed.

use nalgebra::SVector;

/// One RK4 step of `y' = f(y)` with step `h`.
pub fn rk4_step<const N: usize, F>(f: &F, y: &SVector<f64, N>, h: f64) -> SVector<f64, N>
where
    F: Fn(&SVector<f64, N>) -> SVector<f64, N>,
{
    let k1 = f(y);
    let k2 = f(&(y + k1 * (0.5 * h)));
    let k3 = f(&(y + k2 * (0.5 * h)));
    let k4 = f(&(y + k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Number of uniform steps used to cover `span` with steps no larger than `dt`.
pub fn step_count(span: f64, dt: f64) -> usize {
    let n = (span.abs() / dt).ceil();
    // guard against 1e-3 * 1000 style rounding producing an extra step
    let n = if n > 0.0 && ((n - 1.0) * dt - span.abs()).abs() <= 1e-12 * span.abs() {
        n - 1.0
    } else {
        n
    };
    n.max(0.0) as usize
}

/// Integrate `y' = f(y)` over `[0, span]` in `steps` uniform steps.
///
/// `span` may be negative (backward integration). `check` is called after
/// every step with the elapsed time and the new state; returning an error
/// aborts the integration.
pub fn rk4_fixed<const N: usize, F, C, E>(
    f: &F,
    y0: &SVector<f64, N>,
    span: f64,
    steps: usize,
    mut check: C,
) -> Result<SVector<f64, N>, E>
where
    F: Fn(&SVector<f64, N>) -> SVector<f64, N>,
    C: FnMut(f64, &SVector<f64, N>) -> Result<(), E>,
{
    if steps == 0 {
        return Ok(*y0);
    }
    let h = span / steps as f64;
    let mut y = *y0;
    for k in 0..steps {
        y = rk4_step(f, &y, h);
        check(h * (k + 1) as f64, &y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        let f = |y: &Vector2<f64>| Vector2::new(y[1], -y[0]);
        let y0 = Vector2::new(1.0, 0.0);
        let err = |n: usize| {
            let y = rk4_fixed::<2, _, _, ()>(&f, &y0, 1.0, n, |_, _| Ok(())).unwrap();
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn step_count_rounding() {
        assert_eq!(step_count(1.0, 1e-3), 1000);
        assert_eq!(step_count(10.0, 1e-3), 10000);
        assert_eq!(step_count(0.0, 1e-3), 0);
        assert_eq!(step_count(0.0015, 1e-3), 2);
        assert_eq!(step_count(-2.0, 0.5), 4);
    }
}
