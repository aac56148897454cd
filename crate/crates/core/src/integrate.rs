//! Classic fixed-step fourth-order Runge-Kutta.

use nalgebra::SVector;

/// One RK4 step of `x' = f(t, x)`.
pub fn rk4_step<const N: usize, E, F>(mut f: F, t: f64, x: &SVector<f64, N>, dt: f64) -> Result<SVector<f64, N>, E>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
{
    let h = dt / 2.0;
    let k1 = f(t, x)?;
    let k2 = f(t + h, &(x + k1 * h))?;
    let k3 = f(t + h, &(x + k2 * h))?;
    let k4 = f(t + dt, &(x + k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Integrates over `steps` steps of size `dt`, returning every state
/// including the initial one.
pub fn rk4_integrate<const N: usize, E, F>(
    mut f: F,
    t0: f64,
    x0: SVector<f64, N>,
    dt: f64,
    steps: usize,
) -> Result<Vec<SVector<f64, N>>, E>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
{
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0);
    let mut x = x0;
    for k in 0..steps {
        x = rk4_step(&mut f, t0 + k as f64 * dt, &x, dt)?;
        out.push(x);
    }
    Ok(out)
}
