//! Fixed-step classical RK4 transport of point sets, with an exact
//! reverse-mode pass through the discrete recurrence (the gradient of what is
//! actually computed, not of the continuous flow).

use nalgebra::Vector2;
use rayon::prelude::*;

use super::field::FlowField;
use super::mlp::StreamNet;

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct FlowConfig {
    /// Integration horizon; 0 disables the flow.
    pub t_max: f64,
    pub n_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { t_max: 1.0, n_steps: 32 }
    }
}

/// One classical RK4 step of x' = f(x,t).
pub fn rk4_step<F>(f: &F, x: Vector2<f64>, t: f64, dt: f64) -> Vector2<f64>
where
    F: Fn(Vector2<f64>, f64) -> Vector2<f64>,
{
    let k1 = f(x, t);
    let k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt);
    let k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt);
    let k4 = f(x + dt * k3, t + dt);
    x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates from t0 to t1 in n equal steps.
pub fn integrate<F>(f: &F, x0: Vector2<f64>, t0: f64, t1: f64, n: usize) -> Vector2<f64>
where
    F: Fn(Vector2<f64>, f64) -> Vector2<f64>,
{
    if n == 0 || t0 == t1 {
        return x0;
    }
    let dt = (t1 - t0) / n as f64;
    let mut x = x0;
    for k in 0..n {
        x = rk4_step(f, x, t0 + k as f64 * dt, dt);
    }
    x
}

/// Transports a point set along the field over [0, t_max]. Errors with the
/// offending point index if a trajectory leaves the finite floats.
pub fn flow_points(
    field: &FlowField,
    points: &[Vector2<f64>],
    cfg: FlowConfig,
) -> crate::Result<Vec<Vector2<f64>>> {
    if cfg.n_steps == 0 || cfg.t_max == 0.0 {
        return Ok(points.to_vec());
    }
    let dt = cfg.t_max / cfg.n_steps as f64;
    points
        .par_iter()
        .enumerate()
        .map(|(index, &p)| {
            let mut x = p;
            for step in 0..cfg.n_steps {
                x = rk4_step(&|y, t| field.velocity(y, t), x, step as f64 * dt, dt);
                if !(x[0].is_finite() && x[1].is_finite()) {
                    return Err(crate::Error::FlowDiverged { index, step });
                }
            }
            Ok(x)
        })
        .collect()
}

/// Reverse-mode transport derivative: given cotangents w_i on the final
/// positions, returns (∂Σw_i·F(p_i)/∂θ, per-point cotangents on the inputs).
/// The backward pass replays each RK4 step from the stored step-start
/// positions, so it differentiates the discrete map exactly.
///
/// Points are processed in fixed-size chunks and the chunk gradients are
/// summed in chunk order, so the result does not depend on thread scheduling.
pub fn flow_vjp(
    field: &FlowField,
    points: &[Vector2<f64>],
    cfg: FlowConfig,
    cotangents: &[Vector2<f64>],
) -> crate::Result<(StreamNet, Vec<Vector2<f64>>)> {
    assert_eq!(points.len(), cotangents.len());
    if cfg.n_steps == 0 || cfg.t_max == 0.0 {
        return Ok((StreamNet::zeros(), cotangents.to_vec()));
    }
    let dt = cfg.t_max / cfg.n_steps as f64;

    const CHUNK: usize = 64;
    let chunks: Vec<(StreamNet, Vec<Vector2<f64>>)> = points
        .par_chunks(CHUNK)
        .zip(cotangents.par_chunks(CHUNK))
        .enumerate()
        .map(|(ci, (pts, cots))| {
            let mut grad = StreamNet::zeros();
            let mut dinputs = Vec::with_capacity(pts.len());
            for (pi, (&p, &w)) in pts.iter().zip(cots).enumerate() {
                let index = ci * CHUNK + pi;
                // forward with history
                let mut xs = Vec::with_capacity(cfg.n_steps + 1);
                xs.push(p);
                let mut x = p;
                for step in 0..cfg.n_steps {
                    x = rk4_step(&|y, t| field.velocity(y, t), x, step as f64 * dt, dt);
                    if !(x[0].is_finite() && x[1].is_finite()) {
                        return Err(crate::Error::FlowDiverged { index, step });
                    }
                    xs.push(x);
                }
                // backward
                let mut dx = w;
                for step in (0..cfg.n_steps).rev() {
                    let t = step as f64 * dt;
                    let x0 = xs[step];
                    let k1 = field.velocity(x0, t);
                    let xa = x0 + 0.5 * dt * k1;
                    let k2 = field.velocity(xa, t + 0.5 * dt);
                    let xb = x0 + 0.5 * dt * k2;
                    let k3 = field.velocity(xb, t + 0.5 * dt);
                    let xc = x0 + dt * k3;

                    let dnext = dx;
                    let mut dx0 = dnext;
                    let mut dk1 = (dt / 6.0) * dnext;
                    let mut dk2 = (dt / 3.0) * dnext;
                    let mut dk3 = (dt / 3.0) * dnext;
                    let dk4 = (dt / 6.0) * dnext;

                    let dxc = field.velocity_vjp(xc, t + dt, dk4, &mut grad);
                    dx0 += dxc;
                    dk3 += dt * dxc;
                    let dxb = field.velocity_vjp(xb, t + 0.5 * dt, dk3, &mut grad);
                    dx0 += dxb;
                    dk2 += 0.5 * dt * dxb;
                    let dxa = field.velocity_vjp(xa, t + 0.5 * dt, dk2, &mut grad);
                    dx0 += dxa;
                    dk1 += 0.5 * dt * dxa;
                    dx0 += field.velocity_vjp(x0, t, dk1, &mut grad);
                    dx = dx0;
                }
                dinputs.push(dx);
            }
            Ok((grad, dinputs))
        })
        .collect::<crate::Result<_>>()?;

    let mut grad = StreamNet::zeros();
    let mut dinputs = Vec::with_capacity(points.len());
    for (g, d) in chunks {
        grad.axpy(1.0, &g);
        dinputs.extend(d);
    }
    Ok((grad, dinputs))
}
