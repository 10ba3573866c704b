//! The divergence-free velocity field.
//!
//! A scalar stream potential G(x,t) = env(x) · S(x,t) is built from the
//! network output h(ρ(x),t) by a signed group average
//!   S(x,t) = (1/|Ĝ|) Σ_φ det(A_φ) · h(ρ(φx), t),
//! and the velocity is its perpendicular gradient H = (∂₂G, -∂₁G).
//!
//! Two exact identities motivate this arrangement. First, for orthogonal A,
//! A⁻¹·P·A = det(A)·P with P the quarter-turn, so the signed scalar average
//! commutes with the perpendicular gradient and reproduces the vector-level
//! group average of the unenveloped field (tested below). Second, any C²
//! scalar gives an identically divergence-free perpendicular gradient, so
//! volume preservation survives the envelope everywhere. The envelope and its
//! gradient both vanish on the domain boundary, which pins ∂Ω exactly;
//! equivariance holds wherever the envelope is 1.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::mlp::{StreamNet, NET_INPUT};
use crate::symmetry::WallpaperGroup;

/// Scalar cutoff that takes the velocity smoothly to zero at the domain
/// boundary. The profile is a C² smoothstep per edge; value and gradient are
/// exactly zero on ∂Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// env ≡ 1 (the bare symmetric field on all of ℝ²).
    None,
    /// Product of per-edge smoothsteps over [0,width]×[0,height], ramping
    /// over `margin` length units from each edge.
    Rect { width: f64, height: f64, margin: f64 },
}

/// C² smoothstep: 0 below 0, 1 above 1, s³(10-15s+6s²) between.
/// Returns (q, q', q''); first and second derivatives vanish at both ends.
fn smoothstep(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let q = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let dq = 30.0 * s * s * (1.0 - s) * (1.0 - s);
        let ddq = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        (q, dq, ddq)
    }
}

/// One axis of the rectangle profile: e(c) = q(c/δ)·q((len-c)/δ).
fn axis_profile(c: f64, len: f64, delta: f64) -> (f64, f64, f64) {
    let (a, da, dda) = smoothstep(c / delta);
    let (b, db, ddb) = smoothstep((len - c) / delta);
    let (da, dda) = (da / delta, dda / (delta * delta));
    let (db, ddb) = (-db / delta, ddb / (delta * delta));
    (a * b, da * b + a * db, dda * b + 2.0 * da * db + a * ddb)
}

impl Envelope {
    pub fn value(&self, x: Vector2<f64>) -> f64 {
        match *self {
            Envelope::None => 1.0,
            Envelope::Rect { width, height, margin } => {
                let (ex, _, _) = axis_profile(x[0], width, margin);
                let (ey, _, _) = axis_profile(x[1], height, margin);
                ex * ey
            }
        }
    }

    /// (env, ∇env, Hessian).
    pub fn with_derivatives(&self, x: Vector2<f64>) -> (f64, Vector2<f64>, Matrix2<f64>) {
        match *self {
            Envelope::None => (1.0, Vector2::zeros(), Matrix2::zeros()),
            Envelope::Rect { width, height, margin } => {
                let (ex, dex, ddex) = axis_profile(x[0], width, margin);
                let (ey, dey, ddey) = axis_profile(x[1], height, margin);
                (
                    ex * ey,
                    Vector2::new(dex * ey, ex * dey),
                    Matrix2::new(ddex * ey, dex * dey, dex * dey, ex * ddey),
                )
            }
        }
    }
}

/// Velocity field bundle: group, network weights, envelope.
#[derive(Clone, Copy)]
pub struct FlowField<'a> {
    pub group: &'a WallpaperGroup,
    pub net: &'a StreamNet,
    pub envelope: Envelope,
}

impl<'a> FlowField<'a> {
    pub fn new(group: &'a WallpaperGroup, net: &'a StreamNet, envelope: Envelope) -> Self {
        FlowField { group, net, envelope }
    }

    /// Stream potential G(x,t) = env(x)·S(x,t).
    pub fn potential(&self, x: Vector2<f64>, t: f64) -> f64 {
        self.envelope.value(x) * self.bare_potential(x, t)
    }

    fn bare_potential(&self, x: Vector2<f64>, t: f64) -> f64 {
        let m = self.group.order() as f64;
        let mut acc = 0.0;
        for rep in self.group.reps() {
            let y = self.group.apply(rep, x);
            let r = self.group.torus_map(y);
            let u = [r[0], r[1], r[2], r[3], t];
            acc += rep.det() * self.net.eval(&u);
        }
        acc / m
    }

    /// Potential value and spatial gradient.
    pub fn potential_grad(&self, x: Vector2<f64>, t: f64) -> (f64, Vector2<f64>) {
        let (env, denv, _) = self.envelope.with_derivatives(x);
        let m = self.group.order() as f64;
        let mut bare = 0.0;
        let mut dbare = Vector2::zeros();
        for rep in self.group.reps() {
            let ck = rep.det() / m;
            let y = self.group.apply(rep, x);
            let r = self.group.torus_map(y);
            let u = [r[0], r[1], r[2], r[3], t];
            let (h, g) = self.net.eval_grad(&u);
            bare += ck * h;
            let jr = self.group.torus_jacobian(y);
            let q = nalgebra::SVector::<f64, 4>::new(g[0], g[1], g[2], g[3]);
            dbare += ck * (rep.linear.transpose() * (jr.transpose() * q));
        }
        (env * bare, env * dbare + bare * denv)
    }

    /// H(x,t) = (∂₂G, -∂₁G).
    pub fn velocity(&self, x: Vector2<f64>, t: f64) -> Vector2<f64> {
        let (_, dg) = self.potential_grad(x, t);
        Vector2::new(dg[1], -dg[0])
    }

    /// Reverse-mode derivative of Q = w·H(x,t): accumulates ∂Q/∂θ into `grad`
    /// and returns ∂Q/∂x. Exact (second-order through the network).
    pub fn velocity_vjp(
        &self,
        x: Vector2<f64>,
        t: f64,
        w: Vector2<f64>,
        grad: &mut StreamNet,
    ) -> Vector2<f64> {
        let tau = std::f64::consts::TAU;
        // w·H = v·∇G with v the quarter-turn of w
        let v = Vector2::new(-w[1], w[0]);
        let (env, denv, henv) = self.envelope.with_derivatives(x);
        let v_denv = v.dot(&denv);
        let m = self.group.order() as f64;
        let basis_inv = *self.group.basis_inv();

        let mut bare = 0.0;
        let mut v_dbare = 0.0;
        let mut dx = Vector2::zeros();
        for rep in self.group.reps() {
            let ck = rep.det() / m;
            let y = self.group.apply(rep, x);
            let rho = self.group.torus_map(y);
            let u = [rho[0], rho[1], rho[2], rho[3], t];
            let jr = self.group.torus_jacobian(y);
            let av = rep.linear * v;
            let r = jr * av; // cotangent direction on the input gradient
            let wy = ck * v_denv;
            let wg = [env * ck * r[0], env * ck * r[1], env * ck * r[2], env * ck * r[3], 0.0];
            let (h, q, du) = self.net.vjp(&u, wy, &wg, grad);

            bare += ck * h;
            v_dbare += ck * (q[0] * r[0] + q[1] * r[1] + q[2] * r[2] + q[3] * r[3]);

            // chain through the torus map for the network-input dependence
            let drho = nalgebra::SVector::<f64, 4>::new(du[0], du[1], du[2], du[3]);
            let mut dy = jr.transpose() * drho;
            // explicit dependence of the torus Jacobian on the point
            let mv = basis_inv * av;
            let d_u = Vector2::new(
                -env * ck * tau * tau * (q[0] * rho[0] + q[1] * rho[1]) * mv[0],
                -env * ck * tau * tau * (q[2] * rho[2] + q[3] * rho[3]) * mv[1],
            );
            dy += basis_inv.transpose() * d_u;
            dx += rep.linear.transpose() * dy;
        }
        // envelope chains: Q = env·(v·∇S) + S·(v·∇env)
        dx += v_dbare * denv + bare * (henv * v);
        dx
    }
}

/// Divergence-free field from scalar potentials in n dimensions: the m =
/// n(n-1)/2 potentials fill the strict upper triangle of an antisymmetric
/// matrix M (pairs (i,j), i<j, in lexicographic order) and the field is the
/// row divergence (Λg)ᵢ = Σⱼ ∂ⱼ M_ij, identically divergence-free.
///
/// `jac[(k, j)]` = ∂g_k/∂x_j. For n = 2 this reduces to (∂₂g, -∂₁g).
pub fn antisymmetric_divergence(jac: &DMatrix<f64>, n: usize) -> crate::Result<DVector<f64>> {
    let m = n * (n - 1) / 2;
    if jac.nrows() != m || jac.ncols() != n {
        return Err(crate::Error::Dimension(format!(
            "expected {m}×{n} Jacobian, got {}×{}",
            jac.nrows(),
            jac.ncols()
        )));
    }
    let pair = |i: usize, j: usize| i * n - i * (i + 1) / 2 + (j - i - 1);
    let mut out = DVector::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            out[i] += jac[(pair(i, j), j)];
        }
        for j in 0..i {
            out[i] -= jac[(pair(j, i), j)];
        }
    }
    Ok(out)
}

/// Central-difference divergence of the velocity, for validation.
pub fn divergence_fd(field: &FlowField, x: Vector2<f64>, t: f64, h: f64) -> f64 {
    let mut div = 0.0;
    for k in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[k] += h;
        xm[k] -= h;
        div += (field.velocity(xp, t)[k] - field.velocity(xm, t)[k]) / (2.0 * h);
    }
    div
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::lookup;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn sample_groups() -> Vec<&'static WallpaperGroup> {
        ["p1", "pg", "cm", "p2gg", "p4", "p4gm", "p3m1", "p6mm"]
            .iter()
            .map(|n| lookup(n).unwrap())
            .collect()
    }

    #[test]
    fn envelope_is_one_inside_zero_with_zero_gradient_on_the_boundary() {
        let env = Envelope::Rect { width: 3.0, height: 2.0, margin: 0.25 };
        assert_eq!(env.value(Vector2::new(1.5, 1.0)), 1.0);
        assert_eq!(env.value(Vector2::new(0.25, 1.0)), 1.0);
        for p in [
            Vector2::new(0.0, 1.0),
            Vector2::new(3.0, 0.5),
            Vector2::new(1.2, 0.0),
            Vector2::new(0.0, 0.0),
            Vector2::new(-0.5, 1.0),
        ] {
            let (v, g, _) = env.with_derivatives(p);
            assert_eq!(v, 0.0);
            assert_eq!(g.norm(), 0.0);
        }
        // interior ramp is strictly between 0 and 1
        let v = env.value(Vector2::new(0.1, 1.0));
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn envelope_derivatives_match_finite_differences() {
        let env = Envelope::Rect { width: 2.0, height: 1.5, margin: 0.3 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-5;
        for _ in 0..40 {
            let x = Vector2::new(rng.gen_range(0.01..1.99), rng.gen_range(0.01..1.49));
            let (_, g, hess) = env.with_derivatives(x);
            for k in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (env.value(xp) - env.value(xm)) / (2.0 * h);
                assert!((g[k] - fd).abs() <= 1e-7, "grad {k}");
                let (_, gp, _) = env.with_derivatives(xp);
                let (_, gm, _) = env.with_derivatives(xm);
                for i in 0..2 {
                    let fd2 = (gp[i] - gm[i]) / (2.0 * h);
                    assert!((hess[(i, k)] - fd2).abs() <= 1e-6, "hess ({i},{k})");
                }
            }
        }
    }

    #[test]
    fn zero_weights_give_zero_potential_and_velocity() {
        let net = StreamNet::zeros();
        let g = lookup("p4").unwrap();
        let f = FlowField::new(g, &net, Envelope::None);
        let x = Vector2::new(0.37, 0.61);
        assert_eq!(f.potential(x, 0.3), 0.0);
        assert_eq!(f.velocity(x, 0.3).norm(), 0.0);
    }

    #[test]
    fn potential_is_lattice_periodic_without_envelope() {
        let net = StreamNet::seeded(11, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for g in sample_groups() {
            let f = FlowField::new(g, &net, Envelope::None);
            for _ in 0..10 {
                let x = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let z = g.basis * Vector2::new(rng.gen_range(-2..=2) as f64, rng.gen_range(-2..=2) as f64);
                let t = rng.gen_range(0.0..1.0);
                let a = f.potential(x, t);
                let b = f.potential(x + z, t);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{}", g.name);
            }
        }
    }

    #[test]
    fn potential_gradient_matches_finite_differences() {
        let net = StreamNet::seeded(21, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for g in sample_groups() {
            let env = Envelope::Rect { width: 2.0, height: 2.0, margin: 0.4 };
            let f = FlowField::new(g, &net, env);
            for _ in 0..10 {
                let x = Vector2::new(rng.gen_range(0.05..1.95), rng.gen_range(0.05..1.95));
                let t = rng.gen_range(0.0..1.0);
                let (_, grad) = f.potential_grad(x, t);
                let h = 1e-6;
                for k in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (f.potential(xp, t) - f.potential(xm, t)) / (2.0 * h);
                    assert!(
                        (grad[k] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                        "{} comp {k}: {} vs {fd}",
                        g.name,
                        grad[k]
                    );
                }
            }
        }
    }

    /// The scalar route must agree with the vector-level group average of the
    /// unenveloped perpendicular-gradient field.
    #[test]
    fn signed_scalar_average_equals_vector_group_average()  {
        let net = StreamNet::seeded(31, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for g in sample_groups() {
            let f = FlowField::new(g, &net, Envelope::None);
            let t = 0.37;
            // unsymmetrized single-term perpendicular gradient
            let raw = |x: Vector2<f64>| {
                let r = g.torus_map(x);
                let u = [r[0], r[1], r[2], r[3], t];
                let (_, gr) = net.eval_grad(&u);
                let jr = g.torus_jacobian(x);
                let q = nalgebra::SVector::<f64, 4>::new(gr[0], gr[1], gr[2], gr[3]);
                let dg = jr.transpose() * q;
                Vector2::new(dg[1], -dg[0])
            };
            for _ in 0..8 {
                let x = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let via_scalar = f.velocity(x, t);
                let via_vector = g.group_average(raw, x);
                assert!(
                    (via_scalar - via_vector).norm() <= 1e-12 * via_vector.norm().max(1.0),
                    "{}",
                    g.name
                );
            }
        }
    }

    #[test]
    fn velocity_is_semi_invariant_without_envelope() {
        let net = StreamNet::seeded(41, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for g in sample_groups() {
            let f = FlowField::new(g, &net, Envelope::None);
            for _ in 0..6 {
                let x = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let t = rng.gen_range(0.0..1.0);
                let base = f.velocity(x, t);
                for rep in g.reps() {
                    let lhs = f.velocity(g.apply(rep, x), t);
                    let rhs = rep.linear * base;
                    assert!((lhs - rhs).norm() <= 1e-11 * base.norm().max(1.0), "{}", g.name);
                }
            }
        }
    }

    #[test]
    fn velocity_vanishes_exactly_on_the_domain_boundary() {
        let net = StreamNet::seeded(51, 0.3);
        let g = lookup("p4gm").unwrap();
        let env = Envelope::Rect { width: 3.0, height: 3.0, margin: 0.25 };
        let f = FlowField::new(g, &net, env);
        for p in [
            Vector2::new(0.0, 1.3),
            Vector2::new(3.0, 2.1),
            Vector2::new(0.7, 0.0),
            Vector2::new(2.2, 3.0),
            Vector2::new(0.0, 0.0),
        ] {
            assert_eq!(f.velocity(p, 0.5).norm(), 0.0);
        }
    }

    #[test]
    fn divergence_vanishes_even_where_the_envelope_varies() {
        let net = StreamNet::seeded(61, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for g in sample_groups() {
            let env = Envelope::Rect { width: 2.0, height: 2.0, margin: 0.4 };
            let f = FlowField::new(g, &net, env);
            for _ in 0..15 {
                // bias samples toward the ramp region
                let x = Vector2::new(rng.gen_range(0.05..0.6), rng.gen_range(0.05..1.95));
                let t = rng.gen_range(0.0..1.0);
                let div = divergence_fd(&f, x, t, 1e-4);
                let scale = 1.0 + f.velocity(x, t).norm();
                assert!(div.abs() <= 1e-5 * scale, "{}: div {div}", g.name);
            }
        }
    }

    #[test]
    fn velocity_vjp_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for g in sample_groups() {
            let net = StreamNet::seeded(71, 0.3);
            let env = Envelope::Rect { width: 2.0, height: 2.0, margin: 0.4 };
            let f = FlowField::new(g, &net, env);
            for _ in 0..4 {
                let x = Vector2::new(rng.gen_range(0.05..1.95), rng.gen_range(0.05..1.95));
                let t = rng.gen_range(0.0..1.0);
                let w = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let mut grad = StreamNet::zeros();
                let dx = f.velocity_vjp(x, t, w, &mut grad);
                let h = 1e-6;
                // spatial derivative
                for k in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (w.dot(&f.velocity(xp, t)) - w.dot(&f.velocity(xm, t))) / (2.0 * h);
                    assert!(
                        (dx[k] - fd).abs() <= 2e-5 * fd.abs().max(1.0),
                        "{} dx[{k}]: {} vs {fd}",
                        g.name,
                        dx[k]
                    );
                }
                // parameter derivative along random directions
                let gflat = grad.to_flat();
                let flat = net.to_flat();
                for _ in 0..5 {
                    let dir: Vec<f64> = (0..flat.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let shift = |s: f64| {
                        let p: Vec<f64> = flat.iter().zip(&dir).map(|(a, d)| a + s * h * d).collect();
                        StreamNet::from_flat(&p).unwrap()
                    };
                    let np = shift(1.0);
                    let nm = shift(-1.0);
                    let fp = FlowField::new(g, &np, env);
                    let fm = FlowField::new(g, &nm, env);
                    let fd = (w.dot(&fp.velocity(x, t)) - w.dot(&fm.velocity(x, t))) / (2.0 * h);
                    let an: f64 = gflat.iter().zip(&dir).map(|(a, d)| a * d).sum();
                    assert!((an - fd).abs() <= 2e-5 * fd.abs().max(1.0), "{}: {an} vs {fd}", g.name);
                }
            }
        }
    }

    #[test]
    fn antisymmetric_divergence_reduces_to_perpendicular_gradient_in_2d() {
        let jac = DMatrix::from_row_slice(1, 2, &[0.7, -1.3]);
        let v = antisymmetric_divergence(&jac, 2).unwrap();
        assert_eq!(v[0], -1.3);
        assert_eq!(v[1], -0.7);
        assert!(antisymmetric_divergence(&jac, 3).is_err());
    }

    /// n = 3: build the field from synthetic polynomial potentials and check
    /// its divergence vanishes by finite differences.
    #[test]
    fn antisymmetric_divergence_is_divergence_free_in_3d() {
        // g_k(x) = quadratic forms with distinct coefficients
        let coef: Vec<[f64; 9]> = vec![
            [0.3, -1.1, 0.7, 0.2, 0.9, -0.4, 0.5, -0.6, 0.1],
            [-0.8, 0.4, 0.2, -0.3, 0.1, 0.6, -0.2, 0.7, -0.5],
            [0.6, 0.5, -0.9, 0.8, -0.1, 0.2, 0.4, 0.3, -0.7],
        ];
        let jac_at = |x: &[f64; 3]| {
            let mut j = DMatrix::zeros(3, 3);
            for (k, c) in coef.iter().enumerate() {
                // g_k = Σ c[3i+j]·x_i·x_j  (not symmetric, fine)
                for d in 0..3 {
                    let mut p = 0.0;
                    for i in 0..3 {
                        p += c[3 * d + i] * x[i] + c[3 * i + d] * x[i];
                    }
                    j[(k, d)] = p;
                }
            }
            j
        };
        let field = |x: &[f64; 3]| antisymmetric_divergence(&jac_at(x), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let h = 1e-5;
        for _ in 0..20 {
            let x = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let mut div = 0.0;
            for k in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                div += (field(&xp)[k] - field(&xm)[k]) / (2.0 * h);
            }
            assert!(div.abs() <= 1e-8, "div {div}");
        }
    }
}
