//! Stream-potential network: 5 inputs (torus coordinates ⊕ time), two tanh
//! layers of width 10, one linear output.
//!
//! The flow needs analytic input gradients (the velocity is a perpendicular
//! gradient) and the adjoint needs exact reverse-mode derivatives of that
//! gradient with respect to both the weights and the inputs, so the three
//! passes are written out by hand and checked against finite differences.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const NET_INPUT: usize = 5;
pub const NET_HIDDEN: usize = 10;
/// Total number of trainable parameters.
pub const NET_PARAMS: usize = NET_HIDDEN * NET_INPUT
    + NET_HIDDEN
    + NET_HIDDEN * NET_HIDDEN
    + NET_HIDDEN
    + NET_HIDDEN
    + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamNet {
    pub w1: [[f64; NET_INPUT]; NET_HIDDEN],
    pub b1: [f64; NET_HIDDEN],
    pub w2: [[f64; NET_HIDDEN]; NET_HIDDEN],
    pub b2: [f64; NET_HIDDEN],
    pub w3: [f64; NET_HIDDEN],
    pub b3: f64,
}

impl StreamNet {
    pub fn zeros() -> Self {
        StreamNet {
            w1: [[0.0; NET_INPUT]; NET_HIDDEN],
            b1: [0.0; NET_HIDDEN],
            w2: [[0.0; NET_HIDDEN]; NET_HIDDEN],
            b2: [0.0; NET_HIDDEN],
            w3: [0.0; NET_HIDDEN],
            b3: 0.0,
        }
    }

    /// Weights uniform in [-scale, scale], biases zero.
    pub fn seeded(seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = StreamNet::zeros();
        for row in net.w1.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-scale..=scale);
            }
        }
        for row in net.w2.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-scale..=scale);
            }
        }
        for v in net.w3.iter_mut() {
            *v = rng.gen_range(-scale..=scale);
        }
        net
    }

    /// Parameter order: w1 row-major, b1, w2 row-major, b2, w3, b3.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(NET_PARAMS);
        for row in &self.w1 {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.b1);
        for row in &self.w2 {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w3);
        out.push(self.b3);
        out
    }

    pub fn from_flat(flat: &[f64]) -> crate::Result<Self> {
        if flat.len() != NET_PARAMS {
            return Err(crate::Error::Dimension(format!(
                "expected {NET_PARAMS} parameters, got {}",
                flat.len()
            )));
        }
        let mut net = StreamNet::zeros();
        let mut it = flat.iter().copied();
        let mut next = || it.next().unwrap();
        for row in net.w1.iter_mut() {
            for v in row.iter_mut() {
                *v = next();
            }
        }
        for v in net.b1.iter_mut() {
            *v = next();
        }
        for row in net.w2.iter_mut() {
            for v in row.iter_mut() {
                *v = next();
            }
        }
        for v in net.b2.iter_mut() {
            *v = next();
        }
        for v in net.w3.iter_mut() {
            *v = next();
        }
        net.b3 = next();
        Ok(net)
    }

    pub fn scale_weights(&mut self, factor: f64) {
        for row in self.w1.iter_mut() {
            for v in row.iter_mut() {
                *v *= factor;
            }
        }
        for row in self.w2.iter_mut() {
            for v in row.iter_mut() {
                *v *= factor;
            }
        }
        for v in self.w3.iter_mut() {
            *v *= factor;
        }
    }

    pub fn axpy(&mut self, a: f64, other: &StreamNet) {
        for (r, o) in self.w1.iter_mut().zip(&other.w1) {
            for (v, w) in r.iter_mut().zip(o) {
                *v += a * w;
            }
        }
        for (v, w) in self.b1.iter_mut().zip(&other.b1) {
            *v += a * w;
        }
        for (r, o) in self.w2.iter_mut().zip(&other.w2) {
            for (v, w) in r.iter_mut().zip(o) {
                *v += a * w;
            }
        }
        for (v, w) in self.b2.iter_mut().zip(&other.b2) {
            *v += a * w;
        }
        for (v, w) in self.w3.iter_mut().zip(&other.w3) {
            *v += a * w;
        }
        self.b3 += a * other.b3;
    }

    fn forward(&self, u: &[f64; NET_INPUT]) -> Forward {
        let mut a1 = [0.0; NET_HIDDEN];
        let mut d1 = [0.0; NET_HIDDEN];
        for i in 0..NET_HIDDEN {
            let mut z = self.b1[i];
            for j in 0..NET_INPUT {
                z += self.w1[i][j] * u[j];
            }
            let t = z.tanh();
            a1[i] = t;
            d1[i] = 1.0 - t * t;
        }
        let mut a2 = [0.0; NET_HIDDEN];
        let mut d2 = [0.0; NET_HIDDEN];
        for i in 0..NET_HIDDEN {
            let mut z = self.b2[i];
            for j in 0..NET_HIDDEN {
                z += self.w2[i][j] * a1[j];
            }
            let t = z.tanh();
            a2[i] = t;
            d2[i] = 1.0 - t * t;
        }
        let mut y = self.b3;
        for i in 0..NET_HIDDEN {
            y += self.w3[i] * a2[i];
        }
        Forward { a1, d1, a2, d2, y }
    }

    pub fn eval(&self, u: &[f64; NET_INPUT]) -> f64 {
        self.forward(u).y
    }

    /// Value and input gradient ∂y/∂u.
    pub fn eval_grad(&self, u: &[f64; NET_INPUT]) -> (f64, [f64; NET_INPUT]) {
        let f = self.forward(u);
        let (_, _, g) = self.grad_sweep(&f);
        (f.y, g)
    }

    fn grad_sweep(&self, f: &Forward) -> ([f64; NET_HIDDEN], [f64; NET_HIDDEN], [f64; NET_INPUT]) {
        // s2 = d2 ⊙ w3, s1 = d1 ⊙ (W2ᵀ s2), g = W1ᵀ s1
        let mut s2 = [0.0; NET_HIDDEN];
        for i in 0..NET_HIDDEN {
            s2[i] = f.d2[i] * self.w3[i];
        }
        let mut s1 = [0.0; NET_HIDDEN];
        for j in 0..NET_HIDDEN {
            let mut acc = 0.0;
            for i in 0..NET_HIDDEN {
                acc += self.w2[i][j] * s2[i];
            }
            s1[j] = f.d1[j] * acc;
        }
        let mut g = [0.0; NET_INPUT];
        for j in 0..NET_INPUT {
            let mut acc = 0.0;
            for i in 0..NET_HIDDEN {
                acc += self.w1[i][j] * s1[i];
            }
            g[j] = acc;
        }
        (s2, s1, g)
    }

    /// Reverse pass of Q = wy·y + wg·(∂y/∂u): accumulates ∂Q/∂θ into `grad`
    /// and returns (y, ∂y/∂u, ∂Q/∂u). The last output is the exact derivative
    /// of the gradient computation, i.e. second-order in the network.
    pub fn vjp(
        &self,
        u: &[f64; NET_INPUT],
        wy: f64,
        wg: &[f64; NET_INPUT],
        grad: &mut StreamNet,
    ) -> (f64, [f64; NET_INPUT], [f64; NET_INPUT]) {
        let f = self.forward(u);
        let (s2, s1, g) = self.grad_sweep(&f);
        // p1 = W2ᵀ s2 (s1 before the d1 product)
        let mut p1 = [0.0; NET_HIDDEN];
        for j in 0..NET_HIDDEN {
            let mut acc = 0.0;
            for i in 0..NET_HIDDEN {
                acc += self.w2[i][j] * s2[i];
            }
            p1[j] = acc;
        }

        let mut da1 = [0.0; NET_HIDDEN];
        let mut da2 = [0.0; NET_HIDDEN];

        // g = W1ᵀ s1
        let mut ds1 = [0.0; NET_HIDDEN];
        for i in 0..NET_HIDDEN {
            let mut acc = 0.0;
            for j in 0..NET_INPUT {
                acc += self.w1[i][j] * wg[j];
                grad.w1[i][j] += s1[i] * wg[j];
            }
            ds1[i] = acc;
        }
        // s1 = d1 ⊙ p1
        let mut dp1 = [0.0; NET_HIDDEN];
        for i in 0..NET_HIDDEN {
            let dd1 = ds1[i] * p1[i];
            dp1[i] = ds1[i] * f.d1[i];
            da1[i] += -2.0 * f.a1[i] * dd1;
        }
        // p1 = W2ᵀ s2
        let mut ds2 = [0.0; NET_HIDDEN];
        for i in 0..NET_HIDDEN {
            let mut acc = 0.0;
            for j in 0..NET_HIDDEN {
                acc += self.w2[i][j] * dp1[j];
                grad.w2[i][j] += s2[i] * dp1[j];
            }
            ds2[i] = acc;
        }
        // s2 = d2 ⊙ w3
        for i in 0..NET_HIDDEN {
            let dd2 = ds2[i] * self.w3[i];
            grad.w3[i] += ds2[i] * f.d2[i];
            da2[i] += -2.0 * f.a2[i] * dd2;
        }
        // y = w3·a2 + b3
        for i in 0..NET_HIDDEN {
            grad.w3[i] += wy * f.a2[i];
            da2[i] += wy * self.w3[i];
        }
        grad.b3 += wy;
        // backprop the primal chain
        let mut dz2 = [0.0; NET_HIDDEN];
        for i in 0..NET_HIDDEN {
            dz2[i] = f.d2[i] * da2[i];
            grad.b2[i] += dz2[i];
        }
        for i in 0..NET_HIDDEN {
            for j in 0..NET_HIDDEN {
                grad.w2[i][j] += dz2[i] * f.a1[j];
                da1[j] += self.w2[i][j] * dz2[i];
            }
        }
        let mut du = [0.0; NET_INPUT];
        for i in 0..NET_HIDDEN {
            let dz1 = f.d1[i] * da1[i];
            grad.b1[i] += dz1;
            for j in 0..NET_INPUT {
                grad.w1[i][j] += dz1 * u[j];
                du[j] += self.w1[i][j] * dz1;
            }
        }
        (f.y, g, du)
    }
}

struct Forward {
    a1: [f64; NET_HIDDEN],
    d1: [f64; NET_HIDDEN],
    a2: [f64; NET_HIDDEN],
    d2: [f64; NET_HIDDEN],
    y: f64,
}
