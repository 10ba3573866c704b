//! The 17 wallpaper groups: lattices, coset representatives, and the
//! operations the flow construction needs (orbit maps, the torus embedding
//! of the quotient, and group averaging of vector fields).

mod catalog;

pub use catalog::{all_groups, lookup};

use nalgebra::{Matrix2, SMatrix, Vector2};

/// Matching tolerance for linear parts and (circular) fractional translations.
pub const MATCH_TOL: f64 = 1e-9;

/// Plane isometry x ↦ A·x + B·c. `linear` is orthogonal; `frac` holds the
/// translation in fractional lattice coordinates, components in [0,1) for
/// catalog representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    pub linear: Matrix2<f64>,
    pub frac: Vector2<f64>,
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            linear: Matrix2::identity(),
            frac: Vector2::zeros(),
        }
    }

    /// Whether the linear part reverses orientation.
    pub fn det(&self) -> f64 {
        self.linear.determinant()
    }
}

/// One wallpaper group: lattice basis, coset representatives (one isometry
/// per point-group element, fractional translations reduced to [0,1)²), and
/// a fundamental polygon used for default pore placement.
#[derive(Debug, Clone)]
pub struct WallpaperGroup {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    /// Lattice basis, columns b1, b2.
    pub basis: Matrix2<f64>,
    basis_inv: Matrix2<f64>,
    /// Width/height of the rectangular tiling cell (conventional cell).
    pub cell: (f64, f64),
    reps: Vec<Isometry>,
    /// Fundamental polygon Π in fractional coordinates.
    pub fundamental: Vec<Vector2<f64>>,
}

impl WallpaperGroup {
    pub(crate) fn new(
        name: &'static str,
        aliases: &'static [&'static str],
        basis: Matrix2<f64>,
        cell: (f64, f64),
        reps: Vec<Isometry>,
        fundamental: Vec<Vector2<f64>>,
    ) -> Self {
        let basis_inv = basis.try_inverse().expect("lattice basis is invertible");
        WallpaperGroup {
            name,
            aliases,
            basis,
            basis_inv,
            cell,
            reps,
            fundamental,
        }
    }

    /// Coset representatives; `reps()[0]` is the identity.
    pub fn reps(&self) -> &[Isometry] {
        &self.reps
    }

    /// Point-group order |Ĝ|.
    pub fn order(&self) -> usize {
        self.reps.len()
    }

    pub fn basis_inv(&self) -> &Matrix2<f64> {
        &self.basis_inv
    }

    /// Cartesian action y = A·x + B·c.
    pub fn apply(&self, iso: &Isometry, x: Vector2<f64>) -> Vector2<f64> {
        iso.linear * x + self.basis * iso.frac
    }

    /// Fractional coordinates of a Cartesian point.
    pub fn to_frac(&self, x: Vector2<f64>) -> Vector2<f64> {
        self.basis_inv * x
    }

    pub fn to_cart(&self, c: Vector2<f64>) -> Vector2<f64> {
        self.basis * c
    }

    /// Composition f∘g reduced modulo lattice translations: returns the
    /// reduced isometry and the integer shift that was removed.
    pub fn compose(&self, f: &Isometry, g: &Isometry) -> (Isometry, [i64; 2]) {
        let linear = f.linear * g.linear;
        // B·c = A_f·B·c_g + B·c_f  =>  c = (B⁻¹ A_f B)·c_g + c_f
        let c = self.basis_inv * (f.linear * (self.basis * g.frac)) + f.frac;
        let mut frac = Vector2::zeros();
        let mut shift = [0_i64; 2];
        for i in 0..2 {
            let r = c[i] - c[i].floor();
            // values within tolerance of 1 wrap to 0
            let (r, carry) = if (1.0 - r).abs() <= MATCH_TOL {
                (0.0, 1)
            } else {
                (r, 0)
            };
            frac[i] = r;
            shift[i] = c[i].floor() as i64 + carry;
        }
        (Isometry { linear, frac }, shift)
    }

    /// Index of the coset representative matching `iso` (linear part exact to
    /// tolerance, fractional part compared circularly mod 1).
    pub fn rep_index(&self, iso: &Isometry) -> Option<usize> {
        self.reps.iter().position(|r| {
            let da = (r.linear - iso.linear).abs().max();
            let dc = (0..2)
                .map(|i| circular_dist(r.frac[i], iso.frac[i]))
                .fold(0.0, f64::max);
            da <= MATCH_TOL && dc <= MATCH_TOL
        })
    }

    /// Torus embedding of the lattice quotient:
    /// ρ(x) = (cos 2πu₁, sin 2πu₁, cos 2πu₂, sin 2πu₂) with u = B⁻¹x.
    pub fn torus_map(&self, x: Vector2<f64>) -> [f64; 4] {
        let u = self.basis_inv * x;
        let (s1, c1) = (std::f64::consts::TAU * u[0]).sin_cos();
        let (s2, c2) = (std::f64::consts::TAU * u[1]).sin_cos();
        [c1, s1, c2, s2]
    }

    /// Jacobian ∂ρ/∂x (4×2). Rows pair up as ∓2π·(sin, cos) times B⁻¹ rows,
    /// so the image determines the Jacobian pointwise.
    pub fn torus_jacobian(&self, x: Vector2<f64>) -> SMatrix<f64, 4, 2> {
        let tau = std::f64::consts::TAU;
        let u = self.basis_inv * x;
        let (s1, c1) = (tau * u[0]).sin_cos();
        let (s2, c2) = (tau * u[1]).sin_cos();
        let bi = &self.basis_inv;
        let mut j = SMatrix::<f64, 4, 2>::zeros();
        for k in 0..2 {
            j[(0, k)] = -tau * s1 * bi[(0, k)];
            j[(1, k)] = tau * c1 * bi[(0, k)];
            j[(2, k)] = -tau * s2 * bi[(1, k)];
            j[(3, k)] = tau * c2 * bi[(1, k)];
        }
        j
    }

    /// Group average (1/|Ĝ|) Σ_φ A_φ⁻¹ f(φx). For lattice-periodic f the
    /// result is semi-invariant: (Γf)(φx) = A_φ·(Γf)(x).
    pub fn group_average<F>(&self, f: F, x: Vector2<f64>) -> Vector2<f64>
    where
        F: Fn(Vector2<f64>) -> Vector2<f64>,
    {
        let mut acc = Vector2::zeros();
        for rep in &self.reps {
            let y = self.apply(rep, x);
            // orthogonal linear part: inverse is the transpose
            acc += rep.linear.transpose() * f(y);
        }
        acc / self.reps.len() as f64
    }
}

fn circular_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Torus embedding for an n-dimensional lattice: ρ(x) ∈ ℝ^{2n} with
/// coordinate pairs (cos 2πuᵢ, sin 2πuᵢ), u = B⁻¹x.
pub fn torus_map_general(basis_inv: &nalgebra::DMatrix<f64>, x: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
    let u = basis_inv * x;
    let n = u.len();
    let mut out = nalgebra::DVector::zeros(2 * n);
    for i in 0..n {
        let (s, c) = (std::f64::consts::TAU * u[i]).sin_cos();
        out[2 * i] = c;
        out[2 * i + 1] = s;
    }
    out
}
