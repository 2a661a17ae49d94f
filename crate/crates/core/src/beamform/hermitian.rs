//! 2×2 Hermitian matrices in Bloch form.
//!
//! Any 2×2 Hermitian `H = [[a, b], [b*, d]]` is written as
//! `h0·I + hx·σx + hy·σy + hz·σz` with `h0 = (a+d)/2`, `hx = Re b`,
//! `hy = −Im b`, `hz = (a−d)/2`. Then `Tr(HK) = 2(h0 k0 + h·k)`, the
//! eigenvalues are `h0 ± |h|`, and a trace-`p` PSD matrix is
//! `(p/2)(I + r·σ)` for a Bloch vector `r` in the unit ball. Rank one means
//! `|r| = 1`.

use crate::Complex64;

pub type Vec3 = [f64; 3];

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vector along `a`, or `None` for the zero vector.
pub fn unit3(a: Vec3) -> Option<Vec3> {
    let n = norm3(a);
    (n > 0.0).then(|| scale3(a, 1.0 / n))
}

/// Some unit vector orthogonal to the unit vector `a`.
pub fn orthogonal3(a: Vec3) -> Vec3 {
    // Cross with the axis least aligned with `a`.
    let axis = if a[0].abs() <= a[1].abs() && a[0].abs() <= a[2].abs() {
        [1.0, 0.0, 0.0]
    } else if a[1].abs() <= a[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    unit3(cross3(a, axis)).expect("nonparallel axis")
}

/// A 2×2 Hermitian matrix `[[a, b], [b*, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian2 {
    pub a: f64,
    pub d: f64,
    pub b: Complex64,
}

/// Eigen-decomposition `H = Σ λ_k u_k u_kᴴ` with `λ_0 ≥ λ_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub vectors: [[Complex64; 2]; 2],
}

impl Hermitian2 {
    pub fn new(a: f64, d: f64, b: Complex64) -> Self {
        Self { a, d, b }
    }

    /// `u uᴴ`.
    pub fn outer(u: [Complex64; 2]) -> Self {
        Self {
            a: u[0].norm_sqr(),
            d: u[1].norm_sqr(),
            b: u[0] * u[1].conj(),
        }
    }

    /// `(p/2)(I + r·σ)`.
    pub fn from_bloch(p: f64, r: Vec3) -> Self {
        let h = 0.5 * p;
        Self {
            a: h * (1.0 + r[2]),
            d: h * (1.0 - r[2]),
            b: Complex64::new(h * r[0], -h * r[1]),
        }
    }

    /// `(h0, [hx, hy, hz])`.
    pub fn bloch(&self) -> (f64, Vec3) {
        (
            0.5 * (self.a + self.d),
            [self.b.re, -self.b.im, 0.5 * (self.a - self.d)],
        )
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// `Tr(self · other)`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let (h0, h) = self.bloch();
        let (k0, k) = other.bloch();
        2.0 * (h0 * k0 + dot3(h, k))
    }

    /// `eᴴ H e`.
    pub fn quadratic(&self, e: [Complex64; 2]) -> f64 {
        self.a * e[0].norm_sqr() + self.d * e[1].norm_sqr() + 2.0 * (e[0].conj() * self.b * e[1]).re
    }

    pub fn eigen(&self) -> Eigen2 {
        let (h0, h) = self.bloch();
        let radius = norm3(h);
        let n = unit3(h).unwrap_or([0.0, 0.0, 1.0]);
        let top = bloch_eigenvector(n);
        let bottom = bloch_eigenvector(scale3(n, -1.0));
        Eigen2 {
            values: [h0 + radius, h0 - radius],
            vectors: [top, bottom],
        }
    }

    /// `λ_min / λ_max` (0 for rank one, 1 for a multiple of identity).
    pub fn rank_ratio(&self) -> f64 {
        let e = self.eigen();
        if e.values[0] <= 0.0 {
            return 0.0;
        }
        (e.values[1] / e.values[0]).max(0.0)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigen().values[1] >= -tol
    }
}

/// Unit `u` with `u uᴴ = (I + n·σ)/2` for a unit Bloch vector `n`.
pub fn bloch_eigenvector(n: Vec3) -> [Complex64; 2] {
    if n[2] >= 0.0 {
        let s = (2.0 * (1.0 + n[2])).sqrt();
        [
            Complex64::new((1.0 + n[2]) / s, 0.0),
            Complex64::new(n[0] / s, n[1] / s),
        ]
    } else {
        let s = (2.0 * (1.0 - n[2])).sqrt();
        [
            Complex64::new(n[0] / s, -n[1] / s),
            Complex64::new((1.0 - n[2]) / s, 0.0),
        ]
    }
}

/// Bloch coefficients `(k0, k)` of `e eᴴ`, so that `eᴴ X e = 2(k0 x0 + k·x)`.
/// For `X = (1/2)(I + r·σ)` this is `k0 + k·r`.
pub fn outer_bloch(e: [Complex64; 2]) -> (f64, Vec3) {
    Hermitian2::outer(e).bloch()
}
