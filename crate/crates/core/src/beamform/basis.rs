//! The two-dimensional subspace spanned by the normalized channels.
//!
//! An optimal beamformer lies in `span{h̃1, h̃2}`, so every problem here is
//! solved over unit vectors `u ∈ C²` in an orthonormal basis `Q = [q1, q2]`
//! of that span, mapped back with `w = Q u`. With `q1 = h̃1` and `q2` the
//! normalized residual of `h̃2`, the channels become
//! `e1 = Qᴴh1 = (‖h1‖, 0)` and `e2 = Qᴴh2 = (q1ᴴh2, q2ᴴh2)` with the second
//! entry real and nonnegative.

use crate::channel::{equivalent_channel, inner, norm_sqr, ChannelRealization};
use crate::error::{Error, Result};
use crate::Complex64;

use super::hermitian::{
    add3, cross3, dot3, norm3, orthogonal3, outer_bloch, scale3, sub3, unit3, Hermitian2, Vec3,
};

/// Threshold on `|h̃1ᴴh̃2|` above which the channels count as parallel.
pub const COLLINEAR_TOL: f64 = 1e-10;

/// Reduced basis of one realization.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    /// `B = [h̃1, h̃2]`.
    pub b: [Vec<Complex64>; 2],
    /// Orthonormal `Q = [q1, q2]` with `q1 = h̃1`.
    pub q: [Vec<Complex64>; 2],
    /// `R = QᴴB`, stored by columns, so `B = Q R`.
    pub r: [[Complex64; 2]; 2],
    /// `Qᴴh1` and `Qᴴh2`.
    pub e1: [Complex64; 2],
    pub e2: [Complex64; 2],
    /// `G1 = Bᴴh1h1ᴴB`.
    pub gram_g1: Hermitian2,
    /// `G2 = α|g|² Bᴴh2h2ᴴB`.
    pub gram_g2: Hermitian2,
    /// `α|g|²`.
    pub backscatter_gain: f64,
    /// `true` when `h1 ∥ h2` and `q2` is an arbitrary completion.
    pub degenerate: bool,
    reflection: f64,
}

fn normalized(v: &[Complex64]) -> Vec<Complex64> {
    let n = norm_sqr(v).sqrt();
    v.iter().map(|z| z / n).collect()
}

/// Unit vector orthogonal to the unit vector `q1`, built from the standard
/// basis vector least aligned with it.
fn completion(q1: &[Complex64]) -> Vec<Complex64> {
    let k = q1
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut v: Vec<Complex64> = q1.iter().map(|z| -q1[k].conj() * z).collect();
    v[k] += 1.0;
    normalized(&v)
}

/// Builds the reduced basis. Fails if either channel vector is zero.
pub fn reduce_basis(ch: &ChannelRealization, reflection: f64) -> Result<ReducedBasis> {
    ch.validate()?;
    let n1 = norm_sqr(&ch.h1).sqrt();
    let n2 = norm_sqr(&ch.h2).sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::DegenerateChannel(
            "the reduced basis needs nonzero h1 and h2".into(),
        ));
    }
    let t1 = normalized(&ch.h1);
    let t2 = normalized(&ch.h2);
    let overlap = inner(&t1, &t2);
    let degenerate = overlap.norm() > 1.0 - COLLINEAR_TOL;
    let q2 = if degenerate {
        completion(&t1)
    } else {
        let resid: Vec<Complex64> = t2.iter().zip(&t1).map(|(b, a)| b - overlap * a).collect();
        normalized(&resid)
    };
    let q = [t1.clone(), q2];
    let proj = |v: &[Complex64]| [inner(&q[0], v), inner(&q[1], v)];
    let r = [proj(&t1), proj(&t2)];
    // Exact by construction; fix the rounding in the zero and real entries.
    let e1 = [Complex64::new(n1, 0.0), Complex64::new(0.0, 0.0)];
    let mut e2 = proj(&ch.h2);
    e2[1] = Complex64::new(e2[1].norm(), 0.0);
    let backscatter_gain = reflection * ch.g.norm_sqr();
    let in_b = |v: &[Complex64]| [inner(&t1, v).conj(), inner(&t2, v).conj()];
    let mut gram_g2 = Hermitian2::outer(in_b(&ch.h2));
    gram_g2.a *= backscatter_gain;
    gram_g2.d *= backscatter_gain;
    gram_g2.b *= backscatter_gain;
    Ok(ReducedBasis {
        gram_g1: Hermitian2::outer(in_b(&ch.h1)),
        gram_g2,
        b: [t1, t2],
        q,
        r,
        e1,
        e2,
        backscatter_gain,
        degenerate,
        reflection,
    })
}

impl ReducedBasis {
    /// `w = Q u`.
    pub fn expand(&self, u: [Complex64; 2]) -> Vec<Complex64> {
        self.q[0]
            .iter()
            .zip(&self.q[1])
            .map(|(a, b)| a * u[0] + b * u[1])
            .collect()
    }

    /// `B a` for coefficients on the normalized channels.
    pub fn expand_coefficients(&self, a: [Complex64; 2]) -> Vec<Complex64> {
        self.b[0]
            .iter()
            .zip(&self.b[1])
            .map(|(x, y)| x * a[0] + y * a[1])
            .collect()
    }

    /// Coordinates `u = Qᴴw` of `w` (exact for `w` in the span).
    pub fn coordinates(&self, w: &[Complex64]) -> [Complex64; 2] {
        [inner(&self.q[0], w), inner(&self.q[1], w)]
    }

    /// Link gains `(|e1ᴴu|², |e2ᴴu|²)`.
    pub fn gains(&self, u: [Complex64; 2]) -> (f64, f64) {
        let g1 = self.e1[0].conj() * u[0] + self.e1[1].conj() * u[1];
        let g2 = self.e2[0].conj() * u[0] + self.e2[1].conj() * u[1];
        (g1.norm_sqr(), g2.norm_sqr())
    }

    /// `Bᴴ h_eq(c) h_eq(c)ᴴ B` for the equivalent channel with BD symbol `c`.
    pub fn gram_eq(&self, ch: &ChannelRealization, c: Complex64) -> Hermitian2 {
        let heq = equivalent_channel(ch, self.reflection, c);
        Hermitian2::outer([inner(&self.b[0], &heq).conj(), inner(&self.b[1], &heq).conj()])
    }

    /// Gains as affine functions of the Bloch vector.
    pub fn model(&self) -> GainModel {
        GainModel::new(self.e1, self.e2, self.backscatter_gain)
    }
}

/// Affine view of the gains over unit-trace `X = (I + r·σ)/2`:
/// `x1 = c1 + v1·r`, `x2 = c2 + v2·r`, and the cross term
/// `e1ᴴXe2 = z0 + Σ r_k z_k`.
#[derive(Debug, Clone, Copy)]
pub struct GainModel {
    pub c1: f64,
    pub v1: Vec3,
    pub c2: f64,
    pub v2: Vec3,
    pub z0: Complex64,
    pub z: [Complex64; 3],
    /// `α|g|²`.
    pub kappa_sqr: f64,
    /// Orthonormal pair spanning `v1, v2`; the rank-one boundary of the
    /// gain region is the image of the great circle they span.
    pub n1: Vec3,
    pub n2: Vec3,
    /// `v1 ∥ v2`: the gain region collapses to a segment.
    pub aligned: bool,
}

impl GainModel {
    fn new(e1: [Complex64; 2], e2: [Complex64; 2], kappa_sqr: f64) -> Self {
        let (c1, v1) = outer_bloch(e1);
        let (c2, v2) = outer_bloch(e2);
        let i = Complex64::new(0.0, 1.0);
        let cross = |m: [[Complex64; 2]; 2]| {
            let me2 = [m[0][0] * e2[0] + m[0][1] * e2[1], m[1][0] * e2[0] + m[1][1] * e2[1]];
            0.5 * (e1[0].conj() * me2[0] + e1[1].conj() * me2[1])
        };
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let z0 = cross([[one, zero], [zero, one]]);
        let z = [
            cross([[zero, one], [one, zero]]),
            cross([[zero, -i], [i, zero]]),
            cross([[one, zero], [zero, -one]]),
        ];
        let n1 = unit3(v1).unwrap_or([0.0, 0.0, 1.0]);
        let along = dot3(v2, n1);
        let perp = sub3(v2, scale3(n1, along));
        let aligned = norm3(perp) <= 1e-12 * norm3(v2).max(f64::MIN_POSITIVE);
        let n2 = if aligned {
            orthogonal3(n1)
        } else {
            unit3(perp).expect("nonzero perpendicular")
        };
        Self {
            c1,
            v1,
            c2,
            v2,
            z0,
            z,
            kappa_sqr,
            n1,
            n2,
            aligned,
        }
    }

    pub fn gains(&self, r: Vec3) -> (f64, f64) {
        (
            (self.c1 + dot3(self.v1, r)).max(0.0),
            (self.c2 + dot3(self.v2, r)).max(0.0),
        )
    }

    /// `|e1ᴴXe2|` for unit-trace `X`, with its gradient in `r`.
    pub fn cross_magnitude(&self, r: Vec3) -> (f64, Vec3) {
        let s = self.z0 + self.z[0] * r[0] + self.z[1] * r[1] + self.z[2] * r[2];
        let m = s.norm();
        if m == 0.0 {
            return (0.0, [0.0; 3]);
        }
        let g = [0, 1, 2].map(|k| (s.conj() * self.z[k]).re / m);
        (m, g)
    }

    /// Point of the great circle at angle `psi`.
    pub fn circle(&self, psi: f64) -> Vec3 {
        let (s, c) = psi.sin_cos();
        add3(scale3(self.n1, c), scale3(self.n2, s))
    }

    /// Circle angle of the unit vector `r` (assumed in the circle's plane).
    pub fn angle_of(&self, r: Vec3) -> f64 {
        dot3(r, self.n2).atan2(dot3(r, self.n1))
    }

    /// Normal of the circle's plane.
    pub fn normal(&self) -> Vec3 {
        cross3(self.n1, self.n2)
    }
}
