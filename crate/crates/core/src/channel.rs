//! System parameters, fading channels and beamformers.
//!
//! The primary transmitter (PT) has `M` antennas. It reaches the primary
//! receiver (PR) directly through `h1` and through the BD via the forward
//! link `h2` and the static backward scalar `g`. Path loss is 0 dB on both
//! links, so the relative gain of the backscatter link is set entirely by
//! `α|g|²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::Complex64;

/// `aᴴ b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `‖a‖²`.
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Scenario constants shared by every realization of an experiment.
///
/// `transmit_power` and `noise_power` are linear and only their ratio (the
/// received SNR) matters. `spreading = 1` is the parasitic setup; larger
/// values are commensal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub antennas: usize,
    pub transmit_power: f64,
    pub noise_power: f64,
    pub reflection: f64,
    pub spreading: u32,
    pub weight: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            antennas: 2,
            transmit_power: 10.0,
            noise_power: 1.0,
            reflection: 0.1,
            spreading: 1,
            weight: 0.5,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.antennas < 2 {
            return bad(format!("antennas must be >= 2, got {}", self.antennas));
        }
        if !(self.transmit_power.is_finite() && self.transmit_power > 0.0) {
            return bad(format!("transmit_power must be > 0, got {}", self.transmit_power));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return bad(format!("noise_power must be > 0, got {}", self.noise_power));
        }
        if !(0.0..=1.0).contains(&self.reflection) {
            return bad(format!("reflection must be in [0, 1], got {}", self.reflection));
        }
        if self.spreading < 1 {
            return bad("spreading must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.weight) {
            return bad(format!("weight must be in [0, 1], got {}", self.weight));
        }
        Ok(())
    }

    /// `true` for the parasitic setup (`N = 1`).
    pub fn is_psr(&self) -> bool {
        self.spreading == 1
    }

    /// Received SNR `p / σ²` in dB.
    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.transmit_power / self.noise_power)
    }

    /// Copy with `p / σ² = 10^{snr_db/10}` (noise power kept).
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.transmit_power = self.noise_power * db_to_linear(snr_db);
        self
    }
}

/// One fading block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h1: Vec<Complex64>,
    pub h2: Vec<Complex64>,
    pub g: Complex64,
}

impl ChannelRealization {
    pub fn antennas(&self) -> usize {
        self.h1.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.h1.len() != self.h2.len() {
            return Err(Error::InvalidParams(format!(
                "h1 has {} entries but h2 has {}",
                self.h1.len(),
                self.h2.len()
            )));
        }
        if self.h1.is_empty() {
            return Err(Error::InvalidParams("channel vectors are empty".into()));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !self.h1.iter().chain(&self.h2).all(finite) || !finite(&self.g) {
            return Err(Error::InvalidParams("channel entries must be finite".into()));
        }
        if norm_sqr(&self.h1) == 0.0 && norm_sqr(&self.h2) == 0.0 {
            return Err(Error::DegenerateChannel("h1 and h2 are both zero".into()));
        }
        Ok(())
    }

    /// Multiplies both vectors by unit-modulus phases. Rates are unchanged.
    pub fn rotated(&self, phase1: Complex64, phase2: Complex64) -> Self {
        Self {
            h1: self.h1.iter().map(|z| z * phase1).collect(),
            h2: self.h2.iter().map(|z| z * phase2).collect(),
            g: self.g,
        }
    }
}

/// Unit-norm transmit beamformer with a fixed global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    w: Vec<Complex64>,
}

impl Beamformer {
    /// Normalizes `w`. Fails on the zero vector or non-finite entries.
    pub fn new(w: Vec<Complex64>) -> Result<Self> {
        let n = norm_sqr(&w).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidParams("beamformer must be finite and nonzero".into()));
        }
        Ok(Self {
            w: w.into_iter().map(|z| z / n).collect(),
        })
    }

    /// Normalized and rotated to the canonical phase for `ch`.
    pub fn canonical(w: Vec<Complex64>, ch: &ChannelRealization) -> Result<Self> {
        Ok(Self::new(w)?.canonicalized(ch))
    }

    /// Rotates the global phase so that `h1ᴴw` is real and nonnegative.
    /// When `h1ᴴw = 0` the reference falls back to `h2ᴴw`, then to the first
    /// nonzero entry of `w`.
    pub fn canonicalized(mut self, ch: &ChannelRealization) -> Self {
        let scale = norm_sqr(&self.w).sqrt();
        let mut reference = Complex64::new(0.0, 0.0);
        for h in [&ch.h1, &ch.h2] {
            let z = inner(h, &self.w);
            if z.norm() > 1e-13 * scale * norm_sqr(h).sqrt() {
                reference = z;
                break;
            }
        }
        if reference.norm() == 0.0 {
            if let Some(z) = self.w.iter().find(|z| z.norm() > 0.0) {
                reference = *z;
            }
        }
        if reference.norm() > 0.0 {
            // reference = |r| e^{iθ}; multiplying w by e^{-iθ} makes it |r|.
            let rot = reference.conj() / reference.norm();
            for z in &mut self.w {
                *z *= rot;
            }
        }
        self
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Draws `h1, h2 ~ CN(0, I_M)` from stream `seed` and sets a real positive
/// `g` with `10 log10(α|g|²) = delta_gamma_db`. With `α = 0` the gain cannot
/// be matched and `g = 10^{ΔΓ/20}` is used instead.
pub fn generate_channels(params: &SystemParams, delta_gamma_db: f64, seed: u64) -> ChannelRealization {
    let mut stream = Stream::new(seed);
    generate_with(&mut stream, params.antennas, params.reflection, delta_gamma_db)
}

pub(crate) fn generate_with(
    stream: &mut Stream,
    antennas: usize,
    reflection: f64,
    delta_gamma_db: f64,
) -> ChannelRealization {
    let h1 = stream.cn_vec(antennas);
    let h2 = stream.cn_vec(antennas);
    ChannelRealization {
        h1,
        h2,
        g: Complex64::new(backward_gain(reflection, delta_gamma_db), 0.0),
    }
}

/// Real positive `|g|` giving relative gain `delta_gamma_db` at reflection `α`.
pub fn backward_gain(reflection: f64, delta_gamma_db: f64) -> f64 {
    if reflection > 0.0 {
        (db_to_linear(delta_gamma_db) / reflection).sqrt()
    } else {
        10f64.powf(delta_gamma_db / 20.0)
    }
}

/// Relative gain `10 log10(α|g|²)` in dB under unit-variance fading.
/// Returns `-∞` when `α|g|² = 0`.
pub fn relative_gain(ch: &ChannelRealization, reflection: f64) -> f64 {
    let gain = reflection * ch.g.norm_sqr();
    if gain == 0.0 {
        f64::NEG_INFINITY
    } else {
        linear_to_db(gain)
    }
}

/// `h1 + √α c g h2`, the channel seen by the primary receiver while the BD
/// holds symbol `c`.
pub fn equivalent_channel(ch: &ChannelRealization, reflection: f64, c: Complex64) -> Vec<Complex64> {
    let k = c * ch.g * reflection.sqrt();
    ch.h1.iter().zip(&ch.h2).map(|(a, b)| a + k * b).collect()
}

/// A list of realizations sharing one antenna count.
///
/// JSON form, complex numbers as `[re, im]` pairs:
///
/// ```json
/// {"antennas": 2,
///  "realizations": [{"h1": [[1.0, 0.0], [0.0, 1.0]],
///                    "h2": [[0.5, 0.5], [0.0, 0.0]],
///                    "g": [0.3, 0.0]}]}
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnsemble {
    pub antennas: usize,
    pub realizations: Vec<ChannelRealization>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRealization {
    h1: Vec<[f64; 2]>,
    h2: Vec<[f64; 2]>,
    g: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    antennas: usize,
    realizations: Vec<RawRealization>,
}

fn to_complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl ChannelEnsemble {
    pub fn generate(params: &SystemParams, delta_gamma_db: f64, count: usize, seed: u64) -> Self {
        let realizations = (0..count as u64)
            .map(|i| generate_channels(params, delta_gamma_db, crate::rng::derive_seed(seed, i)))
            .collect();
        Self {
            antennas: params.antennas,
            realizations,
        }
    }

    /// Parses and validates the JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawEnsemble =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel ensemble: {e}")))?;
        if raw.antennas < 1 {
            return Err(Error::Parse("antennas must be >= 1".into()));
        }
        let mut realizations = Vec::with_capacity(raw.realizations.len());
        for (i, r) in raw.realizations.into_iter().enumerate() {
            let ch = ChannelRealization {
                h1: to_complex(&r.h1),
                h2: to_complex(&r.h2),
                g: Complex64::new(r.g[0], r.g[1]),
            };
            if ch.h1.len() != raw.antennas || ch.h2.len() != raw.antennas {
                return Err(Error::Parse(format!(
                    "realization {i}: expected {} antennas, got h1={} h2={}",
                    raw.antennas,
                    ch.h1.len(),
                    ch.h2.len()
                )));
            }
            ch.validate()
                .map_err(|e| Error::Parse(format!("realization {i}: {e}")))?;
            realizations.push(ch);
        }
        Ok(Self {
            antennas: raw.antennas,
            realizations,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawEnsemble {
            antennas: self.antennas,
            realizations: self
                .realizations
                .iter()
                .map(|ch| RawRealization {
                    h1: to_pairs(&ch.h1),
                    h2: to_pairs(&ch.h2),
                    g: [ch.g.re, ch.g.im],
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("ensemble serializes")
    }
}
