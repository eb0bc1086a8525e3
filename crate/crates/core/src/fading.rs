//! Small-scale Rician fading for array channels and per-RB scalar channels.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::config::FadingConfig;
use crate::propagation::LargeScaleLink;

/// Uniform linear array description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub antennas: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

/// Rician K-factor in dB at distance `r` meters.
pub fn rician_k_factor(cfg: &FadingConfig, r: f64) -> f64 {
    cfg.k_intercept_db - cfg.k_slope_db_per_m * r
}

/// Linear K for a link: distance-dependent for LOS, zero (Rayleigh) for NLOS.
pub fn link_k_linear(cfg: &FadingConfig, link: &LargeScaleLink) -> f64 {
    if link.los {
        10f64.powf(rician_k_factor(cfg, link.distance_3d) / 10.0)
    } else {
        0.0
    }
}

/// Amplitude weights of the specular and diffuse parts.
#[inline]
pub fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

/// Zero-mean circular complex Gaussian with unit variance.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re / SQRT_2, im / SQRT_2)
}

/// Unit-modulus ULA response for a bearing `angle_deg` from broadside.
pub fn steering_vector(array: &ArrayGeometry, angle_deg: f64) -> DVector<Complex64> {
    let phase = 2.0 * PI * array.spacing * angle_deg.to_radians().sin();
    DVector::from_iterator(
        array.antennas,
        (0..array.antennas).map(|m| Complex64::from_polar(1.0, phase * m as f64)),
    )
}

/// Writes `sqrt(beta) (sqrt(K/(K+1)) a + sqrt(1/(K+1)) w)` into `out`.
pub fn fill_mimo_column<R: Rng + ?Sized>(
    out: &mut [Complex64],
    beta: f64,
    k: f64,
    bearing_deg: f64,
    spacing: f64,
    rng: &mut R,
) {
    let (spec, diff) = rician_weights(k);
    let amp = beta.sqrt();
    let phase = 2.0 * PI * spacing * bearing_deg.to_radians().sin();
    for (m, h) in out.iter_mut().enumerate() {
        let w = complex_normal(rng);
        let a = Complex64::from_polar(spec, phase * m as f64);
        *h = (a + w * diff) * amp;
    }
}

/// Draws one array channel column for a macro link.
pub fn draw_mimo_column<R: Rng + ?Sized>(
    link: &LargeScaleLink,
    k: f64,
    array: &ArrayGeometry,
    rng: &mut R,
) -> DVector<Complex64> {
    let mut v = DVector::zeros(array.antennas);
    fill_mimo_column(v.as_mut_slice(), link.beta, k, link.bearing_off, array.spacing, rng);
    v
}

/// Per-drop state of a scalar small-cell-to-UE link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLinkState {
    pub beta: f64,
    pub k: f64,
    /// Specular phase, fixed for the drop.
    pub phase: f64,
    specular: Complex64,
    diffuse: f64,
}

impl ScalarLinkState {
    pub fn new<R: Rng + ?Sized>(cfg: &FadingConfig, link: &LargeScaleLink, rng: &mut R) -> Self {
        Self::with_phase(link.beta, link_k_linear(cfg, link), rng.random_range(0.0..2.0 * PI))
    }

    pub fn with_phase(beta: f64, k: f64, phase: f64) -> Self {
        let (spec, diff) = rician_weights(k);
        let amp = beta.sqrt();
        Self {
            beta,
            k,
            phase,
            specular: Complex64::from_polar(spec * amp, phase),
            diffuse: diff * amp / SQRT_2,
        }
    }
}

/// Draws `g = sqrt(beta) (sqrt(K/(K+1)) e^{jψ} + sqrt(1/(K+1)) w)` for one RB and slot.
#[inline]
pub fn draw_scalar_channel<R: Rng + ?Sized>(state: &ScalarLinkState, rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    state.specular + Complex64::new(re, im) * state.diffuse
}

/// Draws `|g|^2` directly. Rayleigh links need a single exponential variate.
#[inline]
pub fn draw_scalar_power<R: Rng + ?Sized>(state: &ScalarLinkState, rng: &mut R) -> f64 {
    if state.k == 0.0 {
        let e: f64 = rng.sample(Exp1);
        state.beta * e
    } else {
        draw_scalar_channel(state, rng).norm_sqr()
    }
}

/// Holds a backhaul channel for `t_bh` slots before redrawing.
#[derive(Debug, Clone)]
pub struct BackhaulChannelHold<T> {
    t_bh: u64,
    epoch: Option<u64>,
    value: Option<T>,
}

impl<T> BackhaulChannelHold<T> {
    pub fn new(t_bh: u64) -> Self {
        assert!(t_bh >= 1, "hold period must be at least one slot");
        Self {
            t_bh,
            epoch: None,
            value: None,
        }
    }

    /// Coherence epoch a slot belongs to.
    pub fn epoch_of(&self, slot: u64) -> u64 {
        slot / self.t_bh
    }

    /// The channel for `slot`, drawn with `draw(epoch)` on the first slot of
    /// each hold period and reused otherwise.
    pub fn get(&mut self, slot: u64, draw: impl FnOnce(u64) -> T) -> &T {
        let epoch = self.epoch_of(slot);
        if self.epoch != Some(epoch) || self.value.is_none() {
            self.value = Some(draw(epoch));
            self.epoch = Some(epoch);
        }
        self.value.as_ref().expect("value set above")
    }

    /// True if the next `get(slot, ..)` would redraw.
    pub fn is_stale(&self, slot: u64) -> bool {
        self.epoch != Some(self.epoch_of(slot))
    }
}
