//! Uplink pilot training with reuse and contamination, zero-forcing
//! precoding with equal power split, and downlink per-stream SINR.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::config::{FrameParams, PilotScheme};
use crate::error::{Result, SimError};
use crate::fading::complex_normal;
use crate::topology::NetworkLayout;

pub type CMatrix = DMatrix<Complex64>;

/// Pilot reuse pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotReuse {
    R1,
    R3,
    /// Network-wide orthogonal pilots (static backhaul links).
    OrthogonalBackhaul,
}

/// Orthonormal pilot code-book, one row per device.
#[derive(Debug, Clone)]
pub struct PilotBook {
    /// L x S with orthonormal rows.
    pub phi: CMatrix,
    pub reuse: PilotReuse,
    /// Training overhead in OFDM symbols.
    pub tau: usize,
}

impl PilotBook {
    pub fn devices(&self) -> usize {
        self.phi.nrows()
    }

    pub fn length(&self) -> usize {
        self.phi.ncols()
    }
}

/// First `l_devices` rows of the unitary `s_length`-point DFT basis.
pub fn make_pilot_book(l_devices: usize, s_length: usize) -> Result<PilotBook> {
    if l_devices > s_length {
        return Err(SimError::PilotCapacity {
            devices: l_devices,
            sequences: s_length,
        });
    }
    Ok(PilotBook {
        phi: dft_rows(0, l_devices, s_length),
        reuse: PilotReuse::R1,
        tau: 1,
    })
}

/// Rows `first..first+count` of the unitary `n`-point DFT.
pub fn dft_rows(first: usize, count: usize, n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(count, n, |r, c| {
        let k = ((first + r) * c) % n.max(1);
        Complex64::from_polar(scale, -2.0 * std::f64::consts::PI * k as f64 / n as f64)
    })
}

/// Pilot group of every sector; sectors in the same group share pilots.
#[derive(Debug, Clone)]
pub struct PilotGroups {
    pub reuse: PilotReuse,
    pub group: Vec<usize>,
    /// Training symbols per slot.
    pub tau: usize,
}

impl PilotGroups {
    /// Sectors other than `sector` that reuse its pilot group.
    pub fn contaminators(&self, sector: usize) -> Vec<usize> {
        let g = self.group[sector];
        (0..self.group.len())
            .filter(|&j| j != sector && self.group[j] == g)
            .collect()
    }

    /// Every sector in its own group: no contamination.
    pub fn orthogonal(n_sectors: usize) -> Self {
        Self {
            reuse: PilotReuse::OrthogonalBackhaul,
            group: (0..n_sectors).collect(),
            tau: 0,
        }
    }
}

/// R1 puts every sector in group 0 (τ = tau_r1); R3 groups sectors by their
/// index within the site (τ = tau_r3).
pub fn assign_pilot_groups(
    layout: &NetworkLayout,
    scheme: PilotScheme,
    frame: &FrameParams,
) -> PilotGroups {
    match scheme {
        PilotScheme::R1 => PilotGroups {
            reuse: PilotReuse::R1,
            group: vec![0; layout.n_sectors()],
            tau: frame.tau_r1,
        },
        PilotScheme::R3 => PilotGroups {
            reuse: PilotReuse::R3,
            group: layout.sectors.iter().map(|s| s.local_index).collect(),
            tau: frame.tau_r3,
        },
    }
}

#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// M x L estimate.
    pub h_hat: CMatrix,
    pub contaminators: Vec<usize>,
    pub pilot_power: f64,
    /// Receiver noise power before correlation, watts.
    pub noise_power: f64,
}

/// Post-correlation estimate `H + Σ contaminating H + N Φᴴ / sqrt(P)`.
///
/// `contaminating` holds `(sector, H_{i,i'})` pairs; column `l` of each
/// contaminating matrix lands on column `l` of the estimate, so sectors with
/// fewer devices only contaminate the first pilots. The correlated noise has
/// per-entry variance `noise_power / pilot_power`.
pub fn estimate_channel<R: Rng + ?Sized>(
    own: &CMatrix,
    contaminating: &[(usize, &CMatrix)],
    pilot_power: f64,
    noise_power: f64,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    let mut h_hat = own.clone();
    for (sector, h) in contaminating {
        if h.nrows() != own.nrows() {
            return Err(SimError::Internal(format!(
                "contaminating channel from sector {sector} has {} rows, expected {}",
                h.nrows(),
                own.nrows()
            )));
        }
        for l in 0..own.ncols().min(h.ncols()) {
            let mut dst = h_hat.column_mut(l);
            dst += h.column(l);
        }
    }
    if noise_power > 0.0 {
        let sd = (noise_power / pilot_power).sqrt();
        for z in h_hat.iter_mut() {
            *z += complex_normal(rng) * sd;
        }
    }
    Ok(ChannelEstimate {
        h_hat,
        contaminators: contaminating.iter().map(|(s, _)| *s).collect(),
        pilot_power,
        noise_power,
    })
}

/// Received training block `Y = sqrt(P) Σ H_{i'} Φ_{i'} + N`.
pub fn received_pilots(channels: &[(&CMatrix, &CMatrix)], pilot_power: f64, noise: &CMatrix) -> CMatrix {
    let mut y = noise.clone();
    for (h, phi) in channels {
        y += (*h * *phi) * Complex64::from(pilot_power.sqrt());
    }
    y
}

/// Correlates the training block with the own code-book: `Y Φᴴ / sqrt(P)`.
pub fn correlate_pilots(y: &CMatrix, phi: &CMatrix, pilot_power: f64) -> CMatrix {
    (y * phi.adjoint()) / Complex64::from(pilot_power.sqrt())
}

/// Unit-norm ZF directions and per-stream powers.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    /// M x L, unit-norm columns.
    pub directions: CMatrix,
    pub powers: Vec<f64>,
}

impl PrecoderSet {
    pub fn streams(&self) -> usize {
        self.powers.len()
    }

    pub fn total_power(&self) -> f64 {
        self.powers
            .iter()
            .enumerate()
            .map(|(l, p)| p * self.directions.column(l).norm_squared())
            .sum()
    }
}

/// Ratio of extreme singular values.
pub fn condition_number(h: &CMatrix) -> f64 {
    if h.ncols() > h.nrows() {
        return f64::INFINITY;
    }
    let sv = h.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Zero-forcing precoder `Ĥ (ĤᴴĤ)⁻¹` with columns normalized and the total
/// power split equally across streams.
pub fn zf_precoder(h_hat: &CMatrix, p_total: f64, condition_threshold: f64) -> Result<PrecoderSet> {
    let l = h_hat.ncols();
    if l == 0 {
        return Ok(PrecoderSet {
            directions: CMatrix::zeros(h_hat.nrows(), 0),
            powers: Vec::new(),
        });
    }
    let cond = condition_number(h_hat);
    if !(cond <= condition_threshold) {
        return Err(SimError::Precoder {
            condition: cond,
            threshold: condition_threshold,
        });
    }
    let gram = h_hat.adjoint() * h_hat;
    let inv = gram
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(SimError::Precoder {
            condition: f64::INFINITY,
            threshold: condition_threshold,
        })?;
    let mut directions = h_hat * inv;
    for mut col in directions.column_iter_mut() {
        let n = col.norm();
        col /= Complex64::from(n);
    }
    Ok(PrecoderSet {
        directions,
        powers: vec![p_total / l as f64; l],
    })
}

/// `Σ_j ρ_j |hᴴ w_j|²` split into the stream `skip` term and the rest.
#[inline]
fn received_split(h: &[Complex64], p: &PrecoderSet, skip: Option<usize>) -> (f64, f64) {
    let m = h.len();
    let dirs = p.directions.as_slice();
    let mut own = 0.0;
    let mut rest = 0.0;
    for (j, &rho) in p.powers.iter().enumerate() {
        let w = &dirs[j * m..(j + 1) * m];
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in h.iter().zip(w) {
            acc += a.conj() * b;
        }
        let pw = rho * acc.norm_sqr();
        if Some(j) == skip {
            own = pw;
        } else {
            rest += pw;
        }
    }
    (own, rest)
}

/// Signal, intra-cell and inter-cell powers of one stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamPowers {
    pub signal: f64,
    pub intra: f64,
    pub inter: f64,
}

impl StreamPowers {
    pub fn sinr(&self, noise: f64) -> f64 {
        self.signal / (self.intra + self.inter + noise)
    }
}

/// Powers seen by `device` for stream `stream` of sector `serving`.
///
/// `channels[i]` is the true M x N matrix from sector `i` to all devices;
/// sectors with `None` precoders are silent.
pub fn stream_powers(
    channels: &[CMatrix],
    precoders: &[Option<PrecoderSet>],
    serving: usize,
    stream: usize,
    device: usize,
) -> StreamPowers {
    let mut out = StreamPowers {
        signal: 0.0,
        intra: 0.0,
        inter: 0.0,
    };
    for (i, (h, p)) in channels.iter().zip(precoders).enumerate() {
        let Some(p) = p else { continue };
        let m = h.nrows();
        let col = &h.as_slice()[device * m..(device + 1) * m];
        if i == serving {
            let (s, r) = received_split(col, p, Some(stream));
            out.signal = s;
            out.intra = r;
        } else {
            out.inter += received_split(col, p, None).1;
        }
    }
    out
}

/// Downlink SINR of stream `stream` of sector `serving` at `device`,
/// using true channels and estimate-derived precoders.
pub fn mimo_sinr(
    channels: &[CMatrix],
    precoders: &[Option<PrecoderSet>],
    serving: usize,
    stream: usize,
    device: usize,
    noise: f64,
) -> f64 {
    stream_powers(channels, precoders, serving, stream, device).sinr(noise)
}
