//! Large-scale channel: LOS state, path loss, shadowing and antenna gains
//! for macro-to-small-cell, macro-to-UE and small-cell-to-UE links.
//!
//! Path loss is log-distance in km on the 3-D wrap-minimal distance; LOS
//! probability is evaluated on the 2-D distance. Each link's LOS state and
//! shadowing value are drawn once per drop.

pub mod antenna;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use antenna::{antenna_gain, AntennaPattern, AntennaSet, PatternKind};

use crate::config::{LinkModel, LosProbability, PropagationConfig};
use crate::error::{Result, SimError};
use crate::rng::{DropStreams, Purpose};
use crate::topology::{NetworkLayout, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkType {
    MacroToSc,
    MacroToUe,
    ScToUe,
}

impl LinkType {
    pub const ALL: [LinkType; 3] = [LinkType::MacroToSc, LinkType::MacroToUe, LinkType::ScToUe];

    pub fn name(self) -> &'static str {
        match self {
            LinkType::MacroToSc => "macro_to_sc",
            LinkType::MacroToUe => "macro_to_ue",
            LinkType::ScToUe => "sc_to_ue",
        }
    }

    fn purpose(self) -> Purpose {
        match self {
            LinkType::MacroToSc => Purpose::MacroToScLink,
            LinkType::MacroToUe => Purpose::MacroToUeLink,
            LinkType::ScToUe => Purpose::ScToUeLink,
        }
    }
}

impl fmt::Display for LinkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkType {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        LinkType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| SimError::config(format!("unknown link type {s:?}")))
    }
}

impl PropagationConfig {
    pub fn model(&self, t: LinkType) -> &LinkModel {
        match t {
            LinkType::MacroToSc => &self.macro_to_sc,
            LinkType::MacroToUe => &self.macro_to_ue,
            LinkType::ScToUe => &self.sc_to_ue,
        }
    }

    /// LOS probability at 2-D distance `distance_2d` (meters).
    pub fn los_probability(&self, t: LinkType, distance_2d: f64) -> f64 {
        los_probability(&self.model(t).los_probability, distance_2d)
    }

    /// Path loss in dB at 3-D distance (meters). Distances below
    /// `min_distance` are clamped; the flag reports whether that happened.
    pub fn path_loss(&self, t: LinkType, distance_3d: f64, los: bool) -> (f64, bool) {
        let clamped = distance_3d < self.min_distance;
        let d = distance_3d.max(self.min_distance);
        let m = self.model(t);
        let branch = if los { m.los } else { m.nlos };
        (branch.intercept_db + branch.slope_db * (d / 1000.0).log10(), clamped)
    }

    pub fn shadowing_sigma(&self, t: LinkType, los: bool) -> f64 {
        let m = self.model(t);
        if los {
            m.shadowing_los_db
        } else {
            m.shadowing_nlos_db
        }
    }

    /// Zero-mean Gaussian shadowing in dB.
    pub fn draw_shadowing<R: Rng + ?Sized>(&self, t: LinkType, los: bool, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        z * self.shadowing_sigma(t, los)
    }
}

pub fn los_probability(model: &LosProbability, distance_2d: f64) -> f64 {
    let r = distance_2d.max(0.0) / 1000.0;
    let p = match *model {
        LosProbability::Macro { knee_km, decay_km } => {
            let e = (-r / decay_km).exp();
            let near = if r > 0.0 { (knee_km / r).min(1.0) } else { 1.0 };
            near * (1.0 - e) + e
        }
        LosProbability::ShortRange {
            plateau,
            scale,
            far_km,
            near_km,
        } => {
            let far = if r > 0.0 { scale * (-far_km / r).exp() } else { 0.0 };
            plateau - plateau.min(far) + plateau.min(scale * (-r / near_km).exp())
        }
    };
    p.clamp(0.0, 1.0)
}

/// One transmitter-receiver pair for a single drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleLink {
    pub tx: u32,
    pub rx: u32,
    pub link_type: LinkType,
    pub distance_2d: f64,
    pub distance_3d: f64,
    pub los: bool,
    pub path_loss: f64,
    pub shadowing: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    /// Linear power gain including antenna gains.
    pub beta: f64,
    /// Receiver bearing relative to the transmitter boresight azimuth, degrees.
    pub bearing_off: f64,
}

impl LargeScaleLink {
    /// Net loss in dB; `beta = 10^(-loss/10)`.
    pub fn loss_db(&self) -> f64 {
        self.path_loss + self.shadowing - self.tx_gain - self.rx_gain
    }
}

/// A node's position, height and antenna for link-table construction.
#[derive(Debug, Clone, Copy)]
pub struct Endpoint<'a> {
    pub position: Vec2,
    pub height: f64,
    pub pattern: &'a AntennaPattern,
    pub azimuth_deg: f64,
}

/// All links of one type for one drop, stored receiver-major.
#[derive(Debug, Clone)]
pub struct LinkTable {
    pub link_type: LinkType,
    pub n_tx: usize,
    pub n_rx: usize,
    pub links: Vec<LargeScaleLink>,
    /// Links whose distance fell below the path-loss validity range.
    pub clamped: usize,
}

impl LinkTable {
    /// Builds every `tx -> rx` link with wrap-minimal geometry. LOS and
    /// shadowing come from one stream per receiver, so the table is fully
    /// determined by the drop streams.
    pub fn build(
        layout: &NetworkLayout,
        link_type: LinkType,
        txs: &[Endpoint<'_>],
        rxs: &[Endpoint<'_>],
        model: &PropagationConfig,
        streams: &DropStreams,
    ) -> Self {
        let mut links = Vec::with_capacity(txs.len() * rxs.len());
        let mut clamped = 0;
        for (ri, rx) in rxs.iter().enumerate() {
            let mut rng = streams.stream(link_type.purpose(), &[ri as u64]);
            for (ti, tx) in txs.iter().enumerate() {
                let u: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                let delta = layout.wrapped_delta(tx.position, rx.position);
                let dz = rx.height - tx.height;
                let d2 = delta.norm();
                let d3 = d2.hypot(dz);
                let los = u < model.los_probability(link_type, d2);
                let (pl, was_clamped) = model.path_loss(link_type, d3, los);
                clamped += usize::from(was_clamped);
                let shadowing = z * model.shadowing_sigma(link_type, los);
                let dir = [delta.x, delta.y, dz];
                let back = [-delta.x, -delta.y, -dz];
                let tx_gain = tx.pattern.gain_towards(tx.azimuth_deg, dir);
                let rx_gain = rx.pattern.gain_towards(rx.azimuth_deg, back);
                let bearing_off =
                    crate::topology::wrap_deg(delta.angle().to_degrees() - tx.azimuth_deg);
                let mut link = LargeScaleLink {
                    tx: ti as u32,
                    rx: ri as u32,
                    link_type,
                    distance_2d: d2,
                    distance_3d: d3,
                    los,
                    path_loss: pl,
                    shadowing,
                    tx_gain,
                    rx_gain,
                    beta: 0.0,
                    bearing_off,
                };
                link.beta = 10f64.powf(-link.loss_db() / 10.0);
                links.push(link);
            }
        }
        Self {
            link_type,
            n_tx: txs.len(),
            n_rx: rxs.len(),
            links,
            clamped,
        }
    }

    #[inline]
    pub fn get(&self, tx: usize, rx: usize) -> &LargeScaleLink {
        &self.links[rx * self.n_tx + tx]
    }

    /// All links arriving at `rx`, indexed by transmitter.
    pub fn to_rx(&self, rx: usize) -> &[LargeScaleLink] {
        &self.links[rx * self.n_tx..(rx + 1) * self.n_tx]
    }

    /// Long-term received power in dBm for transmit power `tx_power_dbm`,
    /// as an RSRP table with receivers as devices.
    pub fn rsrp_table(&self, tx_power_dbm: f64) -> crate::topology::RsrpTable {
        let values = self
            .links
            .iter()
            .map(|l| tx_power_dbm - l.loss_db())
            .collect();
        crate::topology::RsrpTable::new(self.n_rx, self.n_tx, values)
    }

    /// CSV dump of the table for auditing.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "link_type,tx,rx,distance_3d_m,los,path_loss_db,shadowing_db,tx_gain_dbi,rx_gain_dbi,beta"
        )?;
        for l in &self.links {
            writeln!(
                w,
                "{},{},{},{:.3},{},{:.4},{:.4},{:.4},{:.4},{:e}",
                l.link_type,
                l.tx,
                l.rx,
                l.distance_3d,
                u8::from(l.los),
                l.path_loss,
                l.shadowing,
                l.tx_gain,
                l.rx_gain,
                l.beta
            )?;
        }
        Ok(())
    }
}
