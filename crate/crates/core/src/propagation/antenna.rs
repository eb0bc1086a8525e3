//! Parabolic sector patterns and omni antennas.

use serde::{Deserialize, Serialize};

use crate::config::{AccessAntenna, AntennaConfig, PatternParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    MacroElement,
    ScPatch,
    ScYagi,
    ScBackhaulOmni,
    UeOmni,
}

impl PatternKind {
    pub fn is_omni(self) -> bool {
        matches!(self, PatternKind::ScBackhaulOmni | PatternKind::UeOmni)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub kind: PatternKind,
    pub h_beamwidth: f64,
    pub v_beamwidth: f64,
    pub max_gain: f64,
    /// Degrees below the horizon; 90 points straight down.
    pub downtilt: f64,
    pub am: f64,
    pub sla: f64,
}

impl AntennaPattern {
    pub fn directional(kind: PatternKind, p: &PatternParams) -> Self {
        Self {
            kind,
            h_beamwidth: p.h_beamwidth_deg,
            v_beamwidth: p.v_beamwidth_deg,
            max_gain: p.max_gain_dbi,
            downtilt: p.downtilt_deg,
            am: p.am_db,
            sla: p.sla_db,
        }
    }

    pub fn omni(kind: PatternKind, gain: f64) -> Self {
        Self {
            kind,
            h_beamwidth: 360.0,
            v_beamwidth: 180.0,
            max_gain: gain,
            downtilt: 0.0,
            am: 0.0,
            sla: 0.0,
        }
    }

    /// Gain in dBi for a link direction `(dx, dy, dz)` leaving an antenna
    /// whose boresight azimuth is `azimuth_deg`.
    ///
    /// The direction is rotated into the antenna's own frame (azimuth, then
    /// tilt) so that downward-facing antennas get a well-defined azimuth cut.
    pub fn gain_towards(&self, azimuth_deg: f64, dir: [f64; 3]) -> f64 {
        if self.kind.is_omni() {
            return self.max_gain;
        }
        let (az, el) = local_offsets(azimuth_deg, self.downtilt, dir);
        antenna_gain(self, az, el)
    }
}

/// Azimuth and elevation offsets from boresight, degrees, for a direction
/// seen from an antenna with the given azimuth and downtilt.
pub fn local_offsets(azimuth_deg: f64, downtilt_deg: f64, dir: [f64; 3]) -> (f64, f64) {
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    let (st, ct) = downtilt_deg.to_radians().sin_cos();
    let [dx, dy, dz] = dir;
    let x1 = dx * ca + dy * sa;
    let y1 = -dx * sa + dy * ca;
    let x2 = x1 * ct - dz * st;
    let z2 = x1 * st + dz * ct;
    let az = y1.atan2(x2).to_degrees();
    let el = z2.atan2(x2.hypot(y1)).to_degrees();
    (az, el)
}

/// 3GPP parabolic pattern evaluated at offsets from boresight (degrees).
/// Omni patterns return their gain everywhere.
pub fn antenna_gain(pattern: &AntennaPattern, azimuth_off: f64, elevation_off: f64) -> f64 {
    if pattern.kind.is_omni() {
        return pattern.max_gain;
    }
    let a_h = -(12.0 * (azimuth_off / pattern.h_beamwidth).powi(2)).min(pattern.am);
    let a_v = -(12.0 * (elevation_off / pattern.v_beamwidth).powi(2)).min(pattern.sla);
    pattern.max_gain + (a_h + a_v).max(-pattern.am)
}

/// The full set of patterns a drop needs.
#[derive(Debug, Clone, Copy)]
pub struct AntennaSet {
    pub macro_element: AntennaPattern,
    pub sc_patch: AntennaPattern,
    pub sc_yagi: AntennaPattern,
    pub sc_backhaul: AntennaPattern,
    pub ue: AntennaPattern,
}

impl AntennaSet {
    pub fn from_config(cfg: &AntennaConfig) -> Self {
        Self {
            macro_element: AntennaPattern::directional(PatternKind::MacroElement, &cfg.macro_element),
            sc_patch: AntennaPattern::directional(PatternKind::ScPatch, &cfg.sc_patch),
            sc_yagi: AntennaPattern::directional(PatternKind::ScYagi, &cfg.sc_yagi),
            sc_backhaul: AntennaPattern::omni(PatternKind::ScBackhaulOmni, cfg.sc_backhaul_gain_dbi),
            ue: AntennaPattern::omni(PatternKind::UeOmni, cfg.ue_gain_dbi),
        }
    }

    pub fn access(&self, a: AccessAntenna) -> &AntennaPattern {
        match a {
            AccessAntenna::Patch => &self.sc_patch,
            AccessAntenna::Yagi => &self.sc_yagi,
        }
    }
}
