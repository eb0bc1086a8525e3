//! Simulation configuration with network-wide defaults.
//!
//! Every field has a default, so an empty configuration file describes the
//! reference deployment: 19 wrap-around sites at 500 m spacing, 64-antenna
//! arrays at 46 dBm, 30 dBm small cells, 10 MHz with 50 resource blocks.
//! Unknown keys are rejected at every nesting level.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Which architecture a campaign simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Self-backhauled small cells dropped uniformly per sector.
    SbhRandom,
    /// Self-backhauled small cells placed next to each UE.
    SbhAdhoc,
    /// Massive-MIMO base stations serving UEs directly.
    Da,
}

impl Mode {
    pub fn is_self_backhaul(self) -> bool {
        !matches!(self, Mode::Da)
    }
}

/// Small-cell access antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessAntenna {
    Patch,
    Yagi,
}

/// Pilot reuse for direct-access training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotScheme {
    /// Every sector reuses the same pilots; one training symbol.
    R1,
    /// Co-sited sectors use orthogonal pilots; three training symbols.
    R3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub mode: Mode,
    pub ues_per_sector: usize,
    /// Small cells per sector in random deployments. Ad-hoc places one per UE.
    pub scs_per_sector: usize,
    /// 2-D UE-to-small-cell distance in ad-hoc deployments, meters.
    pub ue_sc_distance: f64,
    pub sc_access_antenna: AccessAntenna,
    pub pilot_scheme: PilotScheme,
    /// Fraction of time slots given to backhaul.
    pub alpha: f64,
    /// Optional partition grid for sweeps.
    pub alpha_grid: Option<Vec<f64>>,
    pub n_drops: u64,
    pub slots_per_drop: usize,
    pub seed: u64,
    pub layout: LayoutConfig,
    pub radio: RadioConfig,
    pub mimo: MimoConfig,
    pub frame: FrameParams,
    pub propagation: PropagationConfig,
    pub antennas: AntennaConfig,
    pub fading: FadingConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SbhAdhoc,
            ues_per_sector: 16,
            scs_per_sector: 16,
            ue_sc_distance: 0.0,
            sc_access_antenna: AccessAntenna::Yagi,
            pilot_scheme: PilotScheme::R1,
            alpha: 0.5,
            alpha_grid: None,
            n_drops: 10,
            slots_per_drop: 4,
            seed: 1,
            layout: LayoutConfig::default(),
            radio: RadioConfig::default(),
            mimo: MimoConfig::default(),
            frame: FrameParams::default(),
            propagation: PropagationConfig::default(),
            antennas: AntennaConfig::default(),
            fading: FadingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    pub isd: f64,
    pub n_sites: usize,
    pub bs_height: f64,
    pub sc_height: f64,
    pub ue_height: f64,
    pub min_ue_site_distance: f64,
    pub min_sc_site_distance: f64,
    pub min_sc_sc_distance: f64,
    /// Placement attempts per small cell before giving up.
    pub max_placement_attempts: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            isd: 500.0,
            n_sites: 19,
            bs_height: 32.0,
            sc_height: 5.0,
            ue_height: 1.5,
            min_ue_site_distance: 35.0,
            min_sc_site_distance: 75.0,
            min_sc_sc_distance: 40.0,
            max_placement_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub bandwidth_hz: f64,
    pub rb_count: usize,
    /// Noise bandwidth of one resource block for the access SINR.
    pub rb_noise_bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub macro_tx_power_dbm: f64,
    pub sc_tx_power_dbm: f64,
    pub macro_noise_figure_db: f64,
    pub sc_noise_figure_db: f64,
    pub ue_noise_figure_db: f64,
    /// Uplink pilot power of UEs (direct access training).
    pub ue_pilot_power_dbm: f64,
    /// Uplink pilot power of small cells (backhaul training).
    pub sc_pilot_power_dbm: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            rb_count: 50,
            rb_noise_bandwidth_hz: 180e3,
            noise_psd_dbm_per_hz: -174.0,
            macro_tx_power_dbm: 46.0,
            sc_tx_power_dbm: 30.0,
            macro_noise_figure_db: 5.0,
            sc_noise_figure_db: 5.0,
            ue_noise_figure_db: 9.0,
            ue_pilot_power_dbm: 23.0,
            sc_pilot_power_dbm: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MimoConfig {
    pub antennas: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    /// Orthogonal pilots that fit in one OFDM symbol.
    pub pilots_per_symbol: usize,
    pub condition_threshold: f64,
    /// Slots over which the backhaul channel is held constant.
    pub backhaul_hold_slots: u64,
}

impl Default for MimoConfig {
    fn default() -> Self {
        Self {
            antennas: 64,
            element_spacing: 0.5,
            pilots_per_symbol: 16,
            condition_threshold: 1e8,
            backhaul_hold_slots: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameParams {
    /// OFDM symbols in one 1 ms slot.
    pub symbols_per_slot: usize,
    pub tau_r1: usize,
    pub tau_r3: usize,
}

impl Default for FrameParams {
    fn default() -> Self {
        Self {
            symbols_per_slot: 14,
            tau_r1: 1,
            tau_r3: 3,
        }
    }
}

/// Log-distance path loss `intercept + slope * log10(R_km)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogDistance {
    pub intercept_db: f64,
    pub slope_db: f64,
}

/// LOS probability families, distances in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LosProbability {
    /// `min(knee/R, 1) (1 - exp(-R/decay)) + exp(-R/decay)`
    Macro { knee_km: f64, decay_km: f64 },
    /// `plateau - min(plateau, scale exp(-far/R)) + min(plateau, scale exp(-R/near))`
    ShortRange {
        plateau: f64,
        scale: f64,
        far_km: f64,
        near_km: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub los: LogDistance,
    pub nlos: LogDistance,
    pub shadowing_los_db: f64,
    pub shadowing_nlos_db: f64,
    pub los_probability: LosProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    /// Path loss distances below this are clamped, meters.
    pub min_distance: f64,
    pub macro_to_ue: LinkModel,
    pub macro_to_sc: LinkModel,
    pub sc_to_ue: LinkModel,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        // Shadowing deviations are assumptions; the source table does not list them.
        Self {
            min_distance: 10.0,
            macro_to_ue: LinkModel {
                los: LogDistance { intercept_db: 103.4, slope_db: 24.2 },
                nlos: LogDistance { intercept_db: 131.1, slope_db: 42.8 },
                shadowing_los_db: 8.0,
                shadowing_nlos_db: 8.0,
                los_probability: LosProbability::Macro { knee_km: 0.018, decay_km: 0.063 },
            },
            macro_to_sc: LinkModel {
                los: LogDistance { intercept_db: 100.7, slope_db: 23.5 },
                nlos: LogDistance { intercept_db: 125.2, slope_db: 36.3 },
                shadowing_los_db: 6.0,
                shadowing_nlos_db: 6.0,
                los_probability: LosProbability::Macro { knee_km: 0.018, decay_km: 0.072 },
            },
            sc_to_ue: LinkModel {
                los: LogDistance { intercept_db: 103.8, slope_db: 20.9 },
                nlos: LogDistance { intercept_db: 145.4, slope_db: 37.5 },
                shadowing_los_db: 3.0,
                shadowing_nlos_db: 10.0,
                los_probability: LosProbability::ShortRange {
                    plateau: 0.5,
                    scale: 5.0,
                    far_km: 0.156,
                    near_km: 0.03,
                },
            },
        }
    }
}

/// Parabolic sector pattern parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternParams {
    pub h_beamwidth_deg: f64,
    pub v_beamwidth_deg: f64,
    pub max_gain_dbi: f64,
    pub downtilt_deg: f64,
    /// Front-to-back limit.
    pub am_db: f64,
    /// Vertical side-lobe limit.
    pub sla_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaConfig {
    pub macro_element: PatternParams,
    pub sc_patch: PatternParams,
    pub sc_yagi: PatternParams,
    pub sc_backhaul_gain_dbi: f64,
    pub ue_gain_dbi: f64,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self {
            macro_element: PatternParams {
                h_beamwidth_deg: 70.0,
                v_beamwidth_deg: 10.0,
                max_gain_dbi: 14.0,
                downtilt_deg: 15.0,
                am_db: 25.0,
                sla_db: 20.0,
            },
            sc_patch: PatternParams {
                h_beamwidth_deg: 80.0,
                v_beamwidth_deg: 80.0,
                max_gain_dbi: 5.0,
                downtilt_deg: 90.0,
                am_db: 25.0,
                sla_db: 20.0,
            },
            sc_yagi: PatternParams {
                h_beamwidth_deg: 58.0,
                v_beamwidth_deg: 47.0,
                max_gain_dbi: 10.0,
                downtilt_deg: 90.0,
                am_db: 25.0,
                sla_db: 20.0,
            },
            sc_backhaul_gain_dbi: 5.0,
            ue_gain_dbi: 0.0,
        }
    }
}

/// Distance-dependent Rician K-factor `intercept - slope * r` in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingConfig {
    pub k_intercept_db: f64,
    pub k_slope_db_per_m: f64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            k_intercept_db: 13.0,
            k_slope_db_per_m: 0.03,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl RadioConfig {
    /// Thermal noise over `bandwidth_hz` with noise figure `nf_db`, watts.
    pub fn noise_watts(&self, bandwidth_hz: f64, nf_db: f64) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_per_hz + 10.0 * bandwidth_hz.log10() + nf_db)
    }
}

impl SimConfig {
    /// Partition values a sweep evaluates: the grid if set, else `alpha`.
    pub fn alphas(&self) -> Vec<f64> {
        self.alpha_grid.clone().unwrap_or_else(|| vec![self.alpha])
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        let l = &self.layout;
        check(l.isd > 0.0 && l.isd.is_finite(), "layout.isd must be positive");
        check((1..=19).contains(&l.n_sites), "layout.n_sites must be in 1..=19");
        check(l.bs_height > 0.0, "layout.bs_height must be positive");
        check(l.sc_height > 0.0, "layout.sc_height must be positive");
        check(l.ue_height > 0.0, "layout.ue_height must be positive");
        check(l.min_ue_site_distance >= 0.0, "layout.min_ue_site_distance must be >= 0");
        check(l.min_sc_site_distance >= 0.0, "layout.min_sc_site_distance must be >= 0");
        check(l.min_sc_sc_distance >= 0.0, "layout.min_sc_sc_distance must be >= 0");
        check(l.max_placement_attempts >= 1, "layout.max_placement_attempts must be >= 1");
        check(self.ues_per_sector >= 1, "ues_per_sector must be >= 1");
        check(
            self.mode != Mode::SbhRandom || self.scs_per_sector >= 1,
            "scs_per_sector must be >= 1",
        );
        check(
            self.ue_sc_distance >= 0.0 && self.ue_sc_distance.is_finite(),
            "ue_sc_distance must be >= 0",
        );
        check((0.0..=1.0).contains(&self.alpha), "alpha must be in [0, 1]");
        if let Some(grid) = &self.alpha_grid {
            check(!grid.is_empty(), "alpha_grid must not be empty");
            check(
                grid.iter().all(|a| (0.0..=1.0).contains(a)),
                "alpha_grid values must be in [0, 1]",
            );
        }
        check(self.n_drops >= 1, "n_drops must be >= 1");
        check(self.slots_per_drop >= 1, "slots_per_drop must be >= 1");
        let r = &self.radio;
        check(r.bandwidth_hz > 0.0, "radio.bandwidth_hz must be positive");
        check(r.rb_count >= 1, "radio.rb_count must be >= 1");
        check(r.rb_noise_bandwidth_hz > 0.0, "radio.rb_noise_bandwidth_hz must be positive");
        let m = &self.mimo;
        check(m.antennas >= 1, "mimo.antennas must be >= 1");
        check(m.element_spacing > 0.0, "mimo.element_spacing must be positive");
        check(m.pilots_per_symbol >= 1, "mimo.pilots_per_symbol must be >= 1");
        check(m.condition_threshold > 1.0, "mimo.condition_threshold must exceed 1");
        check(m.backhaul_hold_slots >= 1, "mimo.backhaul_hold_slots must be >= 1");
        let f = &self.frame;
        check(f.symbols_per_slot >= 1, "frame.symbols_per_slot must be >= 1");
        check(
            f.tau_r1 < f.symbols_per_slot && f.tau_r3 < f.symbols_per_slot,
            "frame pilot symbols must be fewer than symbols_per_slot",
        );
        let p = &self.propagation;
        check(p.min_distance > 0.0, "propagation.min_distance must be positive");
        for (name, lm) in [
            ("macro_to_ue", &p.macro_to_ue),
            ("macro_to_sc", &p.macro_to_sc),
            ("sc_to_ue", &p.sc_to_ue),
        ] {
            if lm.shadowing_los_db < 0.0 || lm.shadowing_nlos_db < 0.0 {
                errs.push(format!("propagation.{name} shadowing must be >= 0"));
            }
            if lm.los.slope_db <= 0.0 || lm.nlos.slope_db <= 0.0 {
                errs.push(format!("propagation.{name} path loss slopes must be positive"));
            }
        }
        let a = &self.antennas;
        for (name, pat) in [
            ("macro_element", &a.macro_element),
            ("sc_patch", &a.sc_patch),
            ("sc_yagi", &a.sc_yagi),
        ] {
            if pat.h_beamwidth_deg <= 0.0 || pat.v_beamwidth_deg <= 0.0 {
                errs.push(format!("antennas.{name} beamwidths must be positive"));
            }
            if pat.am_db < 0.0 || pat.sla_db < 0.0 {
                errs.push(format!("antennas.{name} attenuation limits must be >= 0"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SimError::Config(errs))
        }
    }
}
