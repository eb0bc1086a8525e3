//! Frame structure and rate computation: backhaul/access time partition,
//! pilot overhead, round-robin RB scheduling and the Shannon-rate formulas
//! for backhaul, small-cell access, end-to-end and direct access.

use serde::{Deserialize, Serialize};

use crate::config::{PilotScheme, SimConfig};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    pub symbols_per_slot: usize,
    pub alpha: f64,
    pub tau_r1: usize,
    pub tau_r3: usize,
    /// Backhaul pilot symbols per slot after amortization over the hold period.
    pub tau_bh_effective: f64,
    pub t_bh: u64,
    pub bandwidth_hz: f64,
    pub rb_count: usize,
}

impl FrameConfig {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            symbols_per_slot: cfg.frame.symbols_per_slot,
            alpha: cfg.alpha,
            tau_r1: cfg.frame.tau_r1,
            tau_r3: cfg.frame.tau_r3,
            tau_bh_effective: 0.0,
            t_bh: cfg.mimo.backhaul_hold_slots,
            bandwidth_hz: cfg.radio.bandwidth_hz,
            rb_count: cfg.radio.rb_count,
        }
    }

    /// Amortized backhaul training cost for `l_devices` small cells:
    /// `ceil(L / pilots_per_symbol)` symbols once every `t_bh` slots.
    pub fn with_backhaul_devices(mut self, l_devices: usize, pilots_per_symbol: usize) -> Self {
        let symbols = l_devices.div_ceil(pilots_per_symbol.max(1));
        self.tau_bh_effective = symbols as f64 / self.t_bh as f64;
        self
    }

    pub fn tau_da(&self, scheme: PilotScheme) -> usize {
        match scheme {
            PilotScheme::R1 => self.tau_r1,
            PilotScheme::R3 => self.tau_r3,
        }
    }

    fn overhead_factor(&self, tau: f64) -> f64 {
        (1.0 - tau / self.symbols_per_slot as f64).clamp(0.0, 1.0)
    }
}

/// `(1 - τ_eff/T) B log2(1 + SINR)`.
pub fn backhaul_rate(sinr: f64, frame: &FrameConfig) -> f64 {
    frame.overhead_factor(frame.tau_bh_effective) * frame.bandwidth_hz * (1.0 + sinr.max(0.0)).log2()
}

/// Round-robin owner of each RB for one slot. Owners run cyclically over
/// the UEs and continue from the previous slot, so counts differ by at most
/// one per slot and even out over `k_l` slots.
pub fn rr_allocate(q_t: usize, k_l: usize, slot: u64) -> Vec<usize> {
    assert!(k_l >= 1, "round robin needs at least one UE");
    let start = ((slot % k_l as u64) as usize * (q_t % k_l)) % k_l;
    (0..q_t).map(|q| (start + q) % k_l).collect()
}

/// RBs owned by `ue` in an allocation.
pub fn rbs_of(allocation: &[usize], ue: usize) -> impl Iterator<Item = usize> + '_ {
    allocation
        .iter()
        .enumerate()
        .filter(move |(_, &o)| o == ue)
        .map(|(q, _)| q)
}

/// Per-RB access SINR from received powers `P|g|²`.
pub fn access_sinr(signal: f64, interference: &[f64], noise_per_rb: f64) -> f64 {
    signal / (interference.iter().sum::<f64>() + noise_per_rb)
}

/// `(B/Q_t) Σ_q x_q log2(1 + SINR_q)` over the UE's RBs.
pub fn access_rate_sc(
    ue: usize,
    allocation: &[usize],
    sinr_per_rb: &[f64],
    frame: &FrameConfig,
) -> f64 {
    let per_rb = frame.bandwidth_hz / frame.rb_count as f64;
    rbs_of(allocation, ue)
        .map(|q| (1.0 + sinr_per_rb[q].max(0.0)).log2())
        .sum::<f64>()
        * per_rb
}

/// `min(α R_bh / K_l, (1-α) R_ac)`.
pub fn end_to_end_rate(r_bh: f64, r_ac: f64, k_l: usize, alpha: f64) -> f64 {
    debug_assert!(k_l >= 1);
    (alpha * r_bh / k_l as f64).min((1.0 - alpha) * r_ac)
}

/// `(1 - τ/T) B log2(1 + SINR)` with the scheme's training overhead.
pub fn da_rate(sinr: f64, scheme: PilotScheme, frame: &FrameConfig) -> f64 {
    frame.overhead_factor(frame.tau_da(scheme) as f64)
        * frame.bandwidth_hz
        * (1.0 + sinr.max(0.0)).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bottleneck {
    Backhaul,
    Access,
}

/// Per-UE outcome of one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub ue: usize,
    /// Serving small cell (self-backhaul) or sector (direct access).
    pub serving: usize,
    /// Backhaul rate of the serving small cell; absent in direct access.
    pub r_bh: Option<f64>,
    pub r_ac: f64,
    pub r_e2e: f64,
    pub k_l: usize,
}

impl RateRecord {
    /// End-to-end rate at another partition; direct access ignores `alpha`.
    pub fn rate_at(&self, alpha: f64) -> f64 {
        match self.r_bh {
            Some(bh) => end_to_end_rate(bh, self.r_ac, self.k_l, alpha),
            None => self.r_ac,
        }
    }

    pub fn bottleneck(&self, alpha: f64) -> Option<Bottleneck> {
        self.r_bh.map(|bh| {
            if alpha * bh / (self.k_l as f64) < (1.0 - alpha) * self.r_ac {
                Bottleneck::Backhaul
            } else {
                Bottleneck::Access
            }
        })
    }
}

/// Checks `Σ_k R_e2e ≤ α R_bh` for one small cell and labels each UE's
/// limiting hop.
pub fn enforce_backhaul_cap(
    r_bh: f64,
    records: &[RateRecord],
    alpha: f64,
) -> Result<Vec<Bottleneck>> {
    let total: f64 = records.iter().map(|r| r.rate_at(alpha)).sum();
    let cap = alpha * r_bh;
    if total > cap * (1.0 + 1e-9) + 1e-9 {
        return Err(SimError::Internal(format!(
            "end-to-end sum {total} exceeds backhaul share {cap}"
        )));
    }
    Ok(records
        .iter()
        .map(|r| r.bottleneck(alpha).unwrap_or(Bottleneck::Access))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame() -> FrameConfig {
        FrameConfig::from_config(&SimConfig::default())
    }

    fn rec(r_bh: f64, r_ac: f64, k_l: usize) -> RateRecord {
        RateRecord { ue: 0, serving: 0, r_bh: Some(r_bh), r_ac, r_e2e: 0.0, k_l }
    }

    #[test]
    fn backhaul_rate_cases() {
        let f = frame();
        assert!((backhaul_rate(3.0, &f) - 20e6).abs() < 1e-6);
        assert_eq!(backhaul_rate(0.0, &f), 0.0);
        let full = FrameConfig { tau_bh_effective: 14.0, ..frame() };
        assert_eq!(backhaul_rate(1e6, &full), 0.0);
        let amortized = frame().with_backhaul_devices(17, 16);
        assert!((amortized.tau_bh_effective - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rr_reference_allocations() {
        assert!(rr_allocate(50, 1, 7).iter().all(|&o| o == 0));
        let a = rr_allocate(50, 16, 0);
        let counts: Vec<usize> = (0..16).map(|k| rbs_of(&a, k).count()).collect();
        assert_eq!(counts.iter().filter(|&&c| c == 4).count(), 2);
        assert_eq!(counts.iter().filter(|&&c| c == 3).count(), 14);
        assert_eq!(counts.iter().sum::<usize>(), 50);
        let mut totals = [0usize; 16];
        for slot in 0..16 {
            for o in rr_allocate(50, 16, slot) {
                totals[o] += 1;
            }
        }
        assert!(totals.iter().all(|&t| t == 50));
    }

    #[test]
    fn access_rate_cases() {
        let f = frame();
        let flat = vec![3.0; 50];
        let all = rr_allocate(50, 1, 0);
        assert!((access_rate_sc(0, &all, &flat, &f) - 2.0 * f.bandwidth_hz).abs() < 1e-6);
        assert_eq!(access_rate_sc(5, &all, &flat, &f), 0.0);
        let two = rr_allocate(50, 2, 0);
        let a = access_rate_sc(0, &two, &flat, &f);
        let b = access_rate_sc(1, &two, &flat, &f);
        assert!((a - f.bandwidth_hz).abs() < 1e-6 && (b - f.bandwidth_hz).abs() < 1e-6);
    }

    #[test]
    fn access_sinr_cases() {
        assert_eq!(access_sinr(1.0, &[], 1.0), 1.0);
        assert!(access_sinr(1.0, &[1.0], 1e-12) < 1.0);
        let s = access_sinr(2.0, &[0.4, 0.6], 1e-15);
        let doubled = access_sinr(4.0, &[0.8, 1.2], 1e-15);
        assert!((s / doubled - 1.0).abs() < 1e-12);
    }

    #[test]
    fn end_to_end_cases() {
        assert_eq!(end_to_end_rate(80.0, 10.0, 2, 0.0), 0.0);
        assert_eq!(end_to_end_rate(80.0, 10.0, 2, 1.0), 0.0);
        assert_eq!(end_to_end_rate(80.0, 10.0, 2, 0.5), 5.0);
        assert_eq!(end_to_end_rate(f64::MAX, 10.0, 1, 0.25), 7.5);
    }

    #[test]
    fn da_rate_cases() {
        let f = frame();
        let r1 = da_rate(15.0, PilotScheme::R1, &f);
        assert!((r1 - 13.0 / 14.0 * 40e6).abs() < 1e-6);
        let r3 = da_rate(15.0, PilotScheme::R3, &f);
        assert!((r3 / r1 - 11.0 / 13.0).abs() < 1e-12);
        assert_eq!(da_rate(0.0, PilotScheme::R1, &f), 0.0);
    }

    #[test]
    fn bottleneck_labels() {
        let low = [rec(2.0, 10.0, 2), rec(2.0, 12.0, 2)];
        assert!(enforce_backhaul_cap(2.0, &low, 0.5)
            .unwrap()
            .iter()
            .all(|&b| b == Bottleneck::Backhaul));
        let high = [rec(1e9, 10.0, 2), rec(1e9, 12.0, 2)];
        assert!(enforce_backhaul_cap(1e9, &high, 0.5)
            .unwrap()
            .iter()
            .all(|&b| b == Bottleneck::Access));
        let mixed = [rec(20.0, 4.0, 2), rec(20.0, 40.0, 2)];
        assert_eq!(
            enforce_backhaul_cap(20.0, &mixed, 0.5).unwrap(),
            vec![Bottleneck::Access, Bottleneck::Backhaul]
        );
    }

    proptest! {
        #[test]
        fn rr_conserves_and_balances(q_t in 1usize..120, k_l in 1usize..40, slot in 0u64..1000) {
            let a = rr_allocate(q_t, k_l, slot);
            prop_assert_eq!(a.len(), q_t);
            let counts: Vec<usize> = (0..k_l).map(|k| rbs_of(&a, k).count()).collect();
            prop_assert_eq!(counts.iter().sum::<usize>(), q_t);
            let (mn, mx) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(mx - mn <= 1);
        }

        #[test]
        fn e2e_bounds_and_monotonicity(bh in 0.0f64..1e9, ac in 0.0f64..1e9, k in 1usize..20, alpha in 0.0f64..=1.0, bump in 0.0f64..1e8) {
            let r = end_to_end_rate(bh, ac, k, alpha);
            prop_assert!(r >= 0.0);
            prop_assert!(r <= alpha * bh / k as f64 + 1e-9);
            prop_assert!(r <= (1.0 - alpha) * ac + 1e-9);
            prop_assert!(end_to_end_rate(bh + bump, ac, k, alpha) >= r);
            prop_assert!(end_to_end_rate(bh, ac + bump, k, alpha) >= r);
        }

        #[test]
        fn e2e_is_unimodal_in_alpha(bh in 1.0f64..1e9, ac in 1.0f64..1e9, k in 1usize..20) {
            let grid: Vec<f64> = (0..=100).map(|i| end_to_end_rate(bh, ac, k, i as f64 / 100.0)).collect();
            let peak = grid.iter().cloned().enumerate().fold((0, f64::MIN), |b, (i, v)| if v > b.1 { (i, v) } else { b }).0;
            prop_assert!(grid[..=peak].windows(2).all(|w| w[1] >= w[0] - 1e-6));
            prop_assert!(grid[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-6));
        }
    }
}
