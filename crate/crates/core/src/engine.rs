//! Monte Carlo orchestration: one drop builds a network realization and
//! evaluates `slots_per_drop` fading snapshots; a campaign runs many
//! independent drops and aggregates per-UE rates into CDFs and percentiles.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{dbm_to_watts, Mode, SimConfig};
use crate::error::{Result, SimError};
use crate::fading::{draw_scalar_power, fill_mimo_column, link_k_linear, BackhaulChannelHold, ScalarLinkState};
use crate::mimo::{assign_pilot_groups, estimate_channel, mimo_sinr, zf_precoder, CMatrix, PrecoderSet};
use crate::propagation::{AntennaSet, Endpoint, LinkTable, LinkType};
use crate::resources::{
    access_rate_sc, access_sinr, backhaul_rate, da_rate, end_to_end_rate, enforce_backhaul_cap,
    rbs_of, rr_allocate, Bottleneck, FrameConfig, RateRecord,
};
use crate::rng::{DropStreams, Purpose, StreamFactory};
use crate::stats::{ecdf, sorted, CdfPoint, Percentiles};
use crate::topology::{
    associate, deploy_scs_adhoc, deploy_scs_random, drop_ues, NetworkLayout, SmallCellNode, UserNode,
};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SBH_WORKERS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Sector-slots (or sector-epochs for backhaul) where ZF was refused.
    pub precoder_failures: u64,
    /// Links whose distance was clamped to the path-loss validity range.
    pub clamped_links: u64,
    /// Direct-access UEs never scheduled in the evaluated slots.
    pub unscheduled_ues: u64,
    /// Small cells with no connected UE.
    pub idle_small_cells: u64,
}

impl Counters {
    fn add(&mut self, o: &Counters) {
        self.precoder_failures += o.precoder_failures;
        self.clamped_links += o.clamped_links;
        self.unscheduled_ues += o.unscheduled_ues;
        self.idle_small_cells += o.idle_small_cells;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub drop: u64,
    pub records: Vec<RateRecord>,
    pub counters: Counters,
}

/// Geometry of one drop, exported for plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropLayout {
    pub layout: NetworkLayout,
    pub ues: Vec<UserNode>,
    pub small_cells: Vec<SmallCellNode>,
}

/// Everything built before the first slot is evaluated.
pub struct DropSetup {
    pub geometry: DropLayout,
    pub macro_to_sc: Option<LinkTable>,
    pub macro_to_ue: Option<LinkTable>,
    pub sc_to_ue: Option<LinkTable>,
}

struct Ctx<'a> {
    cfg: &'a SimConfig,
    streams: DropStreams,
    ants: AntennaSet,
}

fn sector_endpoints<'a>(layout: &NetworkLayout, cfg: &SimConfig, ants: &'a AntennaSet) -> Vec<Endpoint<'a>> {
    layout
        .sectors
        .iter()
        .map(|s| Endpoint {
            position: layout.sites[s.site].position,
            height: cfg.layout.bs_height,
            pattern: &ants.macro_element,
            azimuth_deg: s.azimuth_deg,
        })
        .collect()
}

fn ue_endpoints<'a>(ues: &[UserNode], ants: &'a AntennaSet) -> Vec<Endpoint<'a>> {
    ues.iter()
        .map(|u| Endpoint {
            position: u.position,
            height: u.height,
            pattern: &ants.ue,
            azimuth_deg: 0.0,
        })
        .collect()
}

/// Builds topology, large-scale tables and associations for a drop.
pub fn setup_drop(cfg: &SimConfig, drop: u64) -> Result<DropSetup> {
    let ctx = Ctx {
        cfg,
        streams: StreamFactory::new(cfg.seed).for_drop(drop),
        ants: AntennaSet::from_config(&cfg.antennas),
    };
    build_setup(&ctx)
}

fn build_setup(ctx: &Ctx<'_>) -> Result<DropSetup> {
    let cfg = ctx.cfg;
    let layout = NetworkLayout::from_config(&cfg.layout)?;
    let mut ues = drop_ues(
        &layout,
        &cfg.layout,
        cfg.ues_per_sector,
        &mut ctx.streams.stream(Purpose::UeDrop, &[]),
    )?;
    let sector_eps = sector_endpoints(&layout, cfg, &ctx.ants);
    let ue_eps = ue_endpoints(&ues, &ctx.ants);

    if cfg.mode == Mode::Da {
        let m2u = LinkTable::build(&layout, LinkType::MacroToUe, &sector_eps, &ue_eps, &cfg.propagation, &ctx.streams);
        let serving = associate(&m2u.rsrp_table(cfg.radio.macro_tx_power_dbm))?;
        for (u, s) in ues.iter_mut().zip(serving) {
            u.serving_cell = Some(s);
        }
        return Ok(DropSetup {
            geometry: DropLayout { layout, ues, small_cells: Vec::new() },
            macro_to_sc: None,
            macro_to_ue: Some(m2u),
            sc_to_ue: None,
        });
    }

    let mut sc_rng = ctx.streams.stream(Purpose::ScDrop, &[]);
    let mut scs = match cfg.mode {
        Mode::SbhRandom => deploy_scs_random(&layout, &cfg.layout, cfg.scs_per_sector, cfg.sc_access_antenna, &mut sc_rng)?,
        _ => deploy_scs_adhoc(&ues, &layout, &cfg.layout, cfg.ue_sc_distance, cfg.sc_access_antenna, &mut sc_rng)?,
    };
    let bh_eps: Vec<Endpoint> = scs
        .iter()
        .map(|s| Endpoint {
            position: s.position,
            height: s.height,
            pattern: &ctx.ants.sc_backhaul,
            azimuth_deg: 0.0,
        })
        .collect();
    let m2s = LinkTable::build(&layout, LinkType::MacroToSc, &sector_eps, &bh_eps, &cfg.propagation, &ctx.streams);
    let sc_serving = associate(&m2s.rsrp_table(cfg.radio.macro_tx_power_dbm))?;
    for (s, serving) in scs.iter_mut().zip(sc_serving) {
        s.serving_sector = Some(serving);
    }

    let acc_eps: Vec<Endpoint> = scs
        .iter()
        .map(|s| Endpoint {
            position: s.position,
            height: s.height,
            pattern: ctx.ants.access(s.access_antenna),
            azimuth_deg: s.orientation_deg,
        })
        .collect();
    let s2u = LinkTable::build(&layout, LinkType::ScToUe, &acc_eps, &ue_eps, &cfg.propagation, &ctx.streams);
    let ue_serving = associate(&s2u.rsrp_table(cfg.radio.sc_tx_power_dbm))?;
    for (u, l) in ues.iter_mut().zip(ue_serving) {
        u.serving_cell = Some(l);
        scs[l].connected_ues.push(u.id);
    }
    Ok(DropSetup {
        geometry: DropLayout { layout, ues, small_cells: scs },
        macro_to_sc: Some(m2s),
        macro_to_ue: None,
        sc_to_ue: Some(s2u),
    })
}

/// Evaluates one Monte Carlo drop.
pub fn run_drop(cfg: &SimConfig, drop: u64) -> Result<DropResult> {
    let ctx = Ctx {
        cfg,
        streams: StreamFactory::new(cfg.seed).for_drop(drop),
        ants: AntennaSet::from_config(&cfg.antennas),
    };
    let eval = || -> Result<DropResult> {
        let setup = build_setup(&ctx)?;
        let (records, counters) = match cfg.mode {
            Mode::Da => evaluate_da(&ctx, &setup)?,
            _ => evaluate_sbh(&ctx, &setup)?,
        };
        Ok(DropResult { drop, records, counters })
    };
    eval().map_err(|e| e.in_drop(drop))
}

/// Draws the M x N channel matrix from every sector to every device of a table.
fn draw_array_channels(ctx: &Ctx<'_>, table: &LinkTable, purpose: Purpose, time_key: u64) -> Vec<CMatrix> {
    let m = ctx.cfg.mimo.antennas;
    let spacing = ctx.cfg.mimo.element_spacing;
    (0..table.n_tx)
        .map(|i| {
            let mut rng = ctx.streams.stream(purpose, &[time_key, i as u64]);
            let mut h = CMatrix::zeros(m, table.n_rx);
            let data = h.as_mut_slice();
            for d in 0..table.n_rx {
                let link = table.get(i, d);
                let k = link_k_linear(&ctx.cfg.fading, link);
                fill_mimo_column(&mut data[d * m..(d + 1) * m], link.beta, k, link.bearing_off, spacing, &mut rng);
            }
            h
        })
        .collect()
}

fn select_columns(h: &CMatrix, cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(h.nrows(), cols.len(), |r, c| h[(r, cols[c])])
}

fn evaluate_sbh(ctx: &Ctx<'_>, setup: &DropSetup) -> Result<(Vec<RateRecord>, Counters)> {
    let cfg = ctx.cfg;
    let m2s = setup.macro_to_sc.as_ref().expect("self-backhaul setup has macro links");
    let s2u = setup.sc_to_ue.as_ref().expect("self-backhaul setup has access links");
    let scs = &setup.geometry.small_cells;
    let ues = &setup.geometry.ues;
    let n_sectors = setup.geometry.layout.n_sectors();
    let mut counters = Counters {
        clamped_links: (m2s.clamped + s2u.clamped) as u64,
        idle_small_cells: scs.iter().filter(|s| s.connected_ues.is_empty()).count() as u64,
        ..Counters::default()
    };
    let frame = FrameConfig::from_config(cfg);
    let slots = cfg.slots_per_drop as u64;

    // Backhaul: every sector serves all small cells associated with it.
    let mut served: Vec<Vec<usize>> = vec![Vec::new(); n_sectors];
    for s in scs {
        served[s.serving_sector.expect("associated")].push(s.id);
    }
    let macro_power = dbm_to_watts(cfg.radio.macro_tx_power_dbm);
    let bs_noise = cfg.radio.noise_watts(cfg.radio.bandwidth_hz, cfg.radio.macro_noise_figure_db);
    let sc_noise = cfg.radio.noise_watts(cfg.radio.bandwidth_hz, cfg.radio.sc_noise_figure_db);
    let sc_pilot = dbm_to_watts(cfg.radio.sc_pilot_power_dbm);

    let mut hold = BackhaulChannelHold::new(cfg.mimo.backhaul_hold_slots);
    let mut epoch_rates = vec![0.0; scs.len()];
    let mut r_bh = vec![0.0; scs.len()];
    for slot in 0..slots {
        let stale = hold.is_stale(slot);
        let channels = hold.get(slot, |epoch| draw_array_channels(ctx, m2s, Purpose::BackhaulFading, epoch));
        if stale {
            let epoch = slot / cfg.mimo.backhaul_hold_slots;
            let mut precoders: Vec<Option<PrecoderSet>> = Vec::with_capacity(n_sectors);
            for (i, devs) in served.iter().enumerate() {
                if devs.is_empty() {
                    precoders.push(None);
                    continue;
                }
                let own = select_columns(&channels[i], devs);
                let mut noise_rng = ctx.streams.stream(Purpose::PilotNoise, &[0, epoch, i as u64]);
                let est = estimate_channel(&own, &[], sc_pilot, bs_noise, &mut noise_rng)?;
                match zf_precoder(&est.h_hat, macro_power, cfg.mimo.condition_threshold) {
                    Ok(p) => precoders.push(Some(p)),
                    Err(SimError::Precoder { .. }) => {
                        counters.precoder_failures += 1;
                        precoders.push(None);
                    }
                    Err(e) => return Err(e),
                }
            }
            epoch_rates.iter_mut().for_each(|r| *r = 0.0);
            for (i, devs) in served.iter().enumerate() {
                if precoders[i].is_none() {
                    continue;
                }
                let f = frame.clone().with_backhaul_devices(devs.len(), cfg.mimo.pilots_per_symbol);
                for (stream, &l) in devs.iter().enumerate() {
                    let sinr = mimo_sinr(channels, &precoders, i, stream, l, sc_noise);
                    epoch_rates[l] = backhaul_rate(sinr, &f);
                }
            }
        }
        for (acc, r) in r_bh.iter_mut().zip(&epoch_rates) {
            *acc += r / slots as f64;
        }
    }

    // Access: active small cells share RBs round-robin among their UEs.
    let active: Vec<usize> = scs.iter().filter(|s| !s.connected_ues.is_empty()).map(|s| s.id).collect();
    let mut active_pos = vec![usize::MAX; scs.len()];
    for (p, &l) in active.iter().enumerate() {
        active_pos[l] = p;
    }
    let q_t = cfg.radio.rb_count;
    let p_rb = dbm_to_watts(cfg.radio.sc_tx_power_dbm) / q_t as f64;
    let noise_rb = cfg.radio.noise_watts(cfg.radio.rb_noise_bandwidth_hz, cfg.radio.ue_noise_figure_db);

    let mut r_ac = vec![0.0; ues.len()];
    let mut sinr_rb = vec![0.0; q_t];
    let mut interference = Vec::with_capacity(active.len());
    for ue in ues {
        let l = ue.serving_cell.expect("associated");
        let sc = &scs[l];
        let u = sc.connected_ues.iter().position(|&k| k == ue.id).expect("connected");
        let mut phase_rng = ctx.streams.stream(Purpose::ScalarPhase, &[ue.id as u64]);
        let states: Vec<ScalarLinkState> = active
            .iter()
            .map(|&lp| ScalarLinkState::new(&cfg.fading, s2u.get(lp, ue.id), &mut phase_rng))
            .collect();
        let own = active_pos[l];
        for slot in 0..slots {
            let alloc = rr_allocate(q_t, sc.connected_ues.len(), slot);
            let mut rng = ctx.streams.stream(Purpose::ScalarFading, &[slot, ue.id as u64]);
            for q in rbs_of(&alloc, u) {
                interference.clear();
                let mut signal = 0.0;
                for (p, st) in states.iter().enumerate() {
                    let rx = p_rb * draw_scalar_power(st, &mut rng);
                    if p == own {
                        signal = rx;
                    } else {
                        interference.push(rx);
                    }
                }
                sinr_rb[q] = access_sinr(signal, &interference, noise_rb);
            }
            r_ac[ue.id] += access_rate_sc(u, &alloc, &sinr_rb, &frame) / slots as f64;
        }
    }

    let records: Vec<RateRecord> = ues
        .iter()
        .map(|ue| {
            let l = ue.serving_cell.expect("associated");
            let k_l = scs[l].connected_ues.len();
            RateRecord {
                ue: ue.id,
                serving: l,
                r_bh: Some(r_bh[l]),
                r_ac: r_ac[ue.id],
                r_e2e: end_to_end_rate(r_bh[l], r_ac[ue.id], k_l, cfg.alpha),
                k_l,
            }
        })
        .collect();
    for sc in scs.iter().filter(|s| !s.connected_ues.is_empty()) {
        let mine: Vec<RateRecord> = sc.connected_ues.iter().map(|&k| records[k].clone()).collect();
        enforce_backhaul_cap(r_bh[sc.id], &mine, cfg.alpha)?;
    }
    Ok((records, counters))
}

fn evaluate_da(ctx: &Ctx<'_>, setup: &DropSetup) -> Result<(Vec<RateRecord>, Counters)> {
    let cfg = ctx.cfg;
    let m2u = setup.macro_to_ue.as_ref().expect("direct-access setup has macro links");
    let ues = &setup.geometry.ues;
    let layout = &setup.geometry.layout;
    let n_sectors = layout.n_sectors();
    let mut counters = Counters {
        clamped_links: m2u.clamped as u64,
        ..Counters::default()
    };
    let frame = FrameConfig::from_config(cfg);
    let groups = assign_pilot_groups(layout, cfg.pilot_scheme, &cfg.frame);
    let contaminators: Vec<Vec<usize>> = (0..n_sectors).map(|i| groups.contaminators(i)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_sectors];
    for u in ues {
        members[u.serving_cell.expect("associated")].push(u.id);
    }
    let s = cfg.mimo.pilots_per_symbol;
    let macro_power = dbm_to_watts(cfg.radio.macro_tx_power_dbm);
    let bs_noise = cfg.radio.noise_watts(cfg.radio.bandwidth_hz, cfg.radio.macro_noise_figure_db);
    let ue_noise = cfg.radio.noise_watts(cfg.radio.bandwidth_hz, cfg.radio.ue_noise_figure_db);
    let ue_pilot = dbm_to_watts(cfg.radio.ue_pilot_power_dbm);

    let mut rate_sum = vec![0.0; ues.len()];
    let mut served_slots = vec![0u64; ues.len()];
    for slot in 0..cfg.slots_per_drop as u64 {
        let channels = draw_array_channels(ctx, m2u, Purpose::AccessMimoFading, slot);
        // At most one code-book of UEs per slot; larger sectors rotate.
        let scheduled: Vec<Vec<usize>> = members
            .iter()
            .map(|m| {
                if m.len() <= s {
                    m.clone()
                } else {
                    let start = (slot as usize * s) % m.len();
                    (0..s).map(|j| m[(start + j) % m.len()]).collect()
                }
            })
            .collect();
        let mut precoders: Vec<Option<PrecoderSet>> = Vec::with_capacity(n_sectors);
        for i in 0..n_sectors {
            if scheduled[i].is_empty() {
                precoders.push(None);
                continue;
            }
            let own = select_columns(&channels[i], &scheduled[i]);
            let contam: Vec<(usize, CMatrix)> = contaminators[i]
                .iter()
                .filter(|&&j| !scheduled[j].is_empty())
                .map(|&j| (j, select_columns(&channels[i], &scheduled[j])))
                .collect();
            let refs: Vec<(usize, &CMatrix)> = contam.iter().map(|(j, h)| (*j, h)).collect();
            let mut noise_rng = ctx.streams.stream(Purpose::PilotNoise, &[1, slot, i as u64]);
            let est = estimate_channel(&own, &refs, ue_pilot, bs_noise, &mut noise_rng)?;
            match zf_precoder(&est.h_hat, macro_power, cfg.mimo.condition_threshold) {
                Ok(p) => precoders.push(Some(p)),
                Err(SimError::Precoder { .. }) => {
                    counters.precoder_failures += 1;
                    precoders.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        for (i, sched) in scheduled.iter().enumerate() {
            let failed = precoders[i].is_none();
            for (stream, &k) in sched.iter().enumerate() {
                served_slots[k] += 1;
                if !failed {
                    let sinr = mimo_sinr(&channels, &precoders, i, stream, k, ue_noise);
                    rate_sum[k] += da_rate(sinr, cfg.pilot_scheme, &frame);
                }
            }
        }
    }

    let records = ues
        .iter()
        .map(|ue| {
            let i = ue.serving_cell.expect("associated");
            let k_i = members[i].len();
            let share = s.min(k_i) as f64 / k_i as f64;
            let r_ac = if served_slots[ue.id] > 0 {
                share * rate_sum[ue.id] / served_slots[ue.id] as f64
            } else {
                counters.unscheduled_ues += 1;
                0.0
            };
            RateRecord {
                ue: ue.id,
                serving: i,
                r_bh: None,
                r_ac,
                r_e2e: r_ac,
                k_l: k_i,
            }
        })
        .collect();
    Ok((records, counters))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub alpha: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BottleneckStats {
    pub backhaul_limited: u64,
    pub access_limited: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: SimConfig,
    /// Per-UE records of every drop, ordered by drop then UE.
    pub records: Vec<RateRecord>,
    pub counters: Counters,
    /// Percentile table over `config.alphas()`.
    pub percentiles: Vec<PercentileRow>,
    pub bottlenecks: BottleneckStats,
}

impl CampaignResult {
    pub fn from_drops(config: SimConfig, drops: Vec<DropResult>) -> Self {
        let mut counters = Counters::default();
        let mut records = Vec::new();
        for d in drops {
            counters.add(&d.counters);
            records.extend(d.records);
        }
        let mut out = Self {
            config,
            records,
            counters,
            percentiles: Vec::new(),
            bottlenecks: BottleneckStats::default(),
        };
        out.percentiles = out.config.alphas().iter().map(|&a| out.percentile_row(a)).collect();
        out.bottlenecks = out.bottleneck_stats(out.config.alpha);
        out
    }

    pub fn is_self_backhaul(&self) -> bool {
        self.config.mode.is_self_backhaul()
    }

    /// Sorted end-to-end rates at partition `alpha`.
    pub fn rates_at(&self, alpha: f64) -> Vec<f64> {
        sorted(self.records.iter().map(|r| r.rate_at(alpha)))
    }

    pub fn cdf_at(&self, alpha: f64) -> Vec<CdfPoint> {
        ecdf(&self.rates_at(alpha))
    }

    pub fn percentile_row(&self, alpha: f64) -> PercentileRow {
        let p = Percentiles::of_sorted(&self.rates_at(alpha));
        PercentileRow {
            alpha,
            p5: p.p5,
            p50: p.p50,
            p95: p.p95,
        }
    }

    pub fn bottleneck_stats(&self, alpha: f64) -> BottleneckStats {
        let mut s = BottleneckStats::default();
        for r in &self.records {
            match r.bottleneck(alpha) {
                Some(Bottleneck::Backhaul) => s.backhaul_limited += 1,
                Some(Bottleneck::Access) => s.access_limited += 1,
                None => {}
            }
        }
        s
    }

    /// Percentiles over a partition grid, reusing the stored per-drop rates.
    pub fn sweep(&self, grid: &[f64]) -> AlphaSweep {
        let rows: Vec<PercentileRow> = grid.iter().map(|&a| self.percentile_row(a)).collect();
        let argmax = |f: fn(&PercentileRow) -> f64| {
            rows.iter()
                .fold(None::<&PercentileRow>, |best, r| match best {
                    Some(b) if f(b) >= f(r) => Some(b),
                    _ => Some(r),
                })
                .map(|r| r.alpha)
                .unwrap_or(f64::NAN)
        };
        AlphaSweep {
            best_alpha_p5: argmax(|r| r.p5),
            best_alpha_p50: argmax(|r| r.p50),
            rows,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub rows: Vec<PercentileRow>,
    /// Partition maximizing the 5th percentile (first on ties).
    pub best_alpha_p5: f64,
    /// Partition maximizing the median (first on ties).
    pub best_alpha_p50: f64,
}

impl AlphaSweep {
    pub fn row(&self, alpha: f64) -> Option<&PercentileRow> {
        self.rows.iter().find(|r| (r.alpha - alpha).abs() < 1e-12)
    }
}

/// Options for running a campaign.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` reads `SBH_WORKERS` or uses all cores.
    pub workers: Option<usize>,
    /// Print a progress line per finished drop to standard error.
    pub progress: bool,
}

fn resolve_workers(opt: Option<usize>) -> usize {
    opt.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs every drop of the campaign. Drop `d` draws only from streams keyed
/// by `(seed, d)`, so results do not depend on the worker count.
pub fn run_campaign_with(config: &SimConfig, opts: RunOptions) -> Result<CampaignResult> {
    config.validate()?;
    let workers = resolve_workers(opts.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SimError::Internal(format!("worker pool: {e}")))?;
    let done = AtomicUsize::new(0);
    let total = config.n_drops;
    let drops: Vec<DropResult> = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|d| {
                let r = run_drop(config, d);
                if opts.progress {
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    let mut err = std::io::stderr().lock();
                    let _ = write!(err, "\r  drops {n}/{total}");
                    if n as u64 == total {
                        let _ = writeln!(err);
                    }
                }
                r
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(CampaignResult::from_drops(config.clone(), drops))
}

pub fn run_campaign(config: &SimConfig) -> Result<CampaignResult> {
    run_campaign_with(config, RunOptions::default())
}

/// Runs a campaign and reports percentiles over `grid`.
pub fn sweep_alpha(config: &SimConfig, grid: &[f64]) -> Result<(CampaignResult, AlphaSweep)> {
    if let Some(bad) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(SimError::config(format!("alpha {bad} outside [0, 1]")));
    }
    let campaign = run_campaign(config)?;
    let sweep = campaign.sweep(grid);
    Ok((campaign, sweep))
}

/// `n` evenly spaced partitions from `start` to `stop` inclusive.
pub fn alpha_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(SimError::config(format!("bad alpha range {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let a = start + i as f64 * step;
            (a * 1e9).round() / 1e9
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> SimConfig {
        SimConfig {
            mode,
            n_drops: 2,
            slots_per_drop: 1,
            ..SimConfig::default()
        }
    }

    #[test]
    fn grid_construction() {
        let g = alpha_grid(0.0, 1.0, 0.05).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[20], 1.0);
        assert_eq!(g[17], 0.85);
        assert!(alpha_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn da_drop_shape() {
        let r = run_drop(&small(Mode::Da), 0).unwrap();
        assert_eq!(r.records.len(), 912);
        assert!(r.records.iter().all(|x| x.r_bh.is_none() && x.r_ac >= 0.0));
    }

    #[test]
    fn sbh_drop_bounds_and_determinism() {
        let cfg = small(Mode::SbhRandom);
        let a = run_drop(&cfg, 1).unwrap();
        let b = run_drop(&cfg, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 912);
        for r in &a.records {
            assert!(r.r_e2e <= (1.0 - cfg.alpha) * r.r_ac + 1e-9);
            assert!(r.r_e2e <= cfg.alpha * r.r_bh.unwrap() / r.k_l as f64 + 1e-9);
        }
    }
}
