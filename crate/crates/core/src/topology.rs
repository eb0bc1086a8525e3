//! Hexagonal macro layout with toroidal wrap-around, UE and small-cell
//! placement, and RSRP-based association.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{AccessAntenna, LayoutConfig};
use crate::error::{Result, SimError};

/// Number of sites in a full two-ring cluster; only this size wraps around.
pub const WRAP_SITES: usize = 19;
pub const SECTORS_PER_SITE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, angle_rad: f64) -> Self {
        Self::new(r * angle_rad.cos(), r * angle_rad.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Site {
    pub position: Vec2,
    pub sectors: [usize; SECTORS_PER_SITE],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sector {
    pub id: usize,
    pub site: usize,
    /// Index of the sector within its site (0, 1, 2).
    pub local_index: usize,
    /// Boresight azimuth, degrees counter-clockwise from +x.
    pub azimuth_deg: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub isd: f64,
    pub sites: Vec<Site>,
    pub sectors: Vec<Sector>,
    /// Origin plus the six cluster images when wrap-around is active.
    pub wrap_offsets: Vec<Vec2>,
    pub wrap_around: bool,
}

/// Axial hex coordinates of the first 19 sites in ring order.
fn site_axial_coords() -> Vec<(i32, i32)> {
    let dirs = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let mut out = vec![(0, 0)];
    for ring in 1..=2 {
        // start at ring * dir[4], walk each of the six sides
        let mut cur = (dirs[4].0 * ring, dirs[4].1 * ring);
        for d in dirs {
            for _ in 0..ring {
                out.push(cur);
                cur = (cur.0 + d.0, cur.1 + d.1);
            }
        }
    }
    out
}

fn axial_to_xy(q: i32, r: i32, isd: f64) -> Vec2 {
    Vec2::new(isd * (q as f64 + r as f64 / 2.0), isd * r as f64 * 3f64.sqrt() / 2.0)
}

/// Builds the macro layout. Only the 19-site cluster gets wrap-around.
pub fn build_layout(isd: f64, n_sites: usize) -> Result<NetworkLayout> {
    if !(isd > 0.0 && isd.is_finite()) {
        return Err(SimError::config(format!("isd must be positive, got {isd}")));
    }
    if !(1..=WRAP_SITES).contains(&n_sites) {
        return Err(SimError::config(format!("n_sites must be in 1..=19, got {n_sites}")));
    }
    let mut sites = Vec::with_capacity(n_sites);
    let mut sectors = Vec::with_capacity(n_sites * SECTORS_PER_SITE);
    for (s, &(q, r)) in site_axial_coords().iter().take(n_sites).enumerate() {
        let mut ids = [0; SECTORS_PER_SITE];
        for (k, id) in ids.iter_mut().enumerate() {
            *id = sectors.len();
            sectors.push(Sector {
                id: *id,
                site: s,
                local_index: k,
                azimuth_deg: 120.0 * k as f64,
                height: 0.0,
            });
        }
        sites.push(Site {
            position: axial_to_xy(q, r, isd),
            sectors: ids,
        });
    }
    let wrap_around = n_sites == WRAP_SITES;
    let mut wrap_offsets = vec![Vec2::ZERO];
    if wrap_around {
        // Cluster translation (5, -2) in axial units and its 60° rotations.
        let (mut q, mut r) = (5, -2);
        for _ in 0..6 {
            wrap_offsets.push(axial_to_xy(q, r, isd));
            (q, r) = (-r, q + r);
        }
    }
    Ok(NetworkLayout {
        isd,
        sites,
        sectors,
        wrap_offsets,
        wrap_around,
    })
}

impl NetworkLayout {
    /// Builds the layout from config and stamps the antenna height.
    pub fn from_config(cfg: &LayoutConfig) -> Result<Self> {
        let mut layout = build_layout(cfg.isd, cfg.n_sites)?;
        for s in &mut layout.sectors {
            s.height = cfg.bs_height;
        }
        Ok(layout)
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    /// Displacement from `from` to the nearest wrap image of `to`.
    pub fn wrapped_delta(&self, from: Vec2, to: Vec2) -> Vec2 {
        let mut best = to - from;
        let mut best_d = best.norm();
        for &o in &self.wrap_offsets[1..] {
            let d = to + o - from;
            let n = d.norm();
            if n < best_d {
                best = d;
                best_d = n;
            }
        }
        best
    }

    pub fn wrapped_distance(&self, a: Vec2, b: Vec2) -> f64 {
        self.wrapped_delta(a, b).norm()
    }

    /// Hexagon circumradius of one site.
    pub fn cell_radius(&self) -> f64 {
        self.isd / 3f64.sqrt()
    }

    /// True if the site-relative point lies in the sector's 120° share of the hexagon.
    pub fn sector_contains(&self, sector: usize, p: Vec2) -> bool {
        let sec = &self.sectors[sector];
        let rel = p - self.sites[sec.site].position;
        in_hexagon(rel, self.isd) && in_wedge(rel, sec.azimuth_deg)
    }

    /// Uniform point inside a sector, rejection-sampled from the hexagon box.
    pub fn sample_in_sector<R: Rng + ?Sized>(&self, sector: usize, rng: &mut R) -> Vec2 {
        let sec = &self.sectors[sector];
        let site = self.sites[sec.site].position;
        let r = self.cell_radius();
        loop {
            let rel = Vec2::new(rng.random_range(-r..r), rng.random_range(-r..r));
            if in_hexagon(rel, self.isd) && in_wedge(rel, sec.azimuth_deg) {
                return site + rel;
            }
        }
    }

    /// Nearest site (by wrap-minimal distance) and the displacement to it.
    pub fn nearest_site(&self, p: Vec2) -> (usize, Vec2) {
        let mut best = (0, Vec2::ZERO, f64::INFINITY);
        for (i, s) in self.sites.iter().enumerate() {
            let d = self.wrapped_delta(p, s.position);
            if d.norm() < best.2 {
                best = (i, d, d.norm());
            }
        }
        (best.0, best.1)
    }

    fn min_site_distance(&self, p: Vec2) -> f64 {
        self.sites
            .iter()
            .map(|s| self.wrapped_distance(p, s.position))
            .fold(f64::INFINITY, f64::min)
    }
}

fn in_hexagon(rel: Vec2, isd: f64) -> bool {
    let apothem = isd / 2.0;
    (0..6).all(|k| {
        let a = k as f64 * PI / 3.0;
        rel.dot(Vec2::from_polar(1.0, a)) <= apothem
    })
}

fn in_wedge(rel: Vec2, azimuth_deg: f64) -> bool {
    let off = wrap_deg(rel.angle().to_degrees() - azimuth_deg);
    off > -60.0 && off <= 60.0
}

/// Normalizes an angle to (-180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let mut x = a % 360.0;
    if x <= -180.0 {
        x += 360.0;
    } else if x > 180.0 {
        x -= 360.0;
    }
    x
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserNode {
    pub id: usize,
    pub position: Vec2,
    pub height: f64,
    /// Sector whose area the UE was dropped in.
    pub home_sector: usize,
    /// Serving small cell (self-backhaul) or sector (direct access).
    pub serving_cell: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmallCellNode {
    pub id: usize,
    pub position: Vec2,
    pub height: f64,
    pub access_antenna: AccessAntenna,
    /// Reference azimuth of the downward-facing access antenna, degrees.
    pub orientation_deg: f64,
    pub serving_sector: Option<usize>,
    pub connected_ues: Vec<usize>,
    /// UE this cell was placed for (ad-hoc only).
    pub target_ue: Option<usize>,
}

/// Drops exactly `k_per_sector` UEs uniformly in each sector, keeping the
/// configured 2-D clearance from every site.
pub fn drop_ues<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    cfg: &LayoutConfig,
    k_per_sector: usize,
    rng: &mut R,
) -> Result<Vec<UserNode>> {
    if k_per_sector == 0 {
        return Err(SimError::config("ues_per_sector must be >= 1"));
    }
    let mut ues = Vec::with_capacity(layout.n_sectors() * k_per_sector);
    for sector in 0..layout.n_sectors() {
        for _ in 0..k_per_sector {
            let position = loop {
                let p = layout.sample_in_sector(sector, rng);
                if layout.min_site_distance(p) >= cfg.min_ue_site_distance {
                    break p;
                }
            };
            ues.push(UserNode {
                id: ues.len(),
                position,
                height: cfg.ue_height,
                home_sector: sector,
                serving_cell: None,
            });
        }
    }
    Ok(ues)
}

/// Drops `l_per_sector` small cells uniformly per sector subject to the
/// site clearance and pairwise separation rules.
pub fn deploy_scs_random<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    cfg: &LayoutConfig,
    l_per_sector: usize,
    antenna: AccessAntenna,
    rng: &mut R,
) -> Result<Vec<SmallCellNode>> {
    let mut scs: Vec<SmallCellNode> = Vec::with_capacity(layout.n_sectors() * l_per_sector);
    for sector in 0..layout.n_sectors() {
        for _ in 0..l_per_sector {
            let mut placed = None;
            for _ in 0..cfg.max_placement_attempts {
                let p = layout.sample_in_sector(sector, rng);
                if layout.min_site_distance(p) < cfg.min_sc_site_distance {
                    continue;
                }
                if scs
                    .iter()
                    .any(|s| layout.wrapped_distance(s.position, p) < cfg.min_sc_sc_distance)
                {
                    continue;
                }
                placed = Some(p);
                break;
            }
            let position = placed.ok_or_else(|| SimError::Deployment {
                sector,
                reason: format!(
                    "no valid position after {} attempts",
                    cfg.max_placement_attempts
                ),
            })?;
            scs.push(SmallCellNode {
                id: scs.len(),
                position,
                height: cfg.sc_height,
                access_antenna: antenna,
                orientation_deg: rng.random_range(-180.0..180.0),
                serving_sector: None,
                connected_ues: Vec::new(),
                target_ue: None,
            });
        }
    }
    Ok(scs)
}

/// Places one small cell per UE at 2-D distance `d`, rotated by a uniform
/// angle in (-π/2, π/2) from the UE's bearing to its closest site.
pub fn deploy_scs_adhoc<R: Rng + ?Sized>(
    ues: &[UserNode],
    layout: &NetworkLayout,
    cfg: &LayoutConfig,
    d: f64,
    antenna: AccessAntenna,
    rng: &mut R,
) -> Result<Vec<SmallCellNode>> {
    if !(d >= 0.0) {
        return Err(SimError::config(format!("ue_sc_distance must be >= 0, got {d}")));
    }
    let mut scs = Vec::with_capacity(ues.len());
    for ue in ues {
        let theta = adhoc_angle(rng);
        let (_, to_site) = layout.nearest_site(ue.position);
        let position = ue.position + Vec2::from_polar(d, to_site.angle() + theta);
        scs.push(SmallCellNode {
            id: scs.len(),
            position,
            height: cfg.sc_height,
            access_antenna: antenna,
            orientation_deg: rng.random_range(-180.0..180.0),
            serving_sector: None,
            connected_ues: Vec::new(),
            target_ue: Some(ue.id),
        });
    }
    Ok(scs)
}

/// Uniform draw on the open interval (-π/2, π/2).
fn adhoc_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let t = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        if t != -FRAC_PI_2 {
            return t;
        }
    }
}

/// Wideband RSRP in dB, row-major by device.
#[derive(Debug, Clone)]
pub struct RsrpTable {
    pub n_devices: usize,
    pub n_servers: usize,
    pub values: Vec<f64>,
}

impl RsrpTable {
    pub fn new(n_devices: usize, n_servers: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n_devices * n_servers);
        Self {
            n_devices,
            n_servers,
            values,
        }
    }

    pub fn row(&self, device: usize) -> &[f64] {
        &self.values[device * self.n_servers..(device + 1) * self.n_servers]
    }
}

/// Assigns each device to its strongest server; ties go to the lowest index.
pub fn associate(table: &RsrpTable) -> Result<Vec<usize>> {
    (0..table.n_devices)
        .map(|dev| {
            let mut best: Option<(usize, f64)> = None;
            for (s, &v) in table.row(dev).iter().enumerate() {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((s, v));
                }
            }
            best.map(|(s, _)| s)
                .ok_or(SimError::Association { device: dev })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamFactory};

    fn layout19() -> NetworkLayout {
        NetworkLayout::from_config(&LayoutConfig::default()).unwrap()
    }

    #[test]
    fn full_cluster_shape() {
        let l = build_layout(500.0, 19).unwrap();
        assert_eq!(l.n_sectors(), 57);
        assert_eq!(l.wrap_offsets.len(), 7);
        assert!(l.wrap_around);
        for site in &l.sites {
            let az: Vec<f64> = site.sectors.iter().map(|&s| l.sectors[s].azimuth_deg).collect();
            assert_eq!(az, vec![0.0, 120.0, 240.0]);
        }
    }

    #[test]
    fn single_site_has_no_images() {
        let l = build_layout(500.0, 1).unwrap();
        assert_eq!(l.n_sectors(), 3);
        assert_eq!(l.wrap_offsets, vec![Vec2::ZERO]);
        assert!(!l.wrap_around);
    }

    #[test]
    fn non_positive_isd_rejected() {
        assert!(build_layout(0.0, 19).is_err());
        assert!(build_layout(-3.0, 19).is_err());
    }

    #[test]
    fn every_site_sees_six_neighbours_under_wrap() {
        let l = layout19();
        for a in &l.sites {
            let near = l
                .sites
                .iter()
                .filter(|b| {
                    let d = l.wrapped_distance(a.position, b.position);
                    (d - 500.0).abs() < 1e-6
                })
                .count();
            assert_eq!(near, 6);
            let min_other = l
                .sites
                .iter()
                .map(|b| l.wrapped_distance(a.position, b.position))
                .filter(|&d| d > 1e-6)
                .fold(f64::INFINITY, f64::min);
            assert!((min_other - 500.0).abs() < 1e-6);
        }
    }

    #[test]
    fn sectors_tile_the_site_hexagon() {
        let l = layout19();
        let mut rng = StreamFactory::new(3).for_drop(0).stream(Purpose::UeDrop, &[]);
        let r = l.cell_radius();
        for _ in 0..2000 {
            let rel = Vec2::new(rng.random_range(-r..r), rng.random_range(-r..r));
            let p = l.sites[4].position + rel;
            let owners = l.sites[4]
                .sectors
                .iter()
                .filter(|&&s| l.sector_contains(s, p))
                .count();
            assert_eq!(owners, usize::from(in_hexagon(rel, l.isd)));
        }
    }

    #[test]
    fn ue_drop_counts_and_clearance() {
        let l = layout19();
        let cfg = LayoutConfig::default();
        let mut rng = StreamFactory::new(1).for_drop(0).stream(Purpose::UeDrop, &[]);
        let ues = drop_ues(&l, &cfg, 16, &mut rng).unwrap();
        assert_eq!(ues.len(), 912);
        let ues = drop_ues(&l, &cfg, 1, &mut rng).unwrap();
        assert_eq!(ues.len(), 57);
        for u in &ues {
            assert!(l.sector_contains(u.home_sector, u.position));
            assert!(l.min_site_distance(u.position) >= 35.0);
        }
    }

    #[test]
    fn random_sc_counts() {
        let l = layout19();
        let cfg = LayoutConfig::default();
        let mut rng = StreamFactory::new(1).for_drop(0).stream(Purpose::ScDrop, &[]);
        let scs = deploy_scs_random(&l, &cfg, 16, AccessAntenna::Patch, &mut rng).unwrap();
        assert_eq!(scs.len(), 912);
        let scs = deploy_scs_random(&l, &cfg, 4, AccessAntenna::Patch, &mut rng).unwrap();
        assert_eq!(scs.len(), 228);
        assert!(scs.iter().all(|s| s.height == 5.0));
    }

    #[test]
    fn impossible_separation_names_sector() {
        let l = build_layout(500.0, 1).unwrap();
        let cfg = LayoutConfig {
            min_sc_sc_distance: 400.0,
            max_placement_attempts: 50,
            ..LayoutConfig::default()
        };
        let mut rng = StreamFactory::new(1).for_drop(0).stream(Purpose::ScDrop, &[]);
        match deploy_scs_random(&l, &cfg, 4, AccessAntenna::Patch, &mut rng) {
            Err(SimError::Deployment { sector, .. }) => assert_eq!(sector, 0),
            other => panic!("expected deployment error, got {other:?}"),
        }
    }

    #[test]
    fn adhoc_distance_is_exact() {
        let l = layout19();
        let cfg = LayoutConfig::default();
        let mut rng = StreamFactory::new(5).for_drop(0).stream(Purpose::UeDrop, &[]);
        let ues = drop_ues(&l, &cfg, 16, &mut rng).unwrap();
        for d in [0.0, 10.0] {
            let scs = deploy_scs_adhoc(&ues, &l, &cfg, d, AccessAntenna::Yagi, &mut rng).unwrap();
            assert_eq!(scs.len(), ues.len());
            for (sc, ue) in scs.iter().zip(&ues) {
                let d2 = (sc.position - ue.position).norm();
                assert!((d2 - d).abs() < 1e-9);
                let d3 = d2.hypot(sc.height - ue.height);
                if d == 0.0 {
                    assert!((d3 - 3.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn association_argmax_and_ties() {
        let t = RsrpTable::new(2, 2, vec![-80.0, -90.0, -70.0, -70.0]);
        assert_eq!(associate(&t).unwrap(), vec![0, 0]);
        let t = RsrpTable::new(1, 3, vec![-95.0, -60.0, -61.0]);
        assert_eq!(associate(&t).unwrap(), vec![1]);
        let t = RsrpTable::new(1, 0, vec![]);
        assert!(matches!(associate(&t), Err(SimError::Association { device: 0 })));
    }

    #[test]
    fn wrap_deg_range() {
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(270.0), -90.0);
        assert_eq!(wrap_deg(-450.0), -90.0);
    }
}
