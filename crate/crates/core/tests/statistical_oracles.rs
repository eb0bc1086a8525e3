//! Sample-moment and geometry checks against closed-form expectations.

use num_complex::Complex64;
use rand::Rng;
use sbh_core::config::{AccessAntenna, FadingConfig, LayoutConfig, PropagationConfig};
use sbh_core::fading::{draw_scalar_channel, draw_scalar_power, fill_mimo_column, rician_k_factor, ScalarLinkState};
use sbh_core::mimo::{estimate_channel, CMatrix};
use sbh_core::propagation::LinkType;
use sbh_core::rng::{Purpose, SimRng, StreamFactory};
use sbh_core::topology::{build_layout, deploy_scs_adhoc, deploy_scs_random, drop_ues, NetworkLayout};

fn rng(tag: u64) -> SimRng {
    StreamFactory::new(0x5eed).for_drop(tag).stream(Purpose::AccessMimoFading, &[tag])
}

fn layout() -> NetworkLayout {
    build_layout(500.0, 19).unwrap()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

#[test]
fn array_channel_entries_have_unit_power() {
    let m = 64;
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for (i, k) in [0.0, 0.5, 2.0, 20.0].into_iter().enumerate() {
        let mut r = rng(i as u64);
        let mut acc = 0.0;
        let draws = 4000;
        for _ in 0..draws {
            let bearing = r.random_range(-90.0..90.0);
            fill_mimo_column(&mut col, 1.0, k, bearing, 0.5, &mut r);
            acc += col.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let mean = acc / (draws * m) as f64;
        assert!((mean - 1.0).abs() < 0.01, "K={k}: E|h|^2 = {mean}");
    }
}

#[test]
fn rayleigh_array_covariance_is_scaled_identity() {
    let (m, draws, beta) = (8, 100_000, 3.0);
    let mut r = rng(10);
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    let mut cov = vec![Complex64::new(0.0, 0.0); m * m];
    for _ in 0..draws {
        fill_mimo_column(&mut col, beta, 0.0, 17.0, 0.5, &mut r);
        for a in 0..m {
            for b in 0..m {
                cov[a * m + b] += col[a] * col[b].conj();
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            let c = cov[a * m + b] / draws as f64 / beta;
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 0.03, "C[{a},{b}] = {c}");
        }
    }
}

#[test]
fn scalar_channel_power_and_rb_decorrelation() {
    let n = 200_000;
    for (i, k) in [0.0, 1.0, 10.0].into_iter().enumerate() {
        let s = ScalarLinkState::with_phase(2.0, k, 1.3);
        let mut r = rng(20 + i as u64);
        let g: Vec<Complex64> = (0..n).map(|_| draw_scalar_channel(&s, &mut r)).collect();
        let p = g.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((p / 2.0 - 1.0).abs() < 0.02, "K={k}: E|g|^2 = {p}");

        // consecutive draws stand for adjacent RBs: diffuse parts uncorrelated
        let mean = g.iter().sum::<Complex64>() / n as f64;
        let d: Vec<Complex64> = g.iter().map(|z| z - mean).collect();
        let var = d.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let lag = d.windows(2).map(|w| w[0] * w[1].conj()).sum::<Complex64>() / (n - 1) as f64;
        assert!(lag.norm() / var < 0.02, "K={k}: RB correlation {}", lag.norm() / var);

        let pw: Vec<f64> = (0..n).map(|_| draw_scalar_power(&s, &mut r)).collect();
        let mp = pw.iter().sum::<f64>() / n as f64;
        assert!((mp / 2.0 - 1.0).abs() < 0.02, "K={k}: E[power] = {mp}");
    }
}

#[test]
fn shadowing_moments_match_configured_sigma() {
    let cfg = PropagationConfig::default();
    let n = 100_000;
    for t in LinkType::ALL {
        for los in [true, false] {
            let sigma = cfg.shadowing_sigma(t, los);
            let mut r = rng(40 + los as u64);
            let v: Vec<f64> = (0..n).map(|_| cfg.draw_shadowing(t, los, &mut r)).collect();
            let (m, s) = mean_std(&v);
            assert!(m.abs() < 0.1, "{t:?} los={los}: mean {m}");
            assert!((s / sigma - 1.0).abs() < 0.02, "{t:?} los={los}: std {s} vs {sigma}");
        }
    }
}

#[test]
fn rician_k_spot_values() {
    let f = FadingConfig::default();
    assert!((rician_k_factor(&f, 0.0) - 13.0).abs() < 1e-12);
    assert!((rician_k_factor(&f, 100.0) - 10.0).abs() < 1e-12);
    assert!(rician_k_factor(&f, 13.0 / 0.03).abs() < 1e-9);
}

#[test]
fn pilot_noise_variance_after_correlation() {
    let (m, l, trials) = (8, 4, 10_000);
    let (noise, p_ul) = (2e-12, 0.2);
    let zero = CMatrix::zeros(m, l);
    let mut r = rng(50);
    let mut acc = 0.0;
    for _ in 0..trials {
        let e = estimate_channel(&zero, &[], p_ul, noise, &mut r).unwrap();
        acc += e.h_hat.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let var = acc / (trials * m * l) as f64;
    assert!((var / (noise / p_ul) - 1.0).abs() < 0.03, "variance {var}");
}

#[test]
fn ue_clearance_over_many_drops() {
    let lay = layout();
    let cfg = LayoutConfig::default();
    let mut r = rng(60);
    let mut min_d = f64::INFINITY;
    for _ in 0..10_000 {
        let ues = drop_ues(&lay, &cfg, 16, &mut r).unwrap();
        assert_eq!(ues.len(), 912);
        for u in &ues {
            min_d = min_d.min(lay.nearest_site(u.position).1.norm());
        }
    }
    assert!(min_d >= 35.0, "closest UE at {min_d} m");
}

#[test]
fn random_small_cell_separations() {
    let lay = layout();
    let cfg = LayoutConfig::default();
    // Points closer than 40 m lie in the same or adjacent hexagons, so only
    // those site pairs need the pairwise check.
    let reach = 2.0 * lay.isd / 3f64.sqrt() + 40.0;
    let near: Vec<Vec<bool>> = lay
        .sites
        .iter()
        .map(|a| lay.sites.iter().map(|b| lay.wrapped_distance(a.position, b.position) <= reach).collect())
        .collect();
    let mut r = rng(70);
    for _ in 0..1000 {
        let scs = deploy_scs_random(&lay, &cfg, 16, AccessAntenna::Patch, &mut r).unwrap();
        assert_eq!(scs.len(), 912);
        let home: Vec<usize> = scs
            .iter()
            .map(|a| {
                let (site, d) = lay.nearest_site(a.position);
                assert!(d.norm() >= 75.0);
                site
            })
            .collect();
        for (i, a) in scs.iter().enumerate() {
            for (j, b) in scs.iter().enumerate().skip(i + 1) {
                if near[home[i]][home[j]] {
                    assert!(lay.wrapped_distance(a.position, b.position) >= 40.0);
                }
            }
        }
    }
}

#[test]
fn adhoc_offset_angle_is_uniform() {
    let lay = layout();
    let cfg = LayoutConfig::default();
    let mut r = rng(80);
    let mut thetas = Vec::new();
    while thetas.len() < 10_000 {
        let ues = drop_ues(&lay, &cfg, 1, &mut r).unwrap();
        let scs = deploy_scs_adhoc(&ues, &lay, &cfg, 10.0, AccessAntenna::Yagi, &mut r).unwrap();
        for (u, s) in ues.iter().zip(&scs) {
            let to_sc = lay.wrapped_delta(u.position, s.position);
            assert!((to_sc.norm() - 10.0).abs() < 1e-9);
            let to_bs = lay.nearest_site(u.position).1;
            let cross = to_bs.x * to_sc.y - to_bs.y * to_sc.x;
            thetas.push(cross.atan2(to_bs.dot(to_sc)));
        }
    }
    thetas.sort_by(f64::total_cmp);
    let n = thetas.len() as f64;
    let half = std::f64::consts::FRAC_PI_2;
    let d = thetas
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = ((t + half) / (2.0 * half)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // Kolmogorov critical value at p = 0.01
    assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn adhoc_zero_distance_is_vertical_offset() {
    let lay = layout();
    let cfg = LayoutConfig::default();
    let mut r = rng(90);
    let ues = drop_ues(&lay, &cfg, 16, &mut r).unwrap();
    let scs = deploy_scs_adhoc(&ues, &lay, &cfg, 0.0, AccessAntenna::Yagi, &mut r).unwrap();
    for (u, s) in ues.iter().zip(&scs) {
        let d2 = lay.wrapped_distance(u.position, s.position);
        let d3 = (d2 * d2 + (s.height - u.height).powi(2)).sqrt();
        assert!((d3 - 3.5).abs() < 1e-12);
    }
}
