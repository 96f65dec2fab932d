mod common;

use common::close;
use gapjunc::region::{
    adjust_boundary, alpha_attenuation, boundaries, classify, critical_upstream_voltage, fires,
    g_bounds, k_exc, k_max, v_infinity, Branch,
};
use gapjunc::{Coupling, CubicCell, Excitable, GridSpec, PropagationClass};
use proptest::prelude::*;

const THRESHOLDS: [f64; 5] = [0.1, 0.15, 0.2, 0.3, 0.45];

fn cell(v_t: f64) -> CubicCell {
    CubicCell::new(v_t).unwrap()
}

#[test]
fn boundaries_match_oracles() {
    for v_t in THRESHOLDS {
        for v_u in [0.6, 1.0] {
            let c = cell(v_t);
            let b = boundaries(&c, v_u).unwrap();
            assert!(
                close(b.g_min, common::g_min(v_t, v_u), 1e-8),
                "g_min {v_t} {v_u}"
            );
            assert!(close(b.g_max, common::g_max(v_t), 1e-8), "g_max {v_t}");
            assert!(
                close(b.g_star, common::g_star(v_t, v_u), 1e-8),
                "g_star {v_t} {v_u}"
            );
            let (g_peak, k_peak) = common::peak(v_t, v_u);
            assert!(
                close(b.g_peak, g_peak, 1e-8),
                "g_peak {v_t} {v_u}: {} vs {g_peak}",
                b.g_peak
            );
            assert!(
                close(b.k_peak, k_peak, 1e-8),
                "k_peak {v_t} {v_u}: {} vs {k_peak}",
                b.k_peak
            );
        }
    }
}

#[test]
fn k_max_matches_brute_force() {
    for v_t in [0.15, 0.3] {
        let c = cell(v_t);
        let (g_min, g_max) = g_bounds(&c, 1.0).unwrap();
        for g in GridSpec::linear(g_min, g_max, 12).values()[1..11]
            .iter()
            .copied()
        {
            let k = k_max(&c, 1.0, g).unwrap().k;
            let o = common::k_max(v_t, 1.0, g);
            assert!((k - o).abs() < 1e-6 * (1.0 + o), "g={g}: {k} vs {o}");
        }
    }
}

#[test]
fn branches_meet_at_g_star() {
    let c = cell(0.15);
    let b = boundaries(&c, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for e in [1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
        let lo = k_max(&c, 1.0, b.g_star - e).unwrap();
        let hi = k_max(&c, 1.0, b.g_star + e).unwrap();
        assert_eq!(lo.branch, Branch::Tangency);
        assert_eq!(hi.branch, Branch::Slope);
        let gap = (lo.k - hi.k).abs();
        assert!(gap < prev || gap < 1e-9);
        prev = gap;
    }
    assert!(prev < 1e-4);
}

#[test]
fn k_max_unimodal() {
    for v_t in THRESHOLDS {
        let c = cell(v_t);
        let b = boundaries(&c, 1.0).unwrap();
        let gs = GridSpec::linear(b.g_min, b.g_max, 1002).values();
        let ks: Vec<(f64, f64)> = gs[1..1001]
            .iter()
            .map(|&g| (g, k_max(&c, 1.0, g).unwrap().k))
            .collect();
        for w in ks.windows(2) {
            let ((g0, k0), (g1, k1)) = (w[0], w[1]);
            if g1 <= b.g_peak {
                assert!(k1 > k0, "not rising at {g1} for v_t={v_t}");
            } else if g0 >= b.g_peak {
                assert!(k1 < k0, "not falling at {g1} for v_t={v_t}");
            }
        }
        let at_peak = k_max(&c, 1.0, b.g_peak).unwrap().k;
        assert!(
            (at_peak - b.k_peak).abs() < 1e-8,
            "{at_peak} vs {}",
            b.k_peak
        );
    }
}

/// Distance in `k` from the firing boundary, or infinity outside `(g_min, g_max)`.
fn margin(c: &CubicCell, g: f64, k: f64) -> f64 {
    match k_max(c, 1.0, g) {
        Ok(km) => (k - km.k).abs().min((k - k_exc(c, g)).abs()),
        Err(_) => f64::INFINITY,
    }
}

#[test]
fn firing_equivalences_on_grid() {
    let c = cell(0.15);
    let g_i = c.f_prime(c.landmarks().v_i);
    let v_i = c.landmarks().v_i;
    let mut checked = 0;
    for g in GridSpec::linear(0.005, 0.3, 200).values() {
        for k in GridSpec::linear(0.0, 6.0, 200).values() {
            if margin(&c, g, k) < 1e-4 || (g * (k + 1.0) - g_i).abs() < 1e-4 {
                continue;
            }
            let cp = Coupling::new(g, k, 1.0).unwrap();
            let f = fires(&c, &cp);
            assert_eq!(f, classify(&c, &cp) != PropagationClass::Passive);
            assert_eq!(f, common::fires(0.15, g, k, 1.0), "oracle at ({g}, {k})");
            let v_c = critical_upstream_voltage(&c, g, k);
            assert_eq!(
                f,
                v_c.is_some_and(|v| v < 1.0),
                "critical voltage at ({g}, {k})"
            );
            if g * (k + 1.0) < g_i {
                assert_eq!(
                    f,
                    v_infinity(&c, &cp) > v_i,
                    "settling branch at ({g}, {k})"
                );
            }
            checked += 1;
        }
    }
    assert!(checked > 35_000);
}

fn jump(c: &CubicCell, g: f64, dk: f64) -> f64 {
    let km = k_max(c, 1.0, g).unwrap().k;
    let below = v_infinity(c, &Coupling::new(g, km - dk, 1.0).unwrap());
    let above = v_infinity(c, &Coupling::new(g, km + dk, 1.0).unwrap());
    below - above
}

#[test]
fn jump_below_g_star_only() {
    let c = cell(0.15);
    let g_star = boundaries(&c, 1.0).unwrap().g_star;
    for g in [0.01, 0.02, 0.04, 0.05] {
        assert!(g < g_star);
        assert!(jump(&c, g, 1e-5) > 0.1, "no jump at {g}");
    }
    for g in [0.08, 0.1, 0.2] {
        let coarse = jump(&c, g, 1e-2);
        let fine = jump(&c, g, 1e-5);
        assert!(
            fine < coarse && fine < 1e-3,
            "jump at {g}: {coarse} -> {fine}"
        );
    }
}

#[test]
fn attenuation_examples() {
    assert_eq!(alpha_attenuation(0.1, 2.0, 0.0).unwrap(), 0.5);
    assert!((adjust_boundary(2.0, 0.1, 0.1).unwrap() - 8.0 / 3.0).abs() < 1e-12);
    let mut prev = f64::INFINITY;
    for r in GridSpec::log(1e-2, 1e6, 50).values() {
        let k = adjust_boundary(2.0, 0.1, 0.1 * r).unwrap();
        assert!(k <= prev && k >= 2.0);
        prev = k;
    }
    assert!(prev - 2.0 < 1e-5);
}

proptest! {
    #[test]
    fn alpha_solves_quadratic(g in 1e-3f64..10.0, k in 0.0f64..50.0, g_l in 0.0f64..10.0) {
        let a = alpha_attenuation(g, k, g_l).unwrap();
        let beta = 1.0 + g_l / g;
        prop_assert!(a > 0.0 && a < 1.0 || (k == 0.0 && g_l == 0.0 && a == 1.0));
        prop_assert!((k * a * a - (k + beta) * a + 1.0).abs() < 1e-12);
        prop_assert!((a - common::alpha(g, k, g_l)).abs() < 1e-9);
    }

    #[test]
    fn adjusted_boundary_solves_fixed_point(k0 in 0.0f64..20.0, g in 1e-3f64..2.0, g_l in 1e-4f64..2.0) {
        let k = adjust_boundary(k0, g, g_l).unwrap();
        prop_assert!(k >= k0);
        let o = common::adjusted(k0, g, g_l);
        prop_assert!((k - o).abs() < 1e-8 * (1.0 + o), "{} vs {}", k, o);
    }

    #[test]
    fn classes_follow_thresholds(v_t in 0.05f64..0.45, g in 1e-3f64..0.4, k in 0.0f64..8.0) {
        let c = cell(v_t);
        let cp = Coupling::new(g, k, 1.0).unwrap();
        match classify(&c, &cp) {
            PropagationClass::Active => prop_assert!(fires(&c, &cp) && k < k_exc(&c, g)),
            PropagationClass::SemiActive => prop_assert!(fires(&c, &cp) && k >= k_exc(&c, g)),
            PropagationClass::Passive => prop_assert!(!fires(&c, &cp)),
        }
    }
}
