mod common;

use gapjunc::region::Branch;
use gapjunc::tree::{
    iterate_phi, k_prop, persistent_propagation, phi, psi, rest_excited_equilibria, tree_g_min,
    LimitTag,
};
use gapjunc::{CubicCell, Excitable, GridSpec};
use proptest::prelude::*;

fn cell() -> CubicCell {
    CubicCell::new(0.15).unwrap()
}

#[test]
fn limit_tags_follow_persistence() {
    let c = cell();
    let g_min = tree_g_min(&c).unwrap();
    let mut counts = [0usize; 2];
    for g in GridSpec::linear(0.005, 0.3, 100).values() {
        let edge = (g > g_min).then(|| k_prop(&c, g).unwrap().k);
        for k in GridSpec::linear(0.0, 6.0, 100).values() {
            if edge.is_some_and(|e| (k - e).abs() < 1e-4) || (g - g_min).abs() < 1e-4 {
                continue;
            }
            let predicted = persistent_propagation(&c, g, k);
            assert_eq!(
                predicted,
                common::persists(0.15, g, k),
                "oracle at ({g}, {k})"
            );
            let trace = iterate_phi(&c, g, k, 1e-12, 1_000_000).unwrap();
            let expected = if predicted {
                LimitTag::ConvergedToVPlus
            } else {
                LimitTag::ConvergedToZero
            };
            assert_eq!(
                trace.limit_tag, expected,
                "({g}, {k}) limit {}",
                trace.limit
            );
            counts[predicted as usize] += 1;
        }
    }
    assert!(counts[0] > 1000 && counts[1] > 1000, "{counts:?}");
}

#[test]
fn spot_limits() {
    let c = cell();
    let t = iterate_phi(&c, 0.07, 2.0, 1e-12, 100_000).unwrap();
    assert_eq!(t.limit_tag, LimitTag::ConvergedToVPlus);
    assert!((t.limit - 0.77656).abs() < 1e-4);
    assert_eq!(t.iterates[0], 1.0);
    let t = iterate_phi(&c, 0.07, 3.0, 1e-12, 100_000).unwrap();
    assert_eq!(t.limit_tag, LimitTag::ConvergedToZero);
    assert!(t.limit.abs() < 1e-9);
}

#[test]
fn equilibria_solve_chord_equation() {
    let c = cell();
    for g in [0.01, 0.03, 0.07] {
        for k in [0.0, 0.5, 1.0, 2.0] {
            let Some(p) = rest_excited_equilibria(&c, g, k) else {
                continue;
            };
            let v_e = c.landmarks().v_e;
            assert!(p.v_minus <= v_e && v_e <= p.v_plus);
            for v in [p.v_minus, p.v_plus] {
                assert!((c.f(v) - g * k * v).abs() < 1e-12);
            }
            let o = common::v_plus(0.15, g * k).unwrap();
            assert!((p.v_plus - o).abs() < 1e-10);
        }
    }
}

#[test]
fn k_prop_shape() {
    let c = cell();
    let g_min = tree_g_min(&c).unwrap();
    assert!((g_min - 0.005625).abs() < 1e-6);
    assert!(k_prop(&c, g_min).unwrap().k.abs() < 1e-6);
    let fe = c.f_prime(c.landmarks().v_e);
    assert!((fe - 0.180625).abs() < 1e-15);

    let gs = GridSpec::log(g_min * (1.0 + 1e-9), 100.0, 2000).values();
    let pts: Vec<_> = gs.iter().map(|&g| (g, k_prop(&c, g).unwrap())).collect();
    let mut switches = 0;
    let mut peaks = 0;
    for w in pts.windows(3) {
        let ((g0, a), (g1, b), (_, d)) = (w[0], w[1], w[2]);
        let slope_bound = 2.0 * fe / (g0 * g0);
        assert!(
            (b.k - a.k).abs() <= slope_bound * (g1 - g0) + 1e-8,
            "jump at {g1}"
        );
        if a.branch != b.branch {
            assert_eq!((a.branch, b.branch), (Branch::Tangency, Branch::Slope));
            switches += 1;
        }
        if b.k > a.k && b.k > d.k {
            peaks += 1;
        }
    }
    assert_eq!(switches, 1);
    assert_eq!(peaks, 1);
    for &(g, kp) in &pts {
        if kp.branch == Branch::Slope {
            assert!((kp.k - fe / g).abs() < 1e-8);
        }
    }
    assert!(pts.last().unwrap().1.k < 2e-3);
}

proptest! {
    #[test]
    fn phi_nondecreasing(g in 0.005f64..0.3, k in 0.0f64..6.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let c = cell();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(phi(&c, g, k, lo) <= phi(&c, g, k, hi) + 1e-12);
    }

    #[test]
    fn psi_inverts_phi(g in 0.005f64..0.3, k in 0.0f64..6.0, v_u in 0.0f64..1.0) {
        let c = cell();
        let v = phi(&c, g, k, v_u);
        // phi jumps where the drive crosses the critical voltage; skip that seam
        let seam = gapjunc::region::critical_upstream_voltage(&c, g, k);
        prop_assume!(seam.is_none_or(|s| (s - v_u).abs() > 1e-6));
        prop_assert!((psi(&c, g, k, v) - v_u).abs() < 1e-8);
    }
}
