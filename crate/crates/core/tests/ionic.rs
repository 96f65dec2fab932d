use gapjunc::ionic::{
    bundled, condition_sweep, Dynamics, Kinetics, Model, Network, PreparedModel, RateFn,
    ReductionRule, SweepConfig, Table,
};
use gapjunc::region::{boundaries, classify, g_bounds, k_exc, k_max, Branch};
use gapjunc::tree::{k_prop, tree_g_min};
use gapjunc::{Coupling, CubicCell, Error, Excitable, GridSpec, PropagationClass};

fn hh() -> PreparedModel {
    PreparedModel::new(bundled("hh-squid").unwrap()).unwrap()
}

#[test]
fn cubic_pseudo_model_matches_direct_analysis() {
    for v_t in [0.1, 0.15, 0.2, 0.3, 0.45] {
        let prepared = PreparedModel::new(Model::cubic(v_t).unwrap()).unwrap();
        let red = &prepared.reduced;
        let direct = CubicCell::new(v_t).unwrap();
        let (a, b) = (red.landmarks(), direct.landmarks());
        for (x, y) in [
            (a.v_min, b.v_min),
            (a.v_t, b.v_t),
            (a.v_i, b.v_i),
            (a.v_e, b.v_e),
            (a.v_max, b.v_max),
            (a.v_f, b.v_f),
        ] {
            assert!((x - y).abs() < 1e-8, "v_t={v_t}: {x} vs {y}");
        }
        let (ra, rb) = (
            boundaries(red, 1.0).unwrap(),
            boundaries(&direct, 1.0).unwrap(),
        );
        for (x, y) in [
            (ra.g_min, rb.g_min),
            (ra.g_max, rb.g_max),
            (ra.g_star, rb.g_star),
            (ra.g_peak, rb.g_peak),
            (ra.k_peak, rb.k_peak),
        ] {
            assert!(
                (x - y).abs() < 1e-8 * (1.0 + y.abs()),
                "v_t={v_t}: {x} vs {y}"
            );
        }
        assert!((tree_g_min(red).unwrap() - tree_g_min(&direct).unwrap()).abs() < 1e-8);
        for g in GridSpec::linear(0.01, 0.3, 15).values() {
            assert!((k_exc(red, g) - k_exc(&direct, g)).abs() < 1e-8);
            if let (Ok(x), Ok(y)) = (k_prop(red, g), k_prop(&direct, g)) {
                assert!((x.k - y.k).abs() < 1e-7, "v_t={v_t} g={g}: {x:?} vs {y:?}");
                let at_switch = (y.k - direct.f_prime(b.v_e) / g).abs() < 1e-6;
                assert!(x.branch == y.branch || at_switch);
            }
            for k in GridSpec::linear(0.0, 6.0, 15).values() {
                let cp = Coupling::new(g, k, 1.0).unwrap();
                assert_eq!(classify(red, &cp), classify(&direct, &cp), "({g}, {k})");
            }
        }
    }
}

#[test]
fn bundled_cubic_sweep_matches_classification() {
    let prepared = PreparedModel::new(bundled("cubic").unwrap()).unwrap();
    let cell = CubicCell::new(0.15).unwrap();
    let g_i = cell.f_prime(cell.landmarks().v_i);
    let mut cfg = SweepConfig::new(&prepared, Network::Single, Dynamics::Full);
    cfg.t_end = 300.0;
    cfg.dt = 0.02;
    let gs = [0.012, 0.03, 0.07, 0.12];
    let ks = [0.0, 1.0, 3.0, 5.0];
    let res = condition_sweep(&prepared, &gs, &ks, &cfg).unwrap();
    assert_eq!(res.points.len(), 16);
    let mut agreed = 0;
    for p in &res.points {
        assert!(p.diff >= -1e-9);
        let theory = classify(&cell, &Coupling::new(p.g, p.k, 1.0).unwrap());
        let near = |b: f64| (p.k - b).abs() < 0.3;
        if p.g * (p.k + 1.0) >= 0.9 * g_i
            || near(k_exc(&cell, p.g))
            || k_max(&cell, 1.0, p.g).is_ok_and(|m| near(m.k))
        {
            continue;
        }
        assert_eq!(p.class, Some(theory), "({}, {})", p.g, p.k);
        if theory == PropagationClass::SemiActive {
            assert!(res.in_band(p));
        }
        agreed += 1;
    }
    assert!(agreed >= 8, "{agreed}");
}

#[test]
fn hh_reduction_is_excitable() {
    let m = hh();
    let lm = m.landmarks();
    assert!(lm.is_ordered());
    assert!((m.rest.v_rest + 65.0).abs() < 0.5, "{}", m.rest.v_rest);
    assert_eq!(lm.v_f, 1.0);
    let (g_min, g_max) = g_bounds(&m.reduced, 1.0).unwrap();
    assert!(0.0 < g_min && g_min < g_max);
    assert!(m.reduced.g_leak() > 0.0);
    let report = m.timescales().unwrap();
    let by_name = |n: &str| report.gates.iter().find(|g| g.gate == n).unwrap();
    assert_eq!(by_name("m").suggested, ReductionRule::Instantaneous);
    assert_eq!(by_name("h").suggested, ReductionRule::FrozenAtRest);
    assert_eq!(by_name("n").suggested, ReductionRule::FrozenAtRest);
}

#[test]
fn tabulated_rates_reproduce_reduction() {
    let Model::Conductance(mut model) = bundled("hh-squid").unwrap() else {
        unreachable!()
    };
    let v: Vec<f64> = (0..=340).map(|i| -100.0 + 0.5 * i as f64).collect();
    for gate in &mut model.gates {
        let Kinetics::Rates { alpha, beta } = &gate.kinetics else {
            unreachable!()
        };
        let tab = |r: &RateFn| {
            RateFn::Table(Table::new(v.clone(), v.iter().map(|&x| r.eval(x)).collect()).unwrap())
        };
        gate.kinetics = Kinetics::Rates {
            alpha: tab(alpha),
            beta: tab(beta),
        };
    }
    let text = serde_json::to_string(&Model::Conductance(model)).unwrap();
    let tabulated = PreparedModel::new(Model::from_json(&text).unwrap()).unwrap();
    let analytic = hh();
    let (a, b) = (tabulated.landmarks(), analytic.landmarks());
    for (x, y) in [
        (a.v_t, b.v_t),
        (a.v_i, b.v_i),
        (a.v_e, b.v_e),
        (a.v_max, b.v_max),
    ] {
        assert!((x - y).abs() < 2e-3, "{x} vs {y}");
    }
    assert!((tabulated.rest.v_rest - analytic.rest.v_rest).abs() < 1e-2);
}

#[test]
fn model_errors_locate_the_problem() {
    let text = bundled_text("hh-squid").replace("\"gate\": \"n\"", "\"gate\": \"q\"");
    let err = Model::from_json(&text).unwrap_err();
    assert!(matches!(err, Error::Model(_)));
    assert!(
        err.to_string()
            .contains("currents[1] ('K').gates[0]: unknown gate 'q'"),
        "{err}"
    );

    let text = bundled_text("hh-squid").replace("\"exponent\": 3", "\"exponent\": \"three\"");
    let err = Model::from_json(&text).unwrap_err();
    assert!(matches!(err, Error::ModelParse(_)));
    assert!(err.to_string().contains("line 14"), "{err}");

    for name in ["traub-template", "luo-rudy-template"] {
        let m = bundled(name).unwrap();
        assert!(PreparedModel::new(m).is_err());
    }
}

fn bundled_text(name: &str) -> String {
    gapjunc::ionic::BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| t.to_string())
        .unwrap()
}

fn tree_firing_beyond_adjusted(name: &str, gs: &[f64], ks: &[f64], t_end: f64) -> Vec<(f64, f64)> {
    let m = PreparedModel::new(bundled(name).unwrap()).unwrap();
    let mut cfg = SweepConfig::new(&m, Network::Tree { n_cells: 10 }, Dynamics::Full);
    cfg.t_end = t_end;
    let res = condition_sweep(&m, gs, ks, &cfg).unwrap();
    let dk = ks[1] - ks[0];
    let mut firing = 0;
    let mut outside = Vec::new();
    for (i, o) in res.overlays.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            if !res.fires(res.at(i, j)) {
                continue;
            }
            firing += 1;
            if k > o.k_boundary_adj.unwrap_or(f64::NEG_INFINITY) + dk {
                outside.push((o.g, k));
            }
        }
    }
    assert!(firing > 0, "{name}: nothing propagates");
    outside
}

#[test]
fn hh_tree_propagation_inside_adjusted_prediction() {
    let gs = GridSpec::log(0.05, 30.0, 7).values();
    let ks = GridSpec::linear(0.0, 20.0, 7).values();
    let outside = tree_firing_beyond_adjusted("hh-squid", &gs, &ks, 30.0);
    assert!(outside.is_empty(), "{outside:?}");
}

#[test]
fn cubic_tree_propagation_inside_adjusted_prediction_on_tangency_branch() {
    let cell = CubicCell::new(0.15).unwrap();
    let gs = GridSpec::linear(0.005, 0.3, 12).values();
    let ks = GridSpec::linear(0.0, 6.0, 12).values();
    let outside = tree_firing_beyond_adjusted("cubic", &gs, &ks, 200.0);
    // the slope branch underestimates how far a sustained clamp reaches
    let on_tangency: Vec<_> = outside
        .iter()
        .filter(|(g, _)| k_prop(&cell, *g).is_ok_and(|kp| kp.branch == Branch::Tangency))
        .collect();
    assert!(on_tangency.is_empty(), "{on_tangency:?}");
    assert!(outside.iter().all(|(g, _)| *g > 0.08), "{outside:?}");
}
