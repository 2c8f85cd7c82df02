use std::f64::consts::FRAC_1_SQRT_2;

use approx::assert_relative_eq;

use flapsim::harness::{
    self, bundled, compare_variants, read_metric_rows, ConfigError, ConfigFile, Metric, Scenario,
    BUNDLED,
};

fn scenario(name: &str) -> Scenario {
    Scenario::from_toml(bundled(name).unwrap()).unwrap()
}

#[test]
fn bundled_configs_validate() {
    for (name, text) in BUNDLED {
        let sc = Scenario::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(sc.duration > 0.0);
    }
}

#[test]
fn bundled_scenarios_complete() {
    for (name, _) in BUNDLED {
        let out = harness::run(&scenario(name), 0);
        assert!(!out.diverged(), "{name} diverged");
        let expected = (out.record.rows.last().unwrap().time * 2000.0).round() as usize + 1;
        assert_eq!(out.record.rows.len(), expected, "{name}");
    }
}

#[test]
fn row_count_follows_duration() {
    let sc = scenario("hover.cfg");
    let out = harness::run(&sc, 3);
    assert_eq!(out.record.rows.len(), 5 * 2000 + 1);
}

#[test]
fn metrics_recompute_exactly_from_csv() {
    for name in ["hover.cfg", "position_far.cfg", "yaw_damp.cfg"] {
        let out = harness::run(&scenario(name), 7);
        let mut buf = Vec::new();
        out.record.write_csv(&mut buf).unwrap();
        let rows = read_metric_rows(buf.as_slice()).unwrap();
        let recomputed = harness::compute_metrics(&rows);
        assert_eq!(
            recomputed.to_text(),
            out.record.metrics().to_text(),
            "{name}"
        );
    }
}

#[test]
fn seeds_change_noisy_runs_only() {
    let csv = |sc: &Scenario, seed| {
        let mut buf = Vec::new();
        harness::run(sc, seed).record.write_csv(&mut buf).unwrap();
        buf
    };
    let hover = scenario("hover.cfg");
    assert_ne!(csv(&hover, 1), csv(&hover, 2));
    let hold = scenario("position_hold.cfg");
    assert_eq!(csv(&hold, 1), csv(&hold, 2));
}

#[test]
fn hover_stays_within_ten_degrees() {
    let r = harness::run(&scenario("hover.cfg"), 0).record;
    let m = r.metrics();
    assert!(m.max_abs_roll_deg.max(m.max_abs_pitch_deg) < 10.5);
    let z = r.rows.last().unwrap().truth.position.z;
    assert!((z - 0.3).abs() < 0.02, "{z}");
}

#[test]
fn ballistic_matches_closed_form() {
    let out = harness::run(&scenario("ballistic.cfg"), 0);
    for row in &out.record.rows {
        let z = 1.0 - 0.5 * 9.81 * row.time * row.time;
        assert!((row.truth.position.z - z).abs() < 1e-9);
    }
}

#[test]
fn yaw_decay_ratio_is_inverse_sqrt_two() {
    let out = harness::run(&scenario("yaw_damp.cfg"), 0);
    assert_relative_eq!(
        out.yaw_decay_ratio().unwrap(),
        FRAC_1_SQRT_2,
        max_relative = 0.02
    );
}

#[test]
fn wing_loading_drops_by_a_third() {
    let c = compare_variants(&scenario("hover.cfg"), &scenario("robobee.cfg"));
    assert_relative_eq!(c.ratio(Metric::WingLoading), 0.659, epsilon = 1e-3);
    assert_relative_eq!(c.a.lift_to_weight, 1.4e-3 / 9.3195e-4, max_relative = 1e-12);
}

#[test]
fn identical_configs_compare_equal() {
    let sc = scenario("position_hold.cfg");
    let c = compare_variants(&sc, &sc);
    for m in [
        Metric::YawDamping,
        Metric::WingLoading,
        Metric::LiftToWeight,
    ] {
        assert_eq!(c.ratio(m), 1.0);
    }
}

#[test]
fn far_setpoint_saturates() {
    let out = harness::run(&scenario("position_far.cfg"), 0);
    assert!(out.record.metrics().saturated_ticks > 0);
}

#[test]
fn divergence_is_reported() {
    let mut f = ConfigFile::parse(bundled("ballistic.cfg").unwrap()).unwrap();
    f.scenario.duration_s = 2.0;
    let out = harness::run(&Scenario::from_file(&f).unwrap(), 0);
    assert!(out.diverged());
    assert!(out.summary().contains("status = diverged"));
}

#[test]
fn invalid_values_are_all_listed() {
    let f = ConfigFile::parse(bundled("yaw_damp.cfg").unwrap())
        .unwrap()
        .with_param("wing.flap_amplitude_deg", "100")
        .unwrap()
        .with_param("wing.k_s_n_per_v", "0")
        .unwrap();
    match Scenario::from_file(&f) {
        Err(ConfigError::Invalid(v)) => {
            let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            assert!(text.iter().any(|t| t.contains("quadrant")), "{text:?}");
            assert!(text.iter().any(|t| t.contains("singular")), "{text:?}");
        }
        other => panic!("expected violations, got {other:?}"),
    }
}
