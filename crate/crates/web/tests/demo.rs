use flapsim_web::{allocate_wrench, hover_run, yaw_decay_run};

#[test]
fn hover_series_are_aligned() {
    let r = hover_run(9.2e-5, 0.3, 0).unwrap();
    assert_eq!(r.time().len(), 1001);
    assert_eq!(r.altitude().len(), r.time().len());
    assert_eq!(r.roll().len(), r.time().len());
    assert!(!r.diverged());
    assert!(r.max_tilt() < 12.0 && r.reach_time() <= 1.0);
}

#[test]
fn quiet_hover_stays_level() {
    let r = hover_run(0.0, 0.5, 0).unwrap();
    assert!(r.max_tilt() < 0.5, "{}", r.max_tilt());
    assert!((r.altitude().last().unwrap() - 0.5).abs() < 0.02);
}

#[test]
fn hover_command_splits_evenly() {
    let a = allocate_wrench(0.95 * 9.81 * 0.1, 0.0, 0.0, 0.0).unwrap();
    let c = a.commands();
    assert!(c.iter().all(|v| (v - c[0]).abs() < 1e-9));
    assert_eq!(a.saturated(), vec![0; 4]);
    assert!((a.achieved()[0] - 0.95 * 9.81 * 0.1).abs() < 1e-9);
}

#[test]
fn large_torque_saturates() {
    let a = allocate_wrench(1.0, 20_000.0, 0.0, 0.0).unwrap();
    assert!(a.saturated().contains(&1));
    assert!(a.achieved()[1] < 20_000.0);
}

#[test]
fn four_wing_damps_yaw_faster() {
    let d = yaw_decay_run(10.0, 1.0).unwrap();
    assert_eq!(d.four_wing().len(), d.two_wing().len());
    assert!(d.four_wing().last() < d.two_wing().last());
    assert!((d.ratio() - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(hover_run(f64::NAN, 0.3, 0).is_err());
    assert!(yaw_decay_run(10.0, -1.0).is_err());
}
