//! Grid search over the hover vibration amplitude and attitude gains.
//!
//! Prints the roll/pitch envelope and altitude reach time for each point so
//! the amplitude in `scenarios/hover.cfg` can be chosen to give roughly
//! +/-10 degrees of attitude oscillation.
//!
//! cargo run --release -p flapsim --example tune_hover

use flapsim::harness::{bundled, ConfigFile, Scenario};

fn main() {
    let base = ConfigFile::parse(bundled("hover.cfg").unwrap()).unwrap();
    let amps: Vec<f64> = std::env::args()
        .nth(1)
        .map(|s| s.split(',').map(|v| v.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![0.0, 4e-5, 6e-5, 8e-5, 9e-5, 1e-4]);
    let k2_scales: Vec<f64> = std::env::args()
        .nth(2)
        .map(|s| s.split(',').map(|v| v.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![1.0]);
    println!("amp_n_m k2_scale truth max_roll max_pitch reach_s sat_ticks");
    for &a in &amps {
        for &s in &k2_scales {
            for truth in [true, false] {
                let mut f = base.clone();
                f.disturbance.vibration_amplitude_n_m = [a, a];
                for k in &mut f.control.attitude_k2_n_m_s {
                    *k *= s;
                }
                f.control.use_true_state = truth;
                let sc = Scenario::from_file(&f).unwrap();
                let m = flapsim::harness::run(&sc, 0).record.metrics();
                println!(
                    "{a:e} {s} {truth} {:.2} {:.2} {:.3} {}",
                    m.max_abs_roll_deg,
                    m.max_abs_pitch_deg,
                    m.altitude_reach_time_s,
                    m.saturated_ticks
                );
            }
        }
    }
}
