//! Per-tick run records, CSV export and summary metrics.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::aero::Wrench;
use crate::dynamics::VehicleState;
use crate::spatial::{Quaternion, Vec3};

/// First line of every CSV file written by [`RunRecord::write_csv`].
pub const CSV_SCHEMA: &str = "# flapsim run record, schema 1";

/// Trailing window for the steady-state position metric, s.
pub const FINAL_WINDOW: f64 = 2.0;

/// Band, as a fraction of the altitude step, for the reach and settle times.
pub const ALTITUDE_BAND: f64 = 0.2;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed record: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub time: f64,
    pub truth: VehicleState,
    pub estimate: VehicleState,
    pub setpoint: Vec3,
    /// Wrench requested from the allocator (or applied, in open loop).
    pub wrench: Wrench,
    pub command: [f64; 4],
    pub saturated: [bool; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { time: f64, reason: String },
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub name: String,
    pub rows: Vec<Row>,
    pub status: RunStatus,
}

/// Values the metrics are computed from; exactly the CSV columns they use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub time: f64,
    pub position: Vec3,
    pub setpoint: Vec3,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_rate: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rows: usize,
    pub duration_s: f64,
    pub rms_position_error_m: f64,
    pub final_rms_position_error_m: f64,
    pub max_abs_roll_deg: f64,
    pub max_abs_pitch_deg: f64,
    pub altitude_reach_time_s: f64,
    pub altitude_settle_time_s: f64,
    pub yaw_decay_time_constant_s: f64,
    pub saturated_ticks: usize,
}

fn euler_deg(q: &Quaternion) -> [f64; 3] {
    let (r, p, y) = q.to_euler_zyx();
    [r.to_degrees(), p.to_degrees(), y.to_degrees()]
}

impl Row {
    pub fn metric_row(&self) -> MetricRow {
        let [roll_deg, pitch_deg, _] = euler_deg(&self.truth.attitude);
        MetricRow {
            time: self.time,
            position: self.truth.position,
            setpoint: self.setpoint,
            roll_deg,
            pitch_deg,
            yaw_rate: self.truth.angular_velocity.z,
            saturated: self.saturated.iter().any(|&s| s),
        }
    }
}

fn state_header(prefix: &str) -> Vec<String> {
    [
        "r_x_m",
        "r_y_m",
        "r_z_m",
        "v_x_m_s",
        "v_y_m_s",
        "v_z_m_s",
        "q_w",
        "q_x",
        "q_y",
        "q_z",
        "w_x_rad_s",
        "w_y_rad_s",
        "w_z_rad_s",
        "roll_deg",
        "pitch_deg",
        "yaw_deg",
    ]
    .iter()
    .map(|c| format!("{prefix}{c}"))
    .collect()
}

pub fn csv_header() -> Vec<String> {
    let mut h = vec!["t_s".to_string()];
    h.extend(state_header(""));
    h.extend(state_header("est_"));
    for c in [
        "sp_x_m",
        "sp_y_m",
        "sp_z_m",
        "f_n",
        "tau_x_n_m",
        "tau_y_n_m",
        "tau_z_n_m",
        "v1_v",
        "v2_v",
        "v3_v",
        "v4_v",
        "sat1",
        "sat2",
        "sat3",
        "sat4",
    ] {
        h.push(c.to_string());
    }
    h
}

fn push_state(out: &mut Vec<String>, s: &VehicleState) {
    let vals = s
        .position
        .to_array()
        .into_iter()
        .chain(s.velocity.to_array())
        .chain(s.attitude.to_array())
        .chain(s.angular_velocity.to_array())
        .chain(euler_deg(&s.attitude));
    out.extend(vals.map(|v| v.to_string()));
}

impl RunRecord {
    pub fn metrics(&self) -> Metrics {
        let rows: Vec<MetricRow> = self.rows.iter().map(Row::metric_row).collect();
        compute_metrics(&rows)
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), RecordError> {
        writeln!(w, "{CSV_SCHEMA}")?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(csv_header())?;
        let mut rec = Vec::with_capacity(64);
        for r in &self.rows {
            rec.clear();
            rec.push(r.time.to_string());
            push_state(&mut rec, &r.truth);
            push_state(&mut rec, &r.estimate);
            rec.extend(r.setpoint.to_array().map(|v| v.to_string()));
            rec.extend(r.wrench.to_array().map(|v| v.to_string()));
            rec.extend(r.command.map(|v| v.to_string()));
            rec.extend(r.saturated.map(|s| if s { "1" } else { "0" }.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Reads the metric columns back from a CSV written by
/// [`RunRecord::write_csv`].
pub fn read_metric_rows<R: Read>(r: R) -> Result<Vec<MetricRow>, RecordError> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != csv_header() {
        return Err(RecordError::Malformed("unexpected header".into()));
    }
    let col = |name: &str| header.iter().position(|h| h == name).expect("known column");
    let idx = [
        col("t_s"),
        col("r_x_m"),
        col("r_y_m"),
        col("r_z_m"),
        col("sp_x_m"),
        col("sp_y_m"),
        col("sp_z_m"),
        col("roll_deg"),
        col("pitch_deg"),
        col("w_z_rad_s"),
    ];
    let sat = [col("sat1"), col("sat2"), col("sat3"), col("sat4")];
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64, RecordError> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| RecordError::Malformed(format!("{}: {e}", &rec[i])))
        };
        out.push(MetricRow {
            time: f(idx[0])?,
            position: Vec3::new(f(idx[1])?, f(idx[2])?, f(idx[3])?),
            setpoint: Vec3::new(f(idx[4])?, f(idx[5])?, f(idx[6])?),
            roll_deg: f(idx[7])?,
            pitch_deg: f(idx[8])?,
            yaw_rate: f(idx[9])?,
            saturated: sat.iter().any(|&i| &rec[i] == "1"),
        });
    }
    Ok(out)
}

fn rms(errs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = errs.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Least-squares slope of `ln|w|` against time over the samples still
/// above 1e-3 of the initial rate.
fn yaw_time_constant(rows: &[MetricRow]) -> f64 {
    let Some(first) = rows.first() else {
        return f64::NAN;
    };
    let w0 = first.yaw_rate.abs();
    if !(w0 > 0.0) {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .take_while(|r| r.yaw_rate.abs() >= 1e-3 * w0 && r.yaw_rate * first.yaw_rate > 0.0)
        .map(|r| (r.time, r.yaw_rate.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let slope = sxy / sxx;
    if slope < 0.0 {
        -1.0 / slope
    } else {
        f64::INFINITY
    }
}

pub fn compute_metrics(rows: &[MetricRow]) -> Metrics {
    let duration_s = rows.last().map_or(0.0, |r| r.time);
    let err = |r: &MetricRow| (r.position - r.setpoint).norm();
    let window_start = duration_s - FINAL_WINDOW;

    let (reach, settle) = match rows.first() {
        Some(first) => {
            let band = |r: &MetricRow| {
                let step = (r.setpoint.z - first.position.z).abs();
                step > 0.0 && (r.position.z - r.setpoint.z).abs() <= ALTITUDE_BAND * step
            };
            let reach = rows.iter().find(|r| band(r)).map_or(f64::NAN, |r| r.time);
            let settle = match rows.iter().rposition(|r| !band(r)) {
                None => first.time,
                Some(i) if i + 1 < rows.len() => rows[i + 1].time,
                Some(_) => f64::NAN,
            };
            (reach, settle)
        }
        None => (f64::NAN, f64::NAN),
    };

    Metrics {
        rows: rows.len(),
        duration_s,
        rms_position_error_m: rms(rows.iter().map(err)),
        final_rms_position_error_m: rms(rows.iter().filter(|r| r.time >= window_start).map(err)),
        max_abs_roll_deg: rows.iter().map(|r| r.roll_deg.abs()).fold(0.0, f64::max),
        max_abs_pitch_deg: rows.iter().map(|r| r.pitch_deg.abs()).fold(0.0, f64::max),
        altitude_reach_time_s: reach,
        altitude_settle_time_s: settle,
        yaw_decay_time_constant_s: yaw_time_constant(rows),
        saturated_ticks: rows.iter().filter(|r| r.saturated).count(),
    }
}

impl Metrics {
    /// `key = value` lines; floats use the shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        line("rows", self.rows.to_string());
        line("duration_s", self.duration_s.to_string());
        line(
            "rms_position_error_m",
            self.rms_position_error_m.to_string(),
        );
        line(
            "final_rms_position_error_m",
            self.final_rms_position_error_m.to_string(),
        );
        line("max_abs_roll_deg", self.max_abs_roll_deg.to_string());
        line("max_abs_pitch_deg", self.max_abs_pitch_deg.to_string());
        line(
            "altitude_reach_time_s",
            self.altitude_reach_time_s.to_string(),
        );
        line(
            "altitude_settle_time_s",
            self.altitude_settle_time_s.to_string(),
        );
        line(
            "yaw_decay_time_constant_s",
            self.yaw_decay_time_constant_s.to_string(),
        );
        line("saturated_ticks", self.saturated_ticks.to_string());
        s
    }
}
