//! Kinematic locomotion estimates and comparison with measured velocities.
//!
//! Rolling advances the body by one circumference of its skin per cycle.
//! Serpentine gives no net progress on isotropic-friction ground, and below
//! the actuator deadzone nothing bends at all.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RobotConfig;
use crate::error::{Error, Result};
use crate::gait::GaitKind;

pub const TEST_PRESSURES_BAR: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
pub const TEST_FREQUENCIES_HZ: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Measured traveling velocities of the prototype, 48 rows.
pub const MEASURED_VELOCITIES_CSV: &str = include_str!("../data/measured_velocities.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityRecord {
    pub gait: GaitKind,
    pub pressure_bar: f64,
    pub frequency_hz: f64,
    pub vx_cm_s: f64,
    pub vy_cm_s: f64,
}

impl VelocityRecord {
    pub fn speed_cm_s(&self) -> f64 {
        self.vx_cm_s.hypot(self.vy_cm_s)
    }

    fn key(&self) -> (GaitKind, u32, u32) {
        (
            self.gait,
            (self.pressure_bar * 100.0).round() as u32,
            (self.frequency_hz * 100.0).round() as u32,
        )
    }
}

/// Direction of predicted travel relative to the opening of the bent body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heading {
    Stationary,
    TowardOpening,
    AwayFromOpening,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub speed_cm_s: f64,
    pub heading: Heading,
}

pub fn predict_velocity(
    gait: GaitKind,
    cfg: &RobotConfig,
    pressure_amplitude_bar: f64,
    frequency_hz: f64,
) -> Prediction {
    let still = Prediction {
        speed_cm_s: 0.0,
        heading: Heading::Stationary,
    };
    if pressure_amplitude_bar <= cfg.deadzone {
        return still;
    }
    let heading = match gait {
        GaitKind::Serpentine => return still,
        GaitKind::RollInward => Heading::TowardOpening,
        GaitKind::RollOutward => Heading::AwayFromOpening,
    };
    Prediction {
        speed_cm_s: TAU * cfg.body_radius * frequency_hz * 100.0,
        heading,
    }
}

pub fn parse_table(text: &str) -> Result<Vec<VelocityRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        let rec: VelocityRecord = row.map_err(|e| Error::Parse {
            path: "<table>".into(),
            line: i + 2,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_table(path: impl AsRef<Path>) -> Result<Vec<VelocityRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// The shipped measured-velocity table.
pub fn reference_table() -> Vec<VelocityRecord> {
    parse_table(MEASURED_VELOCITIES_CSV).expect("bundled table parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub gait: GaitKind,
    pub pressure_bar: f64,
    pub frequency_hz: f64,
    pub measured_cm_s: f64,
    pub predicted_cm_s: f64,
    /// Measured over predicted; absent when either is zero.
    pub ratio: Option<f64>,
    pub deadzone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTrend {
    pub gait: GaitKind,
    pub pressure_bar: f64,
    /// Measured speed never decreases as frequency rises.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub rolling_trends: Vec<FrequencyTrend>,
    /// Largest serpentine/rolling measured-speed ratio over settings where
    /// rolling moved.
    pub max_serpentine_to_rolling: f64,
    pub serpentine_below_fifth_of_rolling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub rows: Vec<EstimateRow>,
    pub summary: EstimateSummary,
}

/// Predicts every tested setting and sets it beside the measurement.
/// The table must hold exactly one record per gait, pressure and frequency.
pub fn compare_with_measured(
    cfg: &RobotConfig,
    table: &[VelocityRecord],
) -> Result<EstimateReport> {
    for r in table {
        if !TEST_PRESSURES_BAR.contains(&r.pressure_bar)
            || !TEST_FREQUENCIES_HZ.contains(&r.frequency_hz)
        {
            return Err(Error::InvalidArgument(format!(
                "record outside the test grid: {} bar, {} Hz",
                r.pressure_bar, r.frequency_hz
            )));
        }
    }
    let keys: BTreeSet<_> = table.iter().map(VelocityRecord::key).collect();
    let expected = GaitKind::ALL.len() * TEST_PRESSURES_BAR.len() * TEST_FREQUENCIES_HZ.len();
    if table.len() != expected || keys.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "table must hold {expected} distinct records; got {} rows, {} distinct",
            table.len(),
            keys.len()
        )));
    }

    let mut rows: Vec<EstimateRow> = table
        .iter()
        .map(|r| {
            let measured = r.speed_cm_s();
            let predicted =
                predict_velocity(r.gait, cfg, r.pressure_bar, r.frequency_hz).speed_cm_s;
            EstimateRow {
                gait: r.gait,
                pressure_bar: r.pressure_bar,
                frequency_hz: r.frequency_hz,
                measured_cm_s: measured,
                predicted_cm_s: predicted,
                ratio: (measured > 0.0 && predicted > 0.0).then(|| measured / predicted),
                deadzone: r.pressure_bar <= cfg.deadzone,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.gait as u8, a.pressure_bar, a.frequency_hz)
            .partial_cmp(&(b.gait as u8, b.pressure_bar, b.frequency_hz))
            .expect("finite grid values")
    });

    let find = |g: GaitKind, p: f64, f: f64| {
        rows.iter()
            .find(|r| r.gait == g && r.pressure_bar == p && r.frequency_hz == f)
            .expect("complete grid")
    };

    let mut rolling_trends = Vec::new();
    for gait in [GaitKind::RollInward, GaitKind::RollOutward] {
        for &p in TEST_PRESSURES_BAR.iter().filter(|&&p| p >= 2.0) {
            let speeds: Vec<f64> = TEST_FREQUENCIES_HZ
                .iter()
                .map(|&f| find(gait, p, f).measured_cm_s)
                .collect();
            rolling_trends.push(FrequencyTrend {
                gait,
                pressure_bar: p,
                monotone: speeds.windows(2).all(|w| w[1] >= w[0]),
            });
        }
    }

    let mut max_ratio: f64 = 0.0;
    for &p in &TEST_PRESSURES_BAR {
        for &f in &TEST_FREQUENCIES_HZ {
            let serp = find(GaitKind::Serpentine, p, f).measured_cm_s;
            for gait in [GaitKind::RollInward, GaitKind::RollOutward] {
                let roll = find(gait, p, f).measured_cm_s;
                if roll > 0.0 {
                    max_ratio = max_ratio.max(serp / roll);
                }
            }
        }
    }

    Ok(EstimateReport {
        rows,
        summary: EstimateSummary {
            rolling_trends,
            max_serpentine_to_rolling: max_ratio,
            serpentine_below_fifth_of_rolling: max_ratio < 0.2,
        },
    })
}

impl EstimateReport {
    pub fn row(
        &self,
        gait: GaitKind,
        pressure_bar: f64,
        frequency_hz: f64,
    ) -> Option<&EstimateRow> {
        self.rows.iter().find(|r| {
            r.gait == gait && r.pressure_bar == pressure_bar && r.frequency_hz == frequency_hz
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<13} {:>5} {:>5} {:>10} {:>10} {:>7}",
            "gait", "bar", "Hz", "measured", "predicted", "ratio"
        );
        for r in &self.rows {
            let ratio = r.ratio.map_or("-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(
                s,
                "{:<13} {:>5.1} {:>5.2} {:>10.2} {:>10.2} {:>7}{}",
                r.gait.as_str(),
                r.pressure_bar,
                r.frequency_hz,
                r.measured_cm_s,
                r.predicted_cm_s,
                ratio,
                if r.deadzone { "  deadzone" } else { "" }
            );
        }
        let _ = writeln!(s);
        for t in &self.summary.rolling_trends {
            let _ = writeln!(
                s,
                "{} at {:.0} bar: speed {} with frequency",
                t.gait,
                t.pressure_bar,
                if t.monotone {
                    "rises"
                } else {
                    "does not rise monotonically"
                }
            );
        }
        let _ = writeln!(
            s,
            "serpentine/rolling speed ratio at most {:.3} ({})",
            self.summary.max_serpentine_to_rolling,
            if self.summary.serpentine_below_fifth_of_rolling {
                "below 1/5"
            } else {
                "not below 1/5"
            }
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rolling_advances_one_circumference_per_cycle() {
        let cfg = RobotConfig::default();
        let p = predict_velocity(GaitKind::RollInward, &cfg, 4.0, 1.0);
        assert!((p.speed_cm_s - 7.853_981_633_974_483).abs() < 1e-12);
        assert_eq!(p.heading, Heading::TowardOpening);
        let p = predict_velocity(GaitKind::RollOutward, &cfg, 2.0, 0.5);
        assert_eq!(p.heading, Heading::AwayFromOpening);
    }

    #[test]
    fn deadzone_and_serpentine_predict_zero() {
        let cfg = RobotConfig::default();
        for g in GaitKind::ALL {
            assert_eq!(predict_velocity(g, &cfg, 1.0, 1.0).speed_cm_s, 0.0);
        }
        assert_eq!(
            predict_velocity(GaitKind::Serpentine, &cfg, 4.0, 0.25).speed_cm_s,
            0.0
        );
        assert_eq!(
            predict_velocity(GaitKind::Serpentine, &cfg, 4.0, 0.25).heading,
            Heading::Stationary
        );
    }

    #[test]
    fn rolling_speed_linear_in_frequency() {
        let cfg = RobotConfig::default();
        for f in [0.1, 0.37, 2.0] {
            let a = predict_velocity(GaitKind::RollOutward, &cfg, 3.0, f).speed_cm_s;
            let b = predict_velocity(GaitKind::RollOutward, &cfg, 3.0, 2.0 * f).speed_cm_s;
            assert_eq!(b, 2.0 * a);
        }
    }

    #[test]
    fn reference_table_report() {
        let cfg = RobotConfig::default();
        let table = reference_table();
        assert_eq!(table.len(), 48);
        let report = compare_with_measured(&cfg, &table).unwrap();
        let r = report.row(GaitKind::RollInward, 4.0, 1.0).unwrap();
        assert!((r.measured_cm_s - 11.56).abs() < 0.005);
        assert!((r.ratio.unwrap() - 1.472).abs() < 0.001);
        for r in report.rows.iter().filter(|r| r.pressure_bar == 1.0) {
            assert_eq!(
                (r.measured_cm_s, r.predicted_cm_s, r.ratio),
                (0.0, 0.0, None)
            );
            assert!(r.deadzone);
        }
        let s = report.row(GaitKind::Serpentine, 4.0, 0.25).unwrap();
        assert!((s.measured_cm_s - 0.84).abs() < 0.005);
        assert!(s.ratio.is_none());
        assert!(report.summary.serpentine_below_fifth_of_rolling);
        let inward_monotone = report
            .summary
            .rolling_trends
            .iter()
            .filter(|t| t.gait == GaitKind::RollInward)
            .all(|t| t.monotone);
        assert!(inward_monotone);
        assert!(report.to_text().contains("roll_inward"));
    }

    #[test]
    fn incomplete_or_duplicate_tables_rejected() {
        let cfg = RobotConfig::default();
        let mut table = reference_table();
        table.pop();
        assert!(compare_with_measured(&cfg, &table).is_err());
        let dup = table[0];
        table.push(dup);
        assert!(compare_with_measured(&cfg, &table).is_err());
        let mut off_grid = reference_table();
        off_grid[3].frequency_hz = 0.3;
        assert!(compare_with_measured(&cfg, &off_grid).is_err());
    }

    #[test]
    fn malformed_table_names_line() {
        let text = "gait,pressure_bar,frequency_hz,vx_cm_s,vy_cm_s\nserpentine,1.0,0.25,0,0\nserpentine,x,0.5,0,0\n";
        match parse_table(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
