use std::io::Write;

use serde::{Deserialize, Serialize};

use super::cascade::{cascade_sim, Outer, Plant, Reference, Scenario};
use crate::error::{Error, Result};
use crate::lti::{StepMetrics, SETTLING_BAND};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub overshoot: f64,
    pub settling: f64,
    /// Time from disturbance onset to the last exit from the settling band;
    /// `NaN` without a disturbance.
    pub recovery: f64,
    pub effort_peak: f64,
}

/// Step metrics before the disturbance, recovery after it and the peak
/// outer-loop effort for each named controller.
pub fn run_comparison(controllers: &[(String, Outer)], plant: &Plant, scenario: &Scenario) -> Result<Vec<ComparisonRow>> {
    let (amplitude, t_step) = match scenario.reference {
        Reference::Step { amplitude, time } => (amplitude, time),
        _ => return Err(Error::InvalidConfig("comparison needs a step reference".into())),
    };
    controllers
        .iter()
        .map(|(name, outer)| {
            let ts = cascade_sim(outer, plant, scenario)?;
            let dt = ts.dt();
            let y = ts.require("angle")?;
            let i0 = (t_step / dt).round() as usize;
            let i_dist = scenario
                .disturbance
                .map(|d| ((d.start / dt).round() as usize).min(y.len()))
                .unwrap_or(y.len());
            let m = StepMetrics::compute(dt, &y[i0..i_dist.max(i0 + 1)], amplitude)?;
            let band = SETTLING_BAND * amplitude.abs().max(f64::MIN_POSITIVE);
            let recovery = match scenario.disturbance {
                Some(_) if i_dist < y.len() => {
                    let last = (i_dist..y.len()).rev().find(|&i| (y[i] - amplitude).abs() > band);
                    last.map(|i| (i + 1 - i_dist) as f64 * dt).unwrap_or(0.0)
                }
                _ => f64::NAN,
            };
            let effort_peak = ts.require("outer_u")?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            Ok(ComparisonRow {
                name: name.clone(),
                overshoot: m.overshoot,
                settling: m.settling_time,
                recovery,
                effort_peak,
            })
        })
        .collect()
}

pub fn write_metrics_csv<W: Write>(rows: &[ComparisonRow], mut w: W) -> Result<()> {
    writeln!(w, "name,overshoot,settling,recovery,effort_peak")?;
    for r in rows {
        writeln!(w, "{},{:e},{:e},{:e},{:e}", r.name, r.overshoot, r.settling, r.recovery, r.effort_peak)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Axis;
    use crate::lti::c2d_tustin;

    #[test]
    fn hinf_beats_pid_on_disturbed_step() {
        let k = c2d_tustin(&Axis::Pitch.reduced_controller().to_ss().unwrap(), 1000.0).unwrap();
        let ctrls = vec![
            ("hinf".to_string(), Outer::discrete(k).unwrap()),
            ("pid".to_string(), Outer::Pid { gains: Axis::Pitch.pid() }),
        ];
        let plant = Plant::Linear { model: Axis::Pitch.plant() };
        let rows = run_comparison(&ctrls, &plant, &Scenario::disturbed_step(1)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].settling < rows[1].settling);
        assert!(rows[0].recovery < rows[1].recovery);
        assert!(rows[0].effort_peak < 20.0);
        let mut buf = Vec::new();
        write_metrics_csv(&rows[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("name,overshoot,settling,recovery,effort_peak\nhinf,"));
        assert!(run_comparison(&ctrls[1..], &plant, &Scenario::step(1.0, 2.0)).unwrap()[0].recovery.is_nan());
    }
}
