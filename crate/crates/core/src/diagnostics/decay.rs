use serde::Serialize;

use super::DiagnosticsRow;

pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.5, 0.1, 0.05, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdTime {
    pub theta: f64,
    /// First row time with l1_to_mean ≤ θ · initial; `None` if never reached.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySummary {
    pub initial_l1: f64,
    pub final_l1: f64,
    pub thresholds: Vec<ThresholdTime>,
    /// Least-squares slope of log ℓ¹ against log t over the last half of the rows.
    pub tail_slope: Option<f64>,
    pub tail_points: usize,
}

impl DecaySummary {
    pub fn text(&self) -> String {
        let mut s = format!(
            "decay: l1_to_mean {:.6e} -> {:.6e}\n",
            self.initial_l1, self.final_l1
        );
        for th in &self.thresholds {
            match th.time {
                Some(t) => s += &format!("  theta = {:<5} reached at t = {t:.6e}\n", th.theta),
                None => s += &format!("  theta = {:<5} not reached\n", th.theta),
            }
        }
        match self.tail_slope {
            Some(p) => s += &format!("  tail log-log slope {p:.4} over {} rows\n", self.tail_points),
            None => s += "  tail log-log slope unavailable\n",
        }
        s
    }
}

pub fn decay_summary(rows: &[DiagnosticsRow], thresholds: &[f64]) -> DecaySummary {
    let initial = rows.first().map_or(0.0, |r| r.l1_to_mean);
    let final_l1 = rows.last().map_or(0.0, |r| r.l1_to_mean);
    let thresholds = thresholds
        .iter()
        .map(|&theta| ThresholdTime {
            theta,
            time: rows.iter().find(|r| r.l1_to_mean <= theta * initial).map(|r| r.t),
        })
        .collect();

    let tail: Vec<(f64, f64)> = rows[rows.len() / 2..]
        .iter()
        .filter(|r| r.t > 0.0 && r.l1_to_mean > 0.0)
        .map(|r| (r.t.ln(), r.l1_to_mean.ln()))
        .collect();
    let tail_slope = least_squares_slope(&tail);

    DecaySummary {
        initial_l1: initial,
        final_l1,
        thresholds,
        tail_slope,
        tail_points: tail.len(),
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, l1: f64) -> DiagnosticsRow {
        DiagnosticsRow {
            t,
            mean: 0.0,
            l1_to_mean: l1,
            l2_energy: 0.0,
            linf: 0.0,
            dissipation_resolved: 0.0,
            dissipation_budget: 0.0,
        }
    }

    #[test]
    fn constant_data_reaches_everything_at_zero() {
        let rows = vec![row(0.0, 0.0), row(1.0, 0.0)];
        let s = decay_summary(&rows, &DEFAULT_THRESHOLDS);
        assert!(s.thresholds.iter().all(|t| t.time == Some(0.0)));
        assert_eq!(s.tail_slope, None);
    }

    #[test]
    fn power_law_slope_and_threshold_order() {
        let rows: Vec<_> = (0..=100)
            .map(|k| {
                let t = k as f64 * 0.5;
                row(t, 1.0 / (1.0 + t))
            })
            .collect();
        let s = decay_summary(&rows, &DEFAULT_THRESHOLDS);
        assert_eq!(s.thresholds[0].time, Some(1.0));
        assert_eq!(s.thresholds[1].time, Some(9.0));
        assert_eq!(s.thresholds[3].time, None);
        let slope = s.tail_slope.unwrap();
        assert!((slope + 1.0).abs() < 0.05, "{slope}");
    }
}
