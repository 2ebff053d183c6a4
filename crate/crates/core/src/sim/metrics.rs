use super::{SimTrace, Trajectory};
use crate::Scalar;

/// Tracking figures of a closed-loop trace, heights in cm.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingMetrics<T> {
    /// First time `|y - r| <= band_fraction * |r|`.
    pub band_entry_time: Option<T>,
    /// Largest `|y - r|` after the output first comes within `deviation_band` of the reference.
    pub post_settling_deviation: Option<T>,
    /// Largest `|y - r|` over the steady part of each setpoint segment.
    pub segment_deviation: Vec<T>,
}

/// First time the true height lies within `fraction * |r|` of the reference.
pub fn band_entry_time<T: Scalar>(trace: &SimTrace<T>, fraction: T) -> Option<T> {
    (0..trace.len())
        .find(|&i| (trace.y_true[i] - trace.r[i]).abs() <= fraction * trace.r[i].abs())
        .map(|i| trace.t[i])
}

/// Largest deviation after the true height first comes within `band` of the reference.
pub fn post_settling_deviation<T: Scalar>(trace: &SimTrace<T>, band: T) -> Option<T> {
    let start = (0..trace.len()).find(|&i| (trace.y_true[i] - trace.r[i]).abs() <= band)?;
    Some(
        (start..trace.len())
            .map(|i| (trace.y_true[i] - trace.r[i]).abs())
            .fold(T::zero(), |a, b| a.max(b)),
    )
}

/// Per segment of `traj`, the largest deviation over its final `steady_fraction` of duration.
/// The last segment ends with the trace.
pub fn segment_steady_deviation<T: Scalar>(
    trace: &SimTrace<T>,
    traj: &Trajectory<T>,
    steady_fraction: T,
) -> Vec<T> {
    let Some(&t_end) = trace.t.last() else {
        return Vec::new();
    };
    let segs = traj.segments();
    segs.iter()
        .enumerate()
        .filter(|(_, s)| s.0 <= t_end)
        .map(|(k, &(start, _))| {
            let end = segs.get(k + 1).map_or(t_end, |s| s.0.min(t_end));
            let from = end - steady_fraction * (end - start);
            (0..trace.len())
                .filter(|&i| {
                    trace.t[i] >= from
                        && trace.t[i] <= end
                        && (k + 1 == segs.len() || trace.t[i] < end)
                })
                .map(|i| (trace.y_true[i] - trace.r[i]).abs())
                .fold(T::zero(), |a, b| a.max(b))
        })
        .collect()
}

impl<T: Scalar> TrackingMetrics<T> {
    pub fn compute(
        trace: &SimTrace<T>,
        traj: &Trajectory<T>,
        band_fraction: T,
        deviation_band: T,
    ) -> Self {
        Self {
            band_entry_time: band_entry_time(trace, band_fraction),
            post_settling_deviation: post_settling_deviation(trace, deviation_band),
            segment_deviation: segment_steady_deviation(trace, traj, T::lit(0.5)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(y: &[f64], r: f64) -> SimTrace<f64> {
        let n = y.len();
        SimTrace {
            t: (0..n).map(|i| i as f64).collect(),
            r: vec![r; n],
            e: y.iter().map(|v| r - v).collect(),
            u: vec![0.0; n],
            y_true: y.to_vec(),
            y_meas: y.to_vec(),
        }
    }

    #[test]
    fn entry_and_post_settling() {
        let tr = trace(&[0.0, 5.0, 9.0, 9.9, 10.3, 9.85, 10.0], 10.0);
        assert_eq!(band_entry_time(&tr, 0.02), Some(3.0));
        let d = post_settling_deviation(&tr, 0.2).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
        assert_eq!(
            post_settling_deviation(&trace(&[0.0, 1.0], 10.0), 0.2),
            None
        );
    }

    #[test]
    fn steady_part_of_each_segment() {
        let mut tr = trace(&[0.0; 8], 0.0);
        tr.r = vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0];
        tr.y_true = vec![0.0, 0.5, 0.9, 1.1, 1.0, 1.5, 1.95, 2.0];
        let traj = Trajectory::new(vec![(0.0, 1.0), (4.0, 2.0)]).unwrap();
        let d = segment_steady_deviation(&tr, &traj, 0.5);
        assert!(
            (d[0] - 0.1).abs() < 1e-12 && (d[1] - 0.05).abs() < 1e-12,
            "{d:?}"
        );
    }
}
