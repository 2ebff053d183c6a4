use std::io::Read;

use super::SimError;
use crate::Scalar;

/// Piecewise-constant setpoint in cm.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    segments: Vec<(T, T)>,
}

impl<T: Scalar> Trajectory<T> {
    /// `(start_time, setpoint)` pairs; start times strictly increasing, the first at 0.
    pub fn new(segments: Vec<(T, T)>) -> Result<Self, SimError> {
        let bad = |m: String| Err(SimError::InvalidTrajectory(m));
        match segments.first() {
            None => return bad("no segments".into()),
            Some((t0, _)) if *t0 != T::zero() => {
                return bad(format!("first segment starts at {t0}, not 0"))
            }
            _ => {}
        }
        if segments
            .iter()
            .any(|(t, r)| !t.is_finite() || !r.is_finite())
        {
            return bad("non-finite time or setpoint".into());
        }
        if let Some(w) = segments.windows(2).find(|w| !(w[1].0 > w[0].0)) {
            return bad(format!(
                "start times must increase ({} then {})",
                w[0].0, w[1].0
            ));
        }
        Ok(Self { segments })
    }

    pub fn constant(setpoint_cm: T) -> Self {
        Self {
            segments: vec![(T::zero(), setpoint_cm)],
        }
    }

    pub fn segments(&self) -> &[(T, T)] {
        &self.segments
    }

    pub fn setpoint_at(&self, t: T) -> T {
        let i = self.segments.partition_point(|(s, _)| *s <= t);
        self.segments[i.saturating_sub(1)].1
    }

    /// `t,setpoint` rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SimError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let schema = |line: usize, m: String| SimError::TrajectoryFile { line, message: m };
        let header = rdr.headers().map_err(|e| schema(1, e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["t", "setpoint"] {
            return Err(schema(
                1,
                format!(
                    "expected header t,setpoint, found {}",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut segs = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| schema(line, e.to_string()))?;
            let num = |k: usize| {
                rec.get(k)
                    .and_then(|f| f.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| schema(line, format!("field {} is not a finite number", k + 1)))
            };
            segs.push((T::lit(num(0)?), T::lit(num(1)?)));
        }
        Self::new(segs).map_err(|e| schema(0, e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,setpoint\n");
        for (t, r) in &self.segments {
            s.push_str(&format!("{t},{r}\n"));
        }
        s
    }
}
