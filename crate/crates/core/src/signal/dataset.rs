use std::io::{Read, Write};

use super::{SignalError, SignalRecord};
use crate::Scalar;

fn schema(line: usize, message: impl Into<String>) -> SignalError {
    SignalError::Schema {
        line,
        message: message.into(),
    }
}

/// Reads a `t,u,y` dataset with a uniform time column.
pub fn read_dataset_csv<T: Scalar, R: Read>(
    reader: R,
) -> Result<(SignalRecord<T>, SignalRecord<T>), SignalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["t", "u", "y"] {
        return Err(schema(
            1,
            format!("expected header t,u,y, found {}", names.join(",")),
        ));
    }
    let (mut t, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| schema(line, e.to_string()))?;
        if rec.len() != 3 {
            return Err(schema(
                line,
                format!("expected 3 fields, found {}", rec.len()),
            ));
        }
        let mut vals = [0.0f64; 3];
        for (k, field) in rec.iter().enumerate() {
            vals[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    schema(
                        line,
                        format!("field {} is not a finite number: {field:?}", k + 1),
                    )
                })?;
        }
        t.push(vals[0]);
        u.push(T::lit(vals[1]));
        y.push(T::lit(vals[2]));
    }
    if t.len() < 2 {
        return Err(schema(
            t.len() + 1,
            format!("dataset needs at least 2 rows, found {}", t.len()),
        ));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(schema(2, "time column must be increasing"));
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt + 1e-9 {
            return Err(schema(
                i + 3,
                format!("non-uniform time step {} (expected {dt})", w[1] - w[0]),
            ));
        }
    }
    let dt = T::lit(dt);
    Ok((SignalRecord::new(u, dt)?, SignalRecord::new(y, dt)?))
}

/// Writes `t,u,y` rows, `t = k*dt`.
pub fn write_dataset_csv<T: Scalar, W: Write>(
    writer: W,
    u: &SignalRecord<T>,
    y: &SignalRecord<T>,
) -> Result<(), SignalError> {
    if u.len() != y.len() {
        return Err(SignalError::LengthMismatch(u.len(), y.len()));
    }
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| SignalError::Io(e.into());
    w.write_record(["t", "u", "y"]).map_err(to_io)?;
    for k in 0..u.len() {
        let t = T::from_usize_lossy(k) * u.dt();
        w.write_record(&[
            t.to_string(),
            u.samples()[k].to_string(),
            y.samples()[k].to_string(),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let u = SignalRecord::new(vec![1.5, -2.25, 3.0], 0.1).unwrap();
        let y = SignalRecord::new(vec![0.1, 0.2, 0.30000000000000004], 0.1).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &u, &y).unwrap();
        assert!(buf.starts_with(b"t,u,y\n"));
        let (u2, y2) = read_dataset_csv::<f64, _>(&buf[..]).unwrap();
        assert_eq!(u2.samples(), u.samples());
        assert_eq!(y2.samples(), y.samples());
        assert!((u2.dt() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let err = read_dataset_csv::<f64, _>(&b""[..]).unwrap_err();
        assert!(matches!(err, SignalError::Schema { line: 1, .. }), "{err}");
        let err = read_dataset_csv::<f64, _>(&b"t,u,y\n0,1,2\n0.1,x,2\n"[..]).unwrap_err();
        assert!(matches!(err, SignalError::Schema { line: 3, .. }), "{err}");
        let err = read_dataset_csv::<f64, _>(&b"a,b\n0,1\n"[..]).unwrap_err();
        assert!(matches!(err, SignalError::Schema { line: 1, .. }));
        let err = read_dataset_csv::<f64, _>(&b"t,u,y\n0,1,2\n0.1,1,2\n0.5,1,1\n"[..]).unwrap_err();
        assert!(matches!(err, SignalError::Schema { .. }));
    }
}
