use super::SysidError;
use crate::kv::{render, KvDoc};
use crate::lti::{lsim, TransferFunction};
use crate::Scalar;

/// Second-order-plus-dead-time process model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel<T> {
    pub kp: T,
    /// Zero time constant, seconds; negative for a right-half-plane zero.
    pub tz: T,
    pub tp1: T,
    pub tp2: T,
    /// Dead time, seconds.
    pub td: T,
}

const MODEL_KEYS: [&str; 7] = ["kp", "tz", "tp1", "tp2", "td", "noise_c0", "noise_d0"];

impl<T: Scalar> ProcessModel<T> {
    pub fn new(kp: T, tz: T, tp1: T, tp2: T, td: T) -> Result<Self, SysidError> {
        let m = Self {
            kp,
            tz,
            tp1,
            tp2,
            td,
        };
        m.validate()?;
        Ok(m)
    }

    /// The identified head-lift plant: `Kp = 1.0015`, `Tz = -0.58354`, `Tp1 = 100`,
    /// `Tp2 = 9.7257`, `Td = 2` (mm per mA, seconds).
    pub fn reference() -> Self {
        Self {
            kp: T::lit(1.0015),
            tz: T::lit(-0.58354),
            tp1: T::lit(100.0),
            tp2: T::lit(9.7257),
            td: T::lit(2.0),
        }
    }

    pub fn validate(&self) -> Result<(), SysidError> {
        let all = [self.kp, self.tz, self.tp1, self.tp2, self.td];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(SysidError::InvalidModel("non-finite parameter".into()));
        }
        if !(self.tp1 > T::zero() && self.tp2 > T::zero()) {
            return Err(SysidError::InvalidModel(format!(
                "pole time constants must be > 0 (tp1 = {}, tp2 = {})",
                self.tp1, self.tp2
            )));
        }
        if self.td < T::zero() {
            return Err(SysidError::InvalidModel(format!(
                "dead time must be >= 0, got {}",
                self.td
            )));
        }
        Ok(())
    }

    /// `Kp (1 + s Tz) / ((1 + s Tp1)(1 + s Tp2))` with delay `Td`.
    pub fn to_tf(&self) -> Result<TransferFunction<T>, SysidError> {
        Ok(TransferFunction::new(
            vec![self.kp * self.tz, self.kp],
            vec![self.tp1 * self.tp2, self.tp1 + self.tp2, T::one()],
            self.td,
        )?)
    }

    /// Zero-state output for a held input sampled at `dt`; the delay is rounded to samples.
    pub fn simulate(&self, u: &[T], dt: T) -> Result<Vec<T>, SysidError> {
        Ok(lsim(&self.to_tf()?, u, dt)?)
    }

    pub fn to_f64(&self) -> ProcessModel<f64> {
        ProcessModel {
            kp: self.kp.as_f64(),
            tz: self.tz.as_f64(),
            tp1: self.tp1.as_f64(),
            tp2: self.tp2.as_f64(),
            td: self.td.as_f64(),
        }
    }

    /// Model file text; noise terms are appended when given.
    pub fn to_file_string(&self, noise: Option<&NoiseModel<T>>) -> String {
        let mut pairs = vec![
            ("kp", self.kp.as_f64()),
            ("tz", self.tz.as_f64()),
            ("tp1", self.tp1.as_f64()),
            ("tp2", self.tp2.as_f64()),
            ("td", self.td.as_f64()),
        ];
        if let Some(n) = noise {
            pairs.push(("noise_c0", n.c0.as_f64()));
            pairs.push(("noise_d0", n.d0.as_f64()));
        }
        render(&pairs)
    }

    pub fn from_file_str(text: &str) -> Result<(Self, Option<NoiseModel<T>>), SysidError> {
        let doc = KvDoc::parse(text)?;
        doc.reject_unknown(&MODEL_KEYS)?;
        let get = |k: &str| doc.require_f64(k).map(T::lit);
        let m = Self {
            kp: get("kp")?,
            tz: get("tz")?,
            tp1: get("tp1")?,
            tp2: get("tp2")?,
            td: get("td")?,
        };
        m.validate()
            .map_err(|e| doc.error_at("tp1", e.to_string()))?;
        let noise = match (doc.get_f64("noise_c0")?, doc.get_f64("noise_d0")?) {
            (None, None) => None,
            (Some(c0), Some(d0)) => {
                let n = NoiseModel::new(T::lit(c0), T::lit(d0))
                    .map_err(|e| doc.error_at("noise_d0", e.to_string()))?;
                Some(n)
            }
            _ => {
                return Err(doc
                    .error_at("noise_c0", "noise_c0 and noise_d0 must appear together")
                    .into())
            }
        };
        Ok((m, noise))
    }
}

/// Continuous first-order noise shaping `C(s)/D(s) = (s + c0)/(s + d0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    pub c0: T,
    pub d0: T,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn new(c0: T, d0: T) -> Result<Self, SysidError> {
        if !c0.is_finite() || !d0.is_finite() || !(d0 > T::zero()) {
            return Err(SysidError::InvalidModel(format!(
                "noise model needs finite c0 and d0 > 0 (c0 = {c0}, d0 = {d0})"
            )));
        }
        Ok(Self { c0, d0 })
    }

    /// No shaping: `c0 = d0 = 1`.
    pub fn identity() -> Self {
        Self {
            c0: T::one(),
            d0: T::one(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.c0 == self.d0
    }

    pub fn to_tf(&self) -> TransferFunction<T> {
        TransferFunction::rational(vec![T::one(), self.c0], vec![T::one(), self.d0])
            .expect("monic denominator")
    }

    /// Tustin image `(1 + c q^-1)/(1 + d q^-1)` at sample interval `dt`.
    pub fn discretize(&self, dt: T) -> (T, T) {
        let k = T::lit(2.0) / dt;
        ((self.c0 - k) / (self.c0 + k), (self.d0 - k) / (self.d0 + k))
    }

    /// Inverse of [`NoiseModel::discretize`].
    pub fn from_discrete(c: T, d: T, dt: T) -> Result<Self, SysidError> {
        let k = T::lit(2.0) / dt;
        if !(c.abs() < T::one() && d.abs() < T::one()) {
            return Err(SysidError::InvalidModel(format!(
                "discrete noise model outside the unit circle (c = {c}, d = {d})"
            )));
        }
        Self::new(
            k * (T::one() + c) / (T::one() - c),
            k * (T::one() + d) / (T::one() - d),
        )
    }
}

/// Process transfer function and, when a noise model is given, `H(s) = C(s)/D(s)`.
pub fn model_to_tf<T: Scalar>(
    model: &ProcessModel<T>,
    noise: Option<&NoiseModel<T>>,
) -> Result<(TransferFunction<T>, Option<TransferFunction<T>>), SysidError> {
    Ok((model.to_tf()?, noise.map(|n| n.to_tf())))
}
