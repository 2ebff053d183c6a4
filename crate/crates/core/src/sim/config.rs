use super::SimError;
use crate::kv::{render, KvDoc};
use crate::sysid::NoiseModel;
use crate::Scalar;

/// Coloured measurement disturbance `H(s) e` with `H = (s + c0)/(s + d0)` and white `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance<T> {
    pub shaping: NoiseModel<T>,
    /// Standard deviation of the white driving noise, mm.
    pub std_mm: T,
}

/// Simulation settings. Heights in the trace are cm; sensor quantities are mm; the actuator
/// is a valve current in mA.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    /// Control and integration step, s.
    pub dt: T,
    pub duration: T,
    pub u_min: T,
    pub u_max: T,
    /// Valve current holding the head at rest.
    pub u_bias: T,
    pub sensor_noise_std: T,
    pub sensor_quant: T,
    pub sensor_rate: T,
    /// Moving-average length applied to sensor frames.
    pub fir_taps: usize,
    pub seed: u64,
    pub rest_height_cm: T,
    pub mount_height_mm: T,
    pub disturbance: Option<Disturbance<T>>,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(0.1),
            duration: T::lit(120.0),
            u_min: T::zero(),
            u_max: T::lit(165.0),
            u_bias: T::lit(82.5),
            sensor_noise_std: T::lit(1.5),
            sensor_quant: T::one(),
            sensor_rate: T::lit(30.0),
            fir_taps: 20,
            seed: 0,
            rest_height_cm: T::lit(24.51),
            mount_height_mm: T::lit(710.0),
            disturbance: None,
        }
    }
}

pub const SIM_CONFIG_KEYS: [&str; 15] = [
    "dt",
    "duration",
    "u_min",
    "u_max",
    "u_bias",
    "sensor_noise_std",
    "sensor_quant",
    "sensor_rate",
    "fir_taps",
    "seed",
    "rest_height",
    "mount_height",
    "disturbance_c0",
    "disturbance_d0",
    "disturbance_std",
];

impl<T: Scalar> SimConfig<T> {
    /// Noise-free sensing with an effectively unbounded actuator.
    pub fn ideal() -> Self {
        Self {
            u_min: T::lit(-1e9),
            u_max: T::lit(1e9),
            sensor_noise_std: T::zero(),
            sensor_quant: T::zero(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return bad(format!("duration must be >= dt, got {}", self.duration));
        }
        if !(self.u_min < self.u_max) {
            return bad(format!(
                "u_min ({}) must be below u_max ({})",
                self.u_min, self.u_max
            ));
        }
        if !(self.u_bias.is_finite()) {
            return bad("u_bias must be finite".into());
        }
        if !(self.sensor_noise_std >= T::zero() && self.sensor_quant >= T::zero()) {
            return bad("sensor noise and quantization must be >= 0".into());
        }
        if !(self.sensor_rate > T::zero() && self.sensor_rate.is_finite()) {
            return bad(format!("sensor_rate must be > 0, got {}", self.sensor_rate));
        }
        if self.fir_taps == 0 {
            return bad("fir_taps must be >= 1".into());
        }
        if !(self.mount_height_mm > T::zero()) {
            return bad("mount_height must be > 0".into());
        }
        let rest = self.rest_height_cm * T::lit(10.0);
        if !(rest >= T::zero() && rest <= self.mount_height_mm) {
            return bad(format!(
                "rest_height {} cm lies outside [0, mount_height]",
                self.rest_height_cm
            ));
        }
        if let Some(d) = &self.disturbance {
            if !(d.std_mm >= T::zero()) {
                return bad("disturbance_std must be >= 0".into());
            }
        }
        Ok(())
    }

    /// Number of control steps.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Reads the keys of [`SIM_CONFIG_KEYS`] present in `doc`; absent keys keep their defaults.
    pub fn from_kv(doc: &KvDoc) -> Result<Self, SimError> {
        let mut c = Self::default();
        let f = |k: &str, v: &mut T| -> Result<(), SimError> {
            if let Some(x) = doc.get_f64(k)? {
                *v = T::lit(x);
            }
            Ok(())
        };
        f("dt", &mut c.dt)?;
        f("duration", &mut c.duration)?;
        f("u_min", &mut c.u_min)?;
        f("u_max", &mut c.u_max)?;
        f("u_bias", &mut c.u_bias)?;
        f("sensor_noise_std", &mut c.sensor_noise_std)?;
        f("sensor_quant", &mut c.sensor_quant)?;
        f("sensor_rate", &mut c.sensor_rate)?;
        f("rest_height", &mut c.rest_height_cm)?;
        f("mount_height", &mut c.mount_height_mm)?;
        if let Some(n) = doc.get_u64("fir_taps")? {
            c.fir_taps = n as usize;
        }
        if let Some(s) = doc.get_u64("seed")? {
            c.seed = s;
        }
        let dist = (
            doc.get_f64("disturbance_c0")?,
            doc.get_f64("disturbance_d0")?,
            doc.get_f64("disturbance_std")?,
        );
        c.disturbance = match dist {
            (None, None, None) => None,
            (Some(c0), Some(d0), Some(std)) => {
                let shaping = NoiseModel::new(T::lit(c0), T::lit(d0))
                    .map_err(|e| doc.error_at("disturbance_d0", e.to_string()))?;
                Some(Disturbance {
                    shaping,
                    std_mm: T::lit(std),
                })
            }
            _ => {
                return Err(doc
                    .error_at(
                        "disturbance_c0",
                        "disturbance_c0, disturbance_d0 and disturbance_std go together",
                    )
                    .into())
            }
        };
        c.validate().map_err(|e| match e {
            SimError::InvalidConfig(m) => {
                let k = first_key(&m).to_string();
                SimError::File(doc.error_at(&k, m))
            }
            other => other,
        })?;
        Ok(c)
    }

    pub fn from_file_str(text: &str) -> Result<Self, SimError> {
        let doc = KvDoc::parse(text)?;
        doc.reject_unknown(&SIM_CONFIG_KEYS)?;
        Self::from_kv(&doc)
    }

    pub fn to_file_string(&self) -> String {
        let mut pairs = vec![
            ("dt", self.dt.as_f64()),
            ("duration", self.duration.as_f64()),
            ("u_min", self.u_min.as_f64()),
            ("u_max", self.u_max.as_f64()),
            ("u_bias", self.u_bias.as_f64()),
            ("sensor_noise_std", self.sensor_noise_std.as_f64()),
            ("sensor_quant", self.sensor_quant.as_f64()),
            ("sensor_rate", self.sensor_rate.as_f64()),
            ("fir_taps", self.fir_taps as f64),
            ("seed", self.seed as f64),
            ("rest_height", self.rest_height_cm.as_f64()),
            ("mount_height", self.mount_height_mm.as_f64()),
        ];
        if let Some(d) = &self.disturbance {
            pairs.push(("disturbance_c0", d.shaping.c0.as_f64()));
            pairs.push(("disturbance_d0", d.shaping.d0.as_f64()));
            pairs.push(("disturbance_std", d.std_mm.as_f64()));
        }
        render(&pairs)
    }
}

/// The config key a validation message starts with, for line lookup.
fn first_key(msg: &str) -> &str {
    let word = msg
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .next()
        .unwrap_or("");
    match word {
        "rest_height" | "mount_height" | "fir_taps" | "sensor_rate" | "duration" | "dt"
        | "u_min" | "u_bias" | "disturbance_std" => word,
        _ => "sensor_noise_std",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimConfig::<f64>::default().validate().unwrap();
        SimConfig::<f32>::ideal().validate().unwrap();
        assert_eq!(SimConfig::<f64>::default().steps(), 1200);
    }

    #[test]
    fn file_round_trip() {
        let c = SimConfig::<f64> {
            seed: 7,
            disturbance: Some(Disturbance {
                shaping: NoiseModel::new(899.3, 7.789).unwrap(),
                std_mm: 0.2,
            }),
            ..SimConfig::default()
        };
        assert_eq!(SimConfig::from_file_str(&c.to_file_string()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_line() {
        let e = SimConfig::<f64>::from_file_str("seed=1\ndt=-0.1\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = SimConfig::<f64>::from_file_str("dt=0.1\nu_min=5\nu_max=1\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = SimConfig::<f64>::from_file_str("frobnicate=1\n").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }
}
