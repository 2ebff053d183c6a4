//! PI and PID controllers and the feedforward/cascade loop built around the identified plant.
//!
//! The cascade is `reference -> PID -> [PI * plant under unity feedback] -> output`, with the
//! outer PID driven by the tracking error so the whole network is itself closed by unity
//! feedback.

use thiserror::Error;

use crate::kv::{render, KvDoc, KvError};
use crate::lti::{feedback_unity, series, LoopExpr, LtiError, StabilityReport, TransferFunction};
use crate::Scalar;

/// Default derivative filter ratio `n` in `kd s / (1 + s kd / (n kp))`.
pub const DEFAULT_DERIVATIVE_FILTER_N: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("invalid controller parameter: {0}")]
    InvalidParams(String),
    #[error("ideal PID with kd = {kd} is improper; request the realized form for simulation")]
    IdealNotRealizable { kd: f64 },
    #[error("exact-delay cascade has no rational closed form; use the Pade mode or the time-domain simulator")]
    ExactDelay,
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error("controller file {0}")]
    File(#[from] KvError),
}

/// `kp + ki / s`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiParams<T> {
    pub kp: T,
    pub ki: T,
}

impl<T: Scalar> PiParams<T> {
    pub fn new(kp: T, ki: T) -> Result<Self, ControlError> {
        let p = Self { kp, ki };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !self.kp.is_finite() || !self.ki.is_finite() || self.ki < T::zero() {
            return Err(ControlError::InvalidParams(format!(
                "PI gains must be finite with ki >= 0 (kp = {}, ki = {})",
                self.kp, self.ki
            )));
        }
        Ok(())
    }
}

/// `kp + ki / s + kd s`, realized with a first-order derivative filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidParams<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
    pub derivative_filter_n: T,
}

impl<T: Scalar> PidParams<T> {
    /// Gains with the default derivative filter.
    pub fn new(kp: T, ki: T, kd: T) -> Result<Self, ControlError> {
        Self::with_filter(kp, ki, kd, T::lit(DEFAULT_DERIVATIVE_FILTER_N))
    }

    pub fn with_filter(kp: T, ki: T, kd: T, n: T) -> Result<Self, ControlError> {
        let p = Self {
            kp,
            ki,
            kd,
            derivative_filter_n: n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let all = [self.kp, self.ki, self.kd, self.derivative_filter_n];
        if all.iter().any(|v| !v.is_finite()) || self.ki < T::zero() {
            return Err(ControlError::InvalidParams(format!(
                "PID gains must be finite with ki >= 0 (kp = {}, ki = {}, kd = {})",
                self.kp, self.ki, self.kd
            )));
        }
        if !(self.derivative_filter_n > T::zero()) {
            return Err(ControlError::InvalidParams(format!(
                "derivative_filter_n must be > 0, got {}",
                self.derivative_filter_n
            )));
        }
        Ok(())
    }

    /// Derivative filter time constant `kd / (n |kp|)`; zero without a derivative term.
    pub fn filter_time_constant(&self) -> Result<T, ControlError> {
        if self.kd == T::zero() {
            return Ok(T::zero());
        }
        if self.kp == T::zero() {
            return Err(ControlError::InvalidParams(
                "derivative filter kd/(n kp) is undefined for kp = 0".into(),
            ));
        }
        Ok(self.kd / (self.derivative_filter_n * self.kp.abs()))
    }

    pub fn pi_part(&self) -> PiParams<T> {
        PiParams {
            kp: self.kp,
            ki: self.ki,
        }
    }
}

/// How the plant's transport delay enters the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayMode {
    /// Kept as `exp(-s Td)`: frequency analysis and time simulation only.
    Exact,
    /// Second-order Padé approximant for rational closure.
    #[default]
    Pade2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopTopology<T> {
    pub feedforward: PidParams<T>,
    pub inner_controller: PiParams<T>,
    pub plant: TransferFunction<T>,
    pub delay_mode: DelayMode,
}

impl<T: Scalar> LoopTopology<T> {
    pub fn new(
        feedforward: PidParams<T>,
        inner_controller: PiParams<T>,
        plant: TransferFunction<T>,
        delay_mode: DelayMode,
    ) -> Result<Self, ControlError> {
        feedforward.validate()?;
        inner_controller.validate()?;
        if !plant.is_proper() {
            return Err(LtiError::Improper {
                num_degree: plant.num_degree(),
                den_degree: plant.den_degree(),
            }
            .into());
        }
        Ok(Self {
            feedforward,
            inner_controller,
            plant,
            delay_mode,
        })
    }
}

/// `(kp s + ki) / s`, or the constant `kp` when `ki = 0`.
pub fn pi_tf<T: Scalar>(p: &PiParams<T>) -> TransferFunction<T> {
    if p.ki == T::zero() {
        return TransferFunction::gain(p.kp);
    }
    TransferFunction::rational(vec![p.kp, p.ki], vec![T::one(), T::zero()])
        .expect("monic denominator")
}

/// Ideal `(kd s^2 + kp s + ki) / s` or, when `realized`, the form with `kd s` replaced by
/// `kd s / (1 + s kd / (n kp))`.
pub fn pid_tf<T: Scalar>(
    p: &PidParams<T>,
    realized: bool,
) -> Result<TransferFunction<T>, ControlError> {
    p.validate()?;
    if p.kd == T::zero() {
        return Ok(pi_tf(&p.pi_part()));
    }
    if !realized {
        return Ok(TransferFunction::rational(
            vec![p.kd, p.kp, p.ki],
            vec![T::one(), T::zero()],
        )?);
    }
    let tau = p.filter_time_constant()?;
    // (kp s + ki)(tau s + 1) + kd s^2 over s (tau s + 1)
    let num = vec![p.kp * tau + p.kd, p.kp + p.ki * tau, p.ki];
    let den = vec![tau, T::one(), T::zero()];
    Ok(TransferFunction::rational(num, den)?)
}

/// Ideal PID for time simulation is rejected.
pub fn pid_tf_for_simulation<T: Scalar>(
    p: &PidParams<T>,
    realized: bool,
) -> Result<TransferFunction<T>, ControlError> {
    if !realized && p.kd != T::zero() {
        return Err(ControlError::IdealNotRealizable { kd: p.kd.as_f64() });
    }
    pid_tf(p, realized)
}

/// PI controller in series with the plant; no cancellation.
pub fn build_open_loop<T: Scalar>(
    pi: &PiParams<T>,
    plant: &TransferFunction<T>,
) -> TransferFunction<T> {
    series(&pi_tf(pi), plant)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignWarning {
    UnstableInnerLoop { max_real_pole: f64 },
    UnstableCascade { max_real_pole: f64 },
}

impl std::fmt::Display for DesignWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DesignWarning::UnstableInnerLoop { max_real_pole } => {
                write!(
                    f,
                    "inner PI loop is unstable (rightmost pole real part {max_real_pole:e})"
                )
            }
            DesignWarning::UnstableCascade { max_real_pole } => {
                write!(
                    f,
                    "cascade closed loop is unstable (rightmost pole real part {max_real_pole:e})"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeDesign<T> {
    /// Reference to output.
    pub closed_loop: TransferFunction<T>,
    /// Inner PI loop, reference to output.
    pub inner_loop: TransferFunction<T>,
    /// Error to output: realized PID in series with the inner loop.
    pub forward_path: TransferFunction<T>,
    pub stability: StabilityReport<T>,
    pub inner_stability: StabilityReport<T>,
    pub warnings: Vec<DesignWarning>,
}

fn rightmost<T: Scalar>(r: &StabilityReport<T>) -> f64 {
    r.poles
        .iter()
        .map(|p| p.re.as_f64())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Rational cascade with the plant delay replaced by its second-order Padé approximant.
///
/// Instability of either loop is reported as a warning rather than an error.
pub fn build_cascade<T: Scalar>(t: &LoopTopology<T>) -> Result<CascadeDesign<T>, ControlError> {
    if t.delay_mode == DelayMode::Exact && t.plant.delay() > T::zero() {
        return Err(ControlError::ExactDelay);
    }
    let open = build_open_loop(&t.inner_controller, &t.plant).with_pade(2)?;
    let inner_loop = feedback_unity(&open)?;
    let forward_path = series(&pid_tf(&t.feedforward, true)?, &inner_loop);
    let closed_loop = feedback_unity(&forward_path)?;
    let inner_stability = inner_loop.is_stable()?;
    let stability = closed_loop.is_stable()?;
    let mut warnings = Vec::new();
    if !inner_stability.stable {
        warnings.push(DesignWarning::UnstableInnerLoop {
            max_real_pole: rightmost(&inner_stability),
        });
    }
    if !stability.stable && !closed_loop.is_zero() {
        warnings.push(DesignWarning::UnstableCascade {
            max_real_pole: rightmost(&stability),
        });
    }
    Ok(CascadeDesign {
        closed_loop,
        inner_loop,
        forward_path,
        stability,
        inner_stability,
        warnings,
    })
}

/// The cascade as a block expression with the plant delay kept exact.
pub fn cascade_expr<T: Scalar>(t: &LoopTopology<T>) -> Result<LoopExpr<T>, ControlError> {
    let open = LoopExpr::series(vec![
        pi_tf(&t.inner_controller).into(),
        t.plant.clone().into(),
    ]);
    let forward = LoopExpr::series(vec![
        pid_tf(&t.feedforward, true)?.into(),
        LoopExpr::feedback(open),
    ]);
    Ok(LoopExpr::feedback(forward))
}

/// Gains of both controllers as stored in controller files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig<T> {
    pub pi: PiParams<T>,
    pub pid: PidParams<T>,
}

const CONTROLLER_KEYS: [&str; 6] = ["pi_kp", "pi_ki", "pid_kp", "pid_ki", "pid_kd", "deriv_n"];

impl<T: Scalar> ControllerConfig<T> {
    /// PI `3.79 + 0.0344/s` and PID `3.4993 + 0.054765/s + 55.8988 s`.
    pub fn reference() -> Self {
        Self {
            pi: PiParams {
                kp: T::lit(3.79),
                ki: T::lit(0.0344),
            },
            pid: PidParams {
                kp: T::lit(3.4993),
                ki: T::lit(0.054765),
                kd: T::lit(55.8988),
                derivative_filter_n: T::lit(DEFAULT_DERIVATIVE_FILTER_N),
            },
        }
    }

    pub fn to_file_string(&self) -> String {
        render(&[
            ("pi_kp", self.pi.kp.as_f64()),
            ("pi_ki", self.pi.ki.as_f64()),
            ("pid_kp", self.pid.kp.as_f64()),
            ("pid_ki", self.pid.ki.as_f64()),
            ("pid_kd", self.pid.kd.as_f64()),
            ("deriv_n", self.pid.derivative_filter_n.as_f64()),
        ])
    }

    /// `deriv_n` may be omitted and defaults to 100; all other keys are required.
    pub fn from_file_str(text: &str) -> Result<Self, ControlError> {
        let doc = KvDoc::parse(text)?;
        doc.reject_unknown(&CONTROLLER_KEYS)?;
        let get = |k: &str| doc.require_f64(k).map(T::lit);
        let n = doc
            .get_f64("deriv_n")?
            .unwrap_or(DEFAULT_DERIVATIVE_FILTER_N);
        let pi = PiParams {
            kp: get("pi_kp")?,
            ki: get("pi_ki")?,
        };
        pi.validate()
            .map_err(|e| doc.error_at("pi_ki", e.to_string()))?;
        let pid = PidParams {
            kp: get("pid_kp")?,
            ki: get("pid_ki")?,
            kd: get("pid_kd")?,
            derivative_filter_n: T::lit(n),
        };
        pid.validate()
            .map_err(|e| doc.error_at("pid_kd", e.to_string()))?;
        Ok(Self { pi, pid })
    }
}
