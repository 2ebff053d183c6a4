use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SimConfig;
use crate::Scalar;

/// Near-mode depth range of the camera, mm.
pub const DEPTH_RANGE_MM: (f64, f64) = (400.0, 3000.0);

/// Overhead camera geometry: `height = mount_height - camera_distance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorMapping<T> {
    pub mount_height_mm: T,
}

impl<T: Scalar> Default for SensorMapping<T> {
    fn default() -> Self {
        Self {
            mount_height_mm: T::lit(710.0),
        }
    }
}

impl<T: Scalar> SensorMapping<T> {
    pub fn height_from_distance(&self, distance_mm: T) -> T {
        (self.mount_height_mm - distance_mm)
            .max(T::zero())
            .min(self.mount_height_mm)
    }

    pub fn distance_from_height(&self, height_mm: T) -> T {
        self.mount_height_mm - height_mm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading<T> {
    /// Head height above the table, mm.
    pub height_mm: T,
    /// Camera distance fell outside the near-mode range and was clamped.
    pub out_of_range: bool,
}

/// One simulated depth frame for a true head height in cm.
///
/// Noise is added to the camera distance, which is then quantized to `sensor_quant` and
/// clamped to the near-mode range.
pub fn depth_sensor_sample<T: Scalar, R: Rng + ?Sized>(
    y_true_cm: T,
    mapping: &SensorMapping<T>,
    cfg: &SimConfig<T>,
    rng: &mut R,
) -> SensorReading<T> {
    let h = (y_true_cm * T::lit(10.0))
        .max(T::zero())
        .min(mapping.mount_height_mm);
    let mut d = mapping.distance_from_height(h);
    if cfg.sensor_noise_std > T::zero() {
        let z: f64 = StandardNormal.sample(rng);
        d += cfg.sensor_noise_std * T::lit(z);
    }
    if cfg.sensor_quant > T::zero() {
        d = (d / cfg.sensor_quant).round() * cfg.sensor_quant;
    }
    let (lo, hi) = (T::lit(DEPTH_RANGE_MM.0), T::lit(DEPTH_RANGE_MM.1));
    let out_of_range = d < lo || d > hi;
    let d = d.max(lo).min(hi);
    SensorReading {
        height_mm: mapping.height_from_distance(d),
        out_of_range,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_mapping_without_noise() {
        let cfg = SimConfig::<f64>::ideal();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = depth_sensor_sample(24.51, &SensorMapping::default(), &cfg, &mut rng);
        assert!((r.height_mm - 245.1).abs() < 1e-9 && !r.out_of_range);
    }

    #[test]
    fn quantized_to_lattice() {
        let cfg = SimConfig::<f64> {
            sensor_quant: 1.0,
            sensor_noise_std: 1.5,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let r = depth_sensor_sample(24.537, &SensorMapping::default(), &cfg, &mut rng);
            assert_eq!(r.height_mm, r.height_mm.round());
        }
    }

    #[test]
    fn near_range_is_flagged_and_clamped() {
        let cfg = SimConfig::<f64>::ideal();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = depth_sensor_sample(35.0, &SensorMapping::default(), &cfg, &mut rng);
        assert!(r.out_of_range);
        assert_eq!(r.height_mm, 310.0);
    }
}
