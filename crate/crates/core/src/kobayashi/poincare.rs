use num_complex::Complex64;

use super::KobayashiError;

fn check(z: Complex64) -> Result<(), KobayashiError> {
    if z.norm() < 1.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(KobayashiError::OutsideDisc(format!("{z}")))
    }
}

/// Poincaré metric `|v| / (1 - |z|^2)` of the unit disc.
pub fn poincare_metric(z: Complex64, v: Complex64) -> Result<f64, KobayashiError> {
    check(z)?;
    Ok(v.norm() / (1.0 - z.norm_sqr()))
}

/// Poincaré distance `artanh(|z - w| / |1 - z conj(w)|)`, i.e.
/// `1/2 log((1 + d) / (1 - d))`.
pub fn poincare_distance(z: Complex64, w: Complex64) -> Result<f64, KobayashiError> {
    check(z)?;
    check(w)?;
    if z == w {
        return Ok(0.0);
    }
    let d = (z - w).norm() / (Complex64::new(1.0, 0.0) - z * w.conj()).norm();
    Ok(d.min(1.0 - f64::EPSILON).atanh())
}

/// [`poincare_distance`] on real pairs `[x, y]`.
pub fn disc_distance_2d(z: [f64; 2], w: [f64; 2]) -> Result<f64, KobayashiError> {
    poincare_distance(Complex64::new(z[0], z[1]), Complex64::new(w[0], w[1]))
}
