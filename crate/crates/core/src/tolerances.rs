//! Default numerical thresholds shared across modules.
//!
//! Everything here is a default; the public operations take their
//! tolerances as arguments or through configuration structs.

/// Sup-norm tension threshold for a disc to count as harmonic.
pub const TAU_H: f64 = 1e-4;

/// Normalised conformality defect threshold for admissible discs.
pub const TAU_C: f64 = 1e-2;

/// Relative threshold below which a 2-plane is declared degenerate.
pub const TAU_PLANE: f64 = 1e-10;

/// Endpoint matching slack for Kobayashi chains, in chart units.
pub const TAU_LINK: f64 = 1e-3;

/// Combined slack when comparing lower and upper metric estimates.
pub const TAU_GAP: f64 = 0.1;

/// Slack on the claim-disc stretch factor `alpha >= 1/2`.
pub const TAU_ALPHA: f64 = 1e-3;

/// Coefficient `C` in the jet drift threshold `max(tau_c, C r^2)`.
pub const JET_DRIFT_COEFF: f64 = 1.0;

/// Slack for the sub-mean-value test.
pub const TAU_SH: f64 = 1e-3;

/// Jet drift threshold for a disc of radius `r`.
pub fn tau_jet(tau_c: f64, r: f64) -> f64 {
    tau_c.max(JET_DRIFT_COEFF * r * r)
}
