//! Float formatting shared by every CSV/JSON emitter.

/// Shortest representation that parses back to the same `f64`, in scientific
/// notation. Non-finite values print as `inf`, `-inf` or `NaN`.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}
