//! Euler gamma function for the real arguments the fractional kernels need.

/// Γ(x); NaN at the poles 0, −1, −2, ….
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    statrs::function::gamma::gamma(x)
}

/// 1/Γ(x), returning exactly zero at the poles (0, −1, −2, …).
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn known_values() {
        let sqrt_pi = PI.sqrt();
        assert!(rel(gamma(0.5), sqrt_pi) < 1e-14);
        assert!(rel(gamma(1.0), 1.0) < 1e-14);
        assert!(rel(gamma(1.5), sqrt_pi / 2.0) < 1e-14);
        assert!(rel(gamma(2.0), 1.0) < 1e-14);
        assert!(rel(gamma(2.5), 0.75 * sqrt_pi) < 1e-14);
        assert!(rel(gamma(0.25), 3.625_609_908_221_908) < 1e-14);
        assert!(rel(gamma(0.75), 1.225_416_702_465_177_6) < 1e-14);
        assert!(rel(gamma(1.0 / 3.0), 2.678_938_534_707_747_6) < 1e-14);
        assert!(rel(gamma(0.1), 9.513_507_698_668_732) < 1e-14);
    }

    #[test]
    fn recurrence_on_unit_interval() {
        for i in 1..200 {
            let x = i as f64 / 100.0;
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn poles() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
        assert_eq!(recip_gamma(0.0), 0.0);
        assert_eq!(recip_gamma(-1.0), 0.0);
        assert!(rel(recip_gamma(0.5), 1.0 / PI.sqrt()) < 1e-14);
    }
}
