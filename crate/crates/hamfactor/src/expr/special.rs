//! Closed forms for the two built-in C-infinity glue functions.
//!
//! `bump(t) = exp(1 - 1/(1-t^2))` for |t| < 1 and 0 otherwise; it equals 1 at
//! t = 0 and vanishes to infinite order at t = ±1.
//!
//! `step(t) = sigma(t) / (sigma(t) + sigma(1-t))` with `sigma(t) = exp(-1/t)`
//! for t > 0 and 0 otherwise; it is 0 for t <= 0, 1 for t >= 1, and strictly
//! increasing in between.
//!
//! Both functions and their derivatives are total: every branch below returns
//! a finite value for every finite input, including the seam points, where
//! IEEE underflow of `exp` produces the exact limits.

/// `sigma(t) = exp(-1/t)` for t > 0, else 0.
pub fn sigma(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// `sigma'(t) = sigma(t) / t^2` for t > 0, else 0.
pub fn sigma_prime(t: f64) -> f64 {
    if t > 0.0 {
        let s = sigma(t);
        // exp(-1/t) underflows long before t^2 does; keep 0/0 out.
        if s == 0.0 {
            0.0
        } else {
            s / (t * t)
        }
    } else {
        0.0
    }
}

/// Smooth bump: 1 at the origin, supported exactly on [-1, 1].
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Derivative of [`bump`]: `bump(t) * (-2t) / (1-t^2)^2` inside the support.
pub fn bump_prime(t: f64) -> f64 {
    if t.abs() < 1.0 {
        let d = 1.0 - t * t;
        bump(t) * (-2.0 * t) / (d * d)
    } else {
        0.0
    }
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1.
pub fn step(t: f64) -> f64 {
    // For t outside (0, 1) one of the two sigmas is exactly zero, so the
    // quotient is exactly 0 or 1; the denominator never vanishes.
    let a = sigma(t);
    let b = sigma(1.0 - t);
    a / (a + b)
}

/// Derivative of [`step`].
pub fn step_prime(t: f64) -> f64 {
    let a = sigma(t);
    let b = sigma(1.0 - t);
    let s = a + b;
    (sigma_prime(t) * b + a * sigma_prime(1.0 - t)) / (s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_normalization() {
        assert_eq!(bump(0.0), 1.0);
    }

    #[test]
    fn bump_outside_support() {
        assert_eq!(bump(2.0), 0.0);
        assert_eq!(bump(-1.0), 0.0);
        assert_eq!(bump(1.0), 0.0);
    }

    #[test]
    fn step_symmetry_point() {
        assert_eq!(step(0.5), 0.5);
    }

    #[test]
    fn step_saturates() {
        assert_eq!(step(0.0), 0.0);
        assert_eq!(step(-3.0), 0.0);
        assert_eq!(step(1.0), 1.0);
        assert_eq!(step(7.5), 1.0);
    }

    #[test]
    fn derivatives_vanish_outside() {
        assert_eq!(bump_prime(1.0), 0.0);
        assert_eq!(bump_prime(-1.5), 0.0);
        assert_eq!(step_prime(0.0), 0.0);
        assert_eq!(step_prime(1.0), 0.0);
        assert_eq!(step_prime(2.0), 0.0);
    }

    // The glue functions and their first two derivatives must match their
    // one-sided limits at the seams. The second derivative is taken as a
    // central difference of the exact first derivative.
    #[test]
    fn seam_continuity_to_second_order() {
        let second = |f: fn(f64) -> f64, t: f64| (f(t + 1e-3) - f(t - 1e-3)) / 2e-3;
        for delta in [1e-2, 1e-3] {
            for seam in [-1.0, 1.0] {
                for f in [bump, bump_prime] {
                    assert!((f(seam - delta) - f(seam + delta)).abs() <= 1e-8);
                }
                let dd = second(bump_prime, seam - delta) - second(bump_prime, seam + delta);
                assert!(dd.abs() <= 1e-8);
            }
            for seam in [0.0, 1.0] {
                for f in [step, step_prime] {
                    let gap = (f(seam - delta) - f(seam + delta)).abs();
                    assert!(gap <= 1e-8, "gap {gap} at seam {seam} delta {delta}");
                }
                let dd = second(step_prime, seam - delta) - second(step_prime, seam + delta);
                assert!(dd.abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn no_nan_anywhere_near_seams() {
        for &t in &[-1.0 - 1e-16, -1.0, -1.0 + 1e-16, 0.0, 1e-300, 1.0 - 1e-16, 1.0] {
            assert!(bump(t).is_finite());
            assert!(bump_prime(t).is_finite());
            assert!(step(t).is_finite());
            assert!(step_prime(t).is_finite());
        }
    }
}
