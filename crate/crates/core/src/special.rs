//! Special functions needed by the Matérn family.

/// Modified Bessel function of the second kind, `K_ν(x)` for `x > 0`,
/// scaled by `e^x` to avoid underflow at large arguments.
///
/// Uses the integral representation
/// `K_ν(x) = ∫₀^∞ exp(−x cosh t) cosh(νt) dt` with the trapezoid rule. The
/// integrand is entire and decays double-exponentially, so the trapezoid
/// error falls like `exp(−π²/(2h))`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k_scaled requires x > 0");
    // the integrand narrows like 1/sqrt(x)
    let h = 0.05 * (3.0 / x.sqrt()).min(1.0);
    // integrand peak: sinh t = ν / x
    let t_peak = (nu.abs() / x).asinh();
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let mut sum = 0.5 * f(0.0);
    let mut k = 1usize;
    loop {
        let t = k as f64 * h;
        let term = f(t);
        sum += term;
        if t > t_peak && term <= 1e-18 * sum {
            break;
        }
        k += 1;
        if k > 100_000 {
            break;
        }
    }
    h * sum
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}
