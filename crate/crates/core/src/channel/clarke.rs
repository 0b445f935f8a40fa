use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Bessel function of the first kind, order zero. Power series up to
/// `|x| = 12`, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 12.0 {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0;
    loop {
        term *= q / (m * m);
        sum += term;
        if term.abs() < 1e-16 {
            return sum;
        }
        m += 1.0;
    }
}

fn j0_asymptotic(x: f64) -> f64 {
    // P and Q series; |a_k| = |a_{k-1}| (2k-1)^2 / (8k), alternating in pairs,
    // and Q starts at -1/(8x).
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut xk = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let term = a / xk;
        if term > prev || term < 1e-17 {
            break;
        }
        prev = term;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q -= sign * term;
        }
        let kk = (k + 1) as f64;
        a *= (2.0 * kk - 1.0).powi(2) / (8.0 * kk);
        xk *= x;
    }
    let chi = x - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `r = J0(2 pi nu T d)`. Negative correlations are outside the modelled
/// range and rejected.
pub fn clarke_autocorrelation(doppler_hz: f64, symbol_time_s: f64, delay_symbols: f64) -> Result<f64> {
    if !(doppler_hz >= 0.0 && symbol_time_s >= 0.0 && delay_symbols >= 0.0) {
        return Err(invalid("Clarke inputs must be non-negative"));
    }
    let arg = 2.0 * PI * doppler_hz * symbol_time_s * delay_symbols;
    let value = bessel_j0(arg).clamp(-1.0, 1.0);
    if value < 0.0 {
        return Err(Error::NegativeAutocorrelation { arg, value });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // scipy.special.j0
        let table = [
            (0.0, 1.0),
            (1.0, 0.7651976865579665),
            (5.0, -0.1775967713143383),
            (12.0, 0.04768931079683335),
            (12.5, 0.14688405470042093),
            (15.0, -0.014224472826780597),
            (20.0, 0.16702466434058322),
            (50.0, 0.055812327669252086),
        ];
        for (x, want) in table {
            let got = bessel_j0(x);
            assert!((got - want).abs() < 1e-12, "J0({x}) = {got}, want {want}");
        }
        assert_eq!(bessel_j0(-1.0), bessel_j0(1.0));
    }

    #[test]
    fn pedestrian_scenarios() {
        assert_eq!(clarke_autocorrelation(10.0, 0.01, 0.0).unwrap(), 1.0);
        let slow = clarke_autocorrelation(10.0, 1e-3, 10.0).unwrap();
        assert!((slow - 0.90371).abs() < 1e-4, "{slow}");
        let fast = clarke_autocorrelation(10.0, 1e-3, 1.0).unwrap();
        assert!((fast - 0.99901).abs() < 1e-5, "{fast}");
    }

    #[test]
    fn negative_values_rejected() {
        // first zero of J0 is at 2.405
        let err = clarke_autocorrelation(100.0, 5e-3, 1.0).unwrap_err();
        assert!(matches!(err, Error::NegativeAutocorrelation { .. }));
        assert!(clarke_autocorrelation(-1.0, 1.0, 1.0).is_err());
    }
}
