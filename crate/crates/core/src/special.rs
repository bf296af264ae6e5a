//! Scaled complementary error function.

use std::f64::consts::PI;

/// `exp(x²)·erfc(x)`, evaluated without the overflow/underflow of the naive
/// product.
///
/// For moderate arguments the product of `exp` and `libm::erfc` is accurate
/// to a few ulp; beyond `x = 5` a Lentz continued fraction takes over, which
/// converges faster the larger `x` gets.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        // erfc(-x) = 2 - erfc(x)
        if x < -26.0 {
            return f64::INFINITY;
        }
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 5.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    if x.is_infinite() {
        return 0.0;
    }
    erfcx_continued_fraction(x)
}

/// erfcx(x) = (1/√π) · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfcx_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (PI.sqrt() * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_product_in_overlap() {
        for &x in &[0.0f64, 0.3, 1.0, 2.5, 4.0, 4.9] {
            let naive = (x * x).exp() * libm::erfc(x);
            assert!((erfcx(x) / naive - 1.0).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn continued_fraction_joins_smoothly() {
        let below = (25.0f64).exp() * libm::erfc(5.0);
        let above = erfcx_continued_fraction(5.0);
        assert!((below / above - 1.0).abs() < 1e-13, "{below} vs {above}");
    }

    #[test]
    fn asymptotic_large_argument() {
        // erfcx(x) ~ 1/(x√π) (1 - 1/(2x²) + 3/(4x⁴))
        let x = 1.0e3;
        let series = 1.0 / (x * PI.sqrt()) * (1.0 - 0.5 / (x * x) + 0.75 / x.powi(4));
        assert!((erfcx(x) / series - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_arguments() {
        let x = -1.5f64;
        let expected = (x * x).exp() * libm::erfc(x);
        assert!((erfcx(x) / expected - 1.0).abs() < 1e-13);
        assert_eq!(erfcx(0.0), 1.0);
    }
}
