//! Wigner 3j and 6j symbols from the Racah sums.
//!
//! The sums are carried out in exact rational arithmetic; only the final
//! square root is taken in floating point, so results are correct to a few
//! ulp for any argument size.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::HalfInt;

const MAX_FACTORIAL: usize = 200;

fn factorial(n: i32) -> &'static BigInt {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(MAX_FACTORIAL + 1);
        t.push(BigInt::one());
        for k in 1..=MAX_FACTORIAL {
            let next = &t[k - 1] * BigInt::from(k);
            t.push(next);
        }
        t
    });
    assert!(n >= 0 && (n as usize) <= MAX_FACTORIAL, "factorial argument {n} out of range");
    &table[n as usize]
}

/// Integer value of a sum of half-integers given as twice-values.
fn half_sum(twice: i32) -> Option<i32> {
    (twice % 2 == 0).then_some(twice / 2)
}

fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Δ(abc) = (a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!
fn triangle_coefficient(a: HalfInt, b: HalfInt, c: HalfInt) -> BigRational {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    let num = factorial((a + b - c) / 2) * factorial((a - b + c) / 2) * factorial((-a + b + c) / 2);
    let den = factorial((a + b + c) / 2 + 1).clone();
    BigRational::new(num, den)
}

fn signed_sqrt(square: BigRational, sign_negative: bool) -> f64 {
    let v = square.to_f64().expect("finite rational").sqrt();
    if sign_negative {
        -v
    } else {
        v
    }
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3). Returns 0 whenever a selection rule
/// is violated.
pub fn wigner3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    if (m1 + m2 + m3).twice() != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.twice().abs() > j.twice() || (j.twice() + m.twice()) % 2 != 0 {
            return 0.0;
        }
    }
    let (tj1, tj2, tj3) = (j1.twice(), j2.twice(), j3.twice());
    let (tm1, tm2, tm3) = (m1.twice(), m2.twice(), m3.twice());

    let k_min = [0, (tj2 - tj3 - tm1) / 2, (tj1 - tj3 + tm2) / 2].into_iter().max().unwrap();
    let k_max = [(tj1 + tj2 - tj3) / 2, (tj1 - tm1) / 2, (tj2 + tm2) / 2].into_iter().min().unwrap();
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial((tj3 - tj2 + tm1) / 2 + k)
            * factorial((tj3 - tj1 - tm2) / 2 + k)
            * factorial((tj1 + tj2 - tj3) / 2 - k)
            * factorial((tj1 - tm1) / 2 - k)
            * factorial((tj2 + tm2) / 2 - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let prefactor = triangle_coefficient(j1, j2, j3)
        * BigRational::from_integer(
            factorial((tj1 + tm1) / 2)
                * factorial((tj1 - tm1) / 2)
                * factorial((tj2 + tm2) / 2)
                * factorial((tj2 - tm2) / 2)
                * factorial((tj3 + tm3) / 2)
                * factorial((tj3 - tm3) / 2),
        );
    let phase = half_sum(tj1 - tj2 - tm3).expect("j1 - j2 - m3 is an integer");
    let negative = (phase.rem_euclid(2) == 1) != sum.is_negative();
    signed_sqrt(prefactor * &sum * &sum, negative)
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}. Returns 0 when any of the four
/// triads fails the triangle condition.
pub fn wigner6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> f64 {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle(a, b, c)) {
        return 0.0;
    }
    let sums: Vec<i32> = triads.iter().map(|(a, b, c)| (a.twice() + b.twice() + c.twice()) / 2).collect();
    let pairs = [
        (j1.twice() + j2.twice() + j4.twice() + j5.twice()) / 2,
        (j2.twice() + j3.twice() + j5.twice() + j6.twice()) / 2,
        (j3.twice() + j1.twice() + j6.twice() + j4.twice()) / 2,
    ];
    let t_min = *sums.iter().max().unwrap();
    let t_max = *pairs.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let num = factorial(t + 1).clone();
        let den = sums.iter().map(|&s| factorial(t - s)).product::<BigInt>()
            * pairs.iter().map(|&p| factorial(p - t)).product::<BigInt>();
        let term = BigRational::new(num, den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let prefactor =
        triads.iter().map(|&(a, b, c)| triangle_coefficient(a, b, c)).fold(BigRational::one(), |acc, d| acc * d);
    let negative = sum.is_negative();
    signed_sqrt(prefactor * &sum * &sum, negative)
}
