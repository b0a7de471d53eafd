//! Modified Bessel functions of the second kind for integer and half-integer
//! orders.
//!
//! Half-integer orders use the terminating closed form. Integer orders start
//! from `K_0`, `K_1` (power series for `x <= 2`, Steed's continued fraction
//! above) and recur upward, which is the stable direction for `K`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_CUTOFF: f64 = 2.0;
const MAX_ITER: usize = 10_000;

/// Order of a Bessel function restricted to multiples of one half.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Order {
    Integer(u32),
    /// `n + 1/2`
    HalfInteger(u32),
}

impl Order {
    pub(crate) fn classify(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::Domain(format!("Bessel order must be non-negative, got {nu}")));
        }
        let twice = 2.0 * nu;
        if (twice - twice.round()).abs() > 1e-12 || twice > 2000.0 {
            return Err(Error::UnsupportedOrder(nu));
        }
        let twice = twice.round() as u32;
        Ok(if twice.is_multiple_of(2) {
            Order::Integer(twice / 2)
        } else {
            Order::HalfInteger(twice / 2)
        })
    }
}

/// `K_nu(r)` for `nu` a non-negative integer or half-integer and `r > 0`.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("Bessel K requires r > 0, got {r}")));
    }
    Ok(match Order::classify(nu)? {
        Order::Integer(n) => k_integer(n, r),
        Order::HalfInteger(n) => k_half_integer(n, r),
    })
}

/// `K_{n+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_k (n+k)!/(k!(n-k)!) (2x)^{-k}`.
pub(crate) fn k_half_integer(n: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let nf = n as f64;
    for k in 0..n {
        let kf = k as f64;
        term *= (nf + kf + 1.0) * (nf - kf) / ((kf + 1.0) * 2.0 * x);
        sum += term;
    }
    (PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

pub(crate) fn k_integer(n: u32, x: f64) -> f64 {
    let (k0, k1) = k0_k1(x);
    match n {
        0 => k0,
        1 => k1,
        _ => {
            let (mut prev, mut cur) = (k0, k1);
            for j in 1..n {
                let next = prev + 2.0 * j as f64 / x * cur;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `(K_0(x), K_1(x))`.
pub(crate) fn k0_k1(x: f64) -> (f64, f64) {
    if x <= SERIES_CUTOFF {
        k0_k1_series(x)
    } else {
        k0_k1_continued_fraction(x)
    }
}

fn k0_k1_series(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    let log_half = (0.5 * x).ln();

    // K_0 = -(ln(x/2) + gamma) I_0 + sum_{k>=1} H_k t^k / (k!)^2
    // K_1 = 1/x + ln(x/2) I_1 - (x/4) sum_{k>=0} (psi(k+1) + psi(k+2)) t^k / (k!(k+1)!)
    let mut i0 = 1.0;
    let mut i1_sum = 1.0;
    let mut k0_tail = 0.0;
    let mut k1_tail = -2.0 * EULER_GAMMA + 1.0;

    let mut w0 = 1.0; // t^k / (k!)^2
    let mut w1 = 1.0; // t^k / (k! (k+1)!)
    let mut harmonic = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        w0 *= t / (kf * kf);
        w1 *= t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        let harmonic_next = harmonic + 1.0 / (kf + 1.0);
        i0 += w0;
        i1_sum += w1;
        k0_tail += harmonic * w0;
        k1_tail += (harmonic + harmonic_next - 2.0 * EULER_GAMMA) * w1;
        if w0 < 1e-18 * i0 && w1 < 1e-18 * i1_sum {
            break;
        }
    }
    let i1 = 0.5 * x * i1_sum;
    let k0 = -(log_half + EULER_GAMMA) * i0 + k0_tail;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * k1_tail;
    (k0, k1)
}

/// Steed's method on Temme's second continued fraction, order zero.
fn k0_k1_continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// `Gamma(alpha)` for positive integer or half-integer `alpha`.
pub(crate) fn gamma_half_integer(alpha: f64) -> f64 {
    let twice = (2.0 * alpha).round() as u32;
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|k| k as f64).product()
    } else {
        // Gamma(n + 1/2) = sqrt(pi) * prod_{k=1}^{n} (k - 1/2)
        let n = twice / 2;
        PI.sqrt() * (1..=n).map(|k| k as f64 - 0.5).product::<f64>()
    }
}

/// Radial profile `g_alpha(s) = s^alpha K_|alpha|(s)` for half-integer multiples
/// `alpha`, with the analytic value `2^{alpha-1} Gamma(alpha)` at `s = 0` when
/// `alpha > 0`.
///
/// These satisfy `d/ds g_alpha(s) = -s g_{alpha-1}(s)`, which is what makes the
/// kernel derivatives free of removable singularities.
pub(crate) fn scaled_profile(alpha: f64, s: f64) -> f64 {
    debug_assert!(s >= 0.0);
    let order = alpha.abs();
    let twice = (2.0 * order).round() as u32;
    if twice % 2 == 1 && alpha > 0.0 {
        // polynomial form: sqrt(pi/2) e^{-s} sum_k c_k 2^{-k} s^{n-k}
        let n = twice / 2;
        let nf = n as f64;
        let mut coeff = 1.0; // c_k 2^{-k}
        let mut acc = s.powi(n as i32);
        for k in 0..n {
            let kf = k as f64;
            coeff *= (nf + kf + 1.0) * (nf - kf) / ((kf + 1.0) * 2.0);
            acc += coeff * s.powi((n - k - 1) as i32);
        }
        return (PI / 2.0).sqrt() * (-s).exp() * acc;
    }
    if s == 0.0 {
        return if alpha > 0.0 {
            2f64.powf(alpha - 1.0) * gamma_half_integer(alpha)
        } else {
            f64::INFINITY
        };
    }
    if alpha >= 1.0 && s < 1e-10 {
        return 2f64.powf(alpha - 1.0) * gamma_half_integer(alpha);
    }
    let k = if twice.is_multiple_of(2) {
        k_integer(twice / 2, s)
    } else {
        k_half_integer(twice / 2, s)
    };
    if alpha == 0.0 {
        k
    } else {
        s.powf(alpha) * k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn closed_form_half_orders() {
        let k = bessel_k(0.5, 1.0).unwrap();
        assert!(rel(k, (PI / 2.0).sqrt() * (-1f64).exp()) < 1e-15);
        let k = bessel_k(1.5, 2.0).unwrap();
        assert!(rel(k, (PI / 4.0).sqrt() * (-2f64).exp() * 1.5) < 1e-15);
    }

    // Reference values from a 40-digit evaluation of K_nu.
    const REFERENCE: &[(f64, f64, f64)] = &[
        (5.0, 1.0, 360.960_589_601_240_700_66),
        (0.0, 0.5, 0.924_419_071_227_665_861_78),
        (1.0, 0.5, 1.656_441_120_003_300_893_7),
        (0.0, 2.0, 0.113_893_872_749_533_435_65),
        (1.0, 2.0, 0.139_865_881_816_522_427_28),
        (0.0, 3.7, 0.015_630_659_921_626_658_481),
        (1.0, 3.7, 0.017_628_035_102_223_263_065),
        (2.0, 0.1, 199.503_964_642_114_117_11),
        (3.0, 10.0, 2.725_270_025_659_869_208_9e-5),
        (4.0, 25.0, 4.738_527_043_866_946_949_6e-12),
        (5.0, 1e-3, 3.839_999_760_000_009_600_3e17),
        (0.0, 50.0, 3.410_167_749_789_495_513_9e-23),
        (1.0, 50.0, 3.444_102_226_717_555_612_6e-23),
        (2.0, 1e-8, 1.999_999_999_999_999_866_3e16),
        (6.0, 7.5, 0.002_200_879_582_742_050_009_1),
        (4.5, 0.3, 29_472.384_044_228_917_553),
        (3.5, 20.0, 7.736_730_892_373_783_681_8e-10),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(nu, x, expected) in REFERENCE {
            let got = bessel_k(nu, x).unwrap();
            assert!(rel(got, expected) < 1e-12, "K_{nu}({x}) = {got}, expected {expected}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(bessel_k(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k(1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k(0.3, 1.0), Err(Error::UnsupportedOrder(_))));
        assert!(matches!(bessel_k(-1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_limits_at_origin() {
        // 2^{nu-1} Gamma(nu)
        assert_eq!(scaled_profile(5.0, 0.0), 384.0);
        assert!(rel(scaled_profile(4.5, 0.0), 8f64 * 2f64.sqrt() * gamma_half_integer(4.5)) < 1e-15);
        assert!(rel(scaled_profile(5.0, 1e-6), 384.0) < 1e-11);
        assert!(rel(scaled_profile(4.5, 1e-6), scaled_profile(4.5, 0.0)) < 1e-11);
    }

    #[test]
    fn profile_matches_direct_product() {
        for &(alpha, s) in &[(5.0f64, 0.7f64), (4.5, 2.5), (3.0, 11.0), (2.5, 0.01), (0.5, 3.0)] {
            let direct = s.powf(alpha) * bessel_k(alpha, s).unwrap();
            assert!(rel(scaled_profile(alpha, s), direct) < 1e-13);
        }
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_half_integer(5.0), 24.0);
        assert!(rel(gamma_half_integer(0.5), PI.sqrt()) < 1e-15);
        assert!(rel(gamma_half_integer(2.5), 0.75 * PI.sqrt()) < 1e-15);
    }
}
