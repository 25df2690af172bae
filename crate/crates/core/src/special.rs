//! Bessel J₁, the sombrero function and sinc.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// |x| at which J₁ switches from the power series to the asymptotic expansion.
pub const J1_SERIES_LIMIT: f64 = 12.0;

/// |x| below which `somb` and `sinc` use their Taylor polynomials.
pub const SMALL_ARG: f64 = 1e-4;

const MAX_SERIES_TERMS: usize = 80;
const MAX_ASYMPTOTIC_TERMS: usize = 60;

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument must be finite, got {x}")))
    }
}

/// Bessel function of the first kind, order one.
///
/// For |x| ≤ 12 the power series `Σ (−1)ᵏ (x/2)^(2k+1) / (k!(k+1)!)` is summed
/// until a term drops below 2⁻⁵⁶ of the running sum (at most ~40 terms on this
/// range; the largest term is ≈ 3.6·10³, bounding cancellation error near
/// 10⁻¹²). Beyond that, Hankel's asymptotic expansion is truncated at its
/// smallest term. Odd symmetry is exact: the magnitude is computed for |x| and
/// the sign restored afterwards.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_finite(x)?;
    Ok(j1_unchecked(x))
}

pub(crate) fn j1_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= J1_SERIES_LIMIT {
        j1_series(ax)
    } else {
        j1_asymptotic(ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

pub(crate) fn j1_series(x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = h;
    let mut sum = h;
    for k in 0..MAX_SERIES_TERMS {
        term *= -h2 / (((k + 1) * (k + 2)) as f64);
        sum += term;
        if term.abs() <= sum.abs() * f64::EPSILON * 0.25 {
            break;
        }
    }
    sum
}

/// `sqrt(2/(πx))·(P cos χ − Q sin χ)` with χ = x − 3π/4, where P and Q are
/// the even/odd parts of `Σ aₖ / xᵏ`,
/// `aₖ = Π_{j=1..k} (4 − (2j−1)²) / (k!·8ᵏ)`, summed with alternating signs
/// and stopped before the first term that grows.
pub(crate) fn j1_asymptotic(x: f64) -> f64 {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..MAX_ASYMPTOTIC_TERMS {
        let odd = (2 * k - 1) as f64;
        term *= (4.0 - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        // P collects k = 0, 2, 4, ... with signs +, −, +; Q collects k = 1, 3, ...
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    let chi = x - 3.0 * FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `somb(x) = 2J₁(x)/x`, with `somb(0) = 1`.
pub fn somb(x: f64) -> Result<f64> {
    check_finite(x)?;
    Ok(somb_unchecked(x))
}

pub(crate) fn somb_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SMALL_ARG {
        let x2 = ax * ax;
        1.0 - x2 / 8.0 + x2 * x2 / 192.0
    } else {
        2.0 * j1_unchecked(ax) / ax
    }
}

/// Unnormalized sinc, `sin(u)/u`, with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    let au = u.abs();
    if au <= SMALL_ARG {
        let u2 = au * au;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        au.sin() / au
    }
}

/// Root of `sinc²(u) = 1/2` on (0, π), found by bisection to 1e-14.
///
/// The full width at half maximum of `sinc²(x/w)` is `2·w·sinc2_half_max_root()`.
pub fn sinc2_half_max_root() -> f64 {
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if sinc(mid).powi(2) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j1_reference_points() {
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        // 50-digit reference: J1(1) = 0.44005058574493351596
        assert!((bessel_j1(1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-10);
        assert!(bessel_j1(3.831_705_970_207_512).unwrap().abs() < 1e-9);
    }

    #[test]
    fn j1_is_exactly_odd() {
        for &x in &[0.3, 2.0, 11.9, 12.0, 12.5, 33.3] {
            assert_eq!(bessel_j1(-x).unwrap(), -bessel_j1(x).unwrap());
        }
    }

    #[test]
    fn branches_agree_at_switch_point() {
        let diff = (j1_series(J1_SERIES_LIMIT) - j1_asymptotic(J1_SERIES_LIMIT)).abs();
        assert!(diff <= 1e-11, "{diff}");
    }

    #[test]
    fn non_finite_is_domain_error() {
        assert!(matches!(bessel_j1(f64::NAN), Err(Error::Domain(_))));
        assert!(somb(f64::INFINITY).is_err());
    }

    #[test]
    fn somb_limits_and_zero() {
        assert_eq!(somb(0.0).unwrap(), 1.0);
        assert!(somb(3.831_705_970_207_512).unwrap().abs() < 1e-9);
        // Taylor branch meets the Bessel branch.
        let a = somb_unchecked(SMALL_ARG);
        let b = 2.0 * j1_series(SMALL_ARG) / SMALL_ARG;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn sinc_basics() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert!((sinc(SMALL_ARG) - SMALL_ARG.sin() / SMALL_ARG).abs() <= 2.3e-16);
    }

    #[test]
    fn half_max_root_value() {
        // 50-digit reference 1.39155737825151015032
        assert!((sinc2_half_max_root() - 1.391_557_378_251_51).abs() < 1e-10);
    }
}
