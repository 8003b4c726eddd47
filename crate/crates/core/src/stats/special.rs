//! Distribution tails used to turn test statistics into p-values.

use libm::{erfc, lgamma};

const CF_MAX_ITER: usize = 500;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// Regularized incomplete beta `I_z(a, b)`.
///
/// Evaluated with the modified Lentz continued fraction, switching to
/// `1 - I_{1-z}(b, a)` past the mean where the fraction converges slowly.
pub fn beta_reg(a: f64, b: f64, z: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta_reg needs a, b > 0 (got {a}, {b})");
    if z <= 0.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    if z > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - beta_reg_cf(b, a, 1.0 - z);
    }
    beta_reg_cf(a, b, z)
}

fn beta_reg_cf(a: f64, b: f64, z: f64) -> f64 {
    let ln_front = a * z.ln() + b * (-z).ln_1p() - ln_beta(a, b);
    ln_front.exp() * beta_cf(a, b, z) / a
}

fn beta_cf(a: f64, b: f64, z: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * z / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * z / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            return h;
        }
    }
    h
}

/// `P(F <= f)` for `F ~ F(d1, d2)`.
pub fn f_cdf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    if f.is_infinite() {
        return 1.0;
    }
    beta_reg(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2))
}

/// `P(F >= f)`, computed directly rather than as `1 - cdf`.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d1 * f + d2))
}

/// Upper tail of the standard normal, `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

const KS_TERM_EPS: f64 = 1e-10;

/// Kolmogorov tail `Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)`.
///
/// The alternating series is truncated once a term drops below `1e-10`.
/// For small `lambda` that series needs hundreds of terms, so below
/// `lambda = 1` the equivalent theta-function form
/// `1 - sqrt(2 pi)/lambda * sum_{j>=1} exp(-(2j-1)^2 pi^2 / (8 lambda^2))`
/// is used instead; both express the same function.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.0 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut sum = 0.0;
        for j in 1..=100 {
            let odd = (2 * j - 1) as f64;
            let term = (-(odd * odd) * pi2 / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < f64::EPSILON * sum {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for j in 1..=100 {
            let j = j as f64;
            let term = (-2.0 * j * j * lambda * lambda).exp();
            sum += sign * term;
            if term < KS_TERM_EPS {
                break;
            }
            sign = -sign;
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn f_cdf_is_half_at_one_for_equal_dfs() {
        for nu in [1.0, 4.0, 10.0, 49.0] {
            assert_abs_diff_eq!(f_cdf(1.0, nu, nu), 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn cdf_and_sf_are_complementary() {
        for &(f, d1, d2) in &[(0.3, 14.0, 14.0), (2.7, 24.0, 9.0), (1.1, 49.0, 49.0)] {
            assert_abs_diff_eq!(f_cdf(f, d1, d2) + f_sf(f, d1, d2), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn beta_reg_closed_forms() {
        // I_z(1, b) = 1 - (1 - z)^b and I_z(a, 1) = z^a.
        for &z in &[0.01, 0.2, 0.5, 0.77, 0.999] {
            assert_abs_diff_eq!(beta_reg(1.0, 3.5, z), 1.0 - (1.0 - z).powf(3.5), epsilon = 1e-14);
            assert_abs_diff_eq!(beta_reg(2.5, 1.0, z), z.powf(2.5), epsilon = 1e-14);
        }
        // I_z(1/2, 1/2) = (2/pi) asin(sqrt z).
        for &z in &[0.1f64, 0.5, 0.9] {
            let exact = 2.0 / std::f64::consts::PI * z.sqrt().asin();
            assert_abs_diff_eq!(beta_reg(0.5, 0.5, z), exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        // Evaluate both series forms on either side of lambda = 1.
        let below = kolmogorov_q(1.0 - 1e-12);
        let above = kolmogorov_q(1.0);
        assert_abs_diff_eq!(below, above, epsilon = 1e-9);
        assert_abs_diff_eq!(kolmogorov_q(1.0), 0.26999967167735456, epsilon = 1e-9);
        assert_abs_diff_eq!(kolmogorov_q(0.5), 0.9639452436648751, epsilon = 1e-9);
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(5.0) < 1e-20);
    }

    #[test]
    fn normal_tail_reference() {
        assert_abs_diff_eq!(normal_sf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_sf(1.959963984540054), 0.025, epsilon = 1e-12);
    }
}
