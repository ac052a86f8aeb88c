//! A-priori error estimates for the Gauss-Laguerre sums.
//!
//! Scalar estimates come from the principal conjugate pole pair of each
//! integrand: `q_I`/`q_II` for the first integral, `q_III`/`q_IV` for the
//! second. Maximising them over `lambda >= 1` gives the rule-size sequences
//! `g_I .. g_IV`, whose dominant members define `eps1`/`eps2` and the
//! operator-norm estimate of the un-balanced method.
//!
//! Throughout, `nbar = 4n + 2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::integrands::Params;

/// `3 * 2^{-2/3}`, the constant in the cube-root exponents.
pub fn cube_root_constant() -> f64 {
    3.0 * 2f64.powf(-2.0 / 3.0)
}

fn nbar(n: usize) -> f64 {
    4.0 * n as f64 + 2.0
}

/// Principal poles of `f1` (`z_I`, `z_II`) and `f2` (`z_III`, `z_IV`) in the
/// upper half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSet {
    pub z_i: Complex64,
    pub z_ii: Complex64,
    pub z_iii: Complex64,
    pub z_iv: Complex64,
}

pub fn poles(lambda: f64, p: &Params) -> PoleSet {
    let a = p.alpha();
    let ln_sl = p.ln_scaled(lambda);
    PoleSet {
        z_i: Complex64::new(a * ln_sl, a * PI),
        z_ii: Complex64::new(0.0, (1.0 - a) * PI),
        z_iii: Complex64::new(-(a + 1.0) * ln_sl, (a + 1.0) * PI),
        z_iv: Complex64::new(0.0, (1.0 - a) * (a + 1.0) * PI / a),
    }
}

/// `(gamma+, gamma-)` with `gamma+ * gamma- = pi`.
pub fn gamma_pm(lambda: f64, p: &Params) -> (f64, f64) {
    let l = p.ln_scaled(lambda);
    let r = l.hypot(PI);
    // Evaluate the non-cancelling root directly, the other through the product.
    if l >= 0.0 {
        let plus = (r + l).sqrt();
        (plus, PI / plus)
    } else {
        let minus = (r - l).sqrt();
        (PI / minus, minus)
    }
}

/// Threshold above which the `z_I` pole governs the first integral.
pub fn lambda_bar(p: &Params) -> f64 {
    let a = p.alpha();
    ((2.0 * a - 1.0) * PI / (2.0 * a * (1.0 - a)) - p.h().ln() / a).exp()
}

/// Threshold below which the `z_III` pole governs the second integral.
pub fn lambda_bbar(p: &Params) -> f64 {
    let a = p.alpha();
    (-(2.0 * a - 1.0) * PI / (2.0 * a * (1.0 - a)) - p.h().ln() / a)
        .exp()
        .max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstRegime {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondRegime {
    III,
    IV,
}

impl std::fmt::Display for FirstRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FirstRegime::I => "I",
            FirstRegime::II => "II",
        })
    }
}

impl std::fmt::Display for SecondRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SecondRegime::III => "III",
            SecondRegime::IV => "IV",
        })
    }
}

/// All four modulus estimates at one `(lambda, n)` and the pole regime that
/// applies to each integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateBreakdown {
    pub q_i: f64,
    pub q_ii: f64,
    pub q_iii: f64,
    pub q_iv: f64,
    pub regime1: FirstRegime,
    pub regime2: SecondRegime,
}

impl EstimateBreakdown {
    /// Estimate of `|e_n^(1)(lambda)|` for the selected regime.
    pub fn first(&self) -> f64 {
        match self.regime1 {
            FirstRegime::I => self.q_i,
            FirstRegime::II => self.q_ii,
        }
    }

    /// Estimate of `|e_n^(2)(lambda)|` for the selected regime.
    pub fn second(&self) -> f64 {
        match self.regime2 {
            SecondRegime::III => self.q_iii,
            SecondRegime::IV => self.q_iv,
        }
    }
}

pub fn q_estimates(lambda: f64, n: usize, p: &Params) -> EstimateBreakdown {
    let a = p.alpha();
    let nb = nbar(n);
    let ln_sl = p.ln_scaled(lambda);
    let (gp, gm) = gamma_pm(lambda, p);
    // h lambda^alpha = (h^{1/alpha} lambda)^alpha
    let u = (a * ln_sl).exp();
    let sl = ln_sl.exp();
    let e_ia = Complex64::from_polar(1.0, a * PI);

    let den_i = (e_ia.conj().powi(2) + 2.0 * u * p.cos_api() * e_ia.conj() + u * u).norm();
    let q_i = 4.0 * PI * a * u * (-(2.0 * a * nb).sqrt() * gm).exp() / den_i;

    let den_ii = (Complex64::new(1.0, 0.0) - Complex64::from_polar(sl, -PI / a)).norm();
    let q_ii = 2.0 * PI * (-(2.0 * (1.0 - a) * PI * nb).sqrt()).exp() / (p.sin_api() * den_ii);

    let den_iii = (1.0 + 2.0 * p.cos_api() * e_ia * u + e_ia.powi(2) * u * u).norm();
    let q_iii = 4.0 * PI * a * u * (-(2.0 * (a + 1.0) * nb).sqrt() * gp).exp() / den_iii;

    let den_iv = (Complex64::from_polar(1.0, (1.0 - a) * PI / a) + sl).norm();
    let q_iv = 2.0 * PI * (-(2.0 * nb * (1.0 - a) * (a + 1.0) * PI / a).sqrt()).exp()
        / (p.sin_api() * den_iv);

    EstimateBreakdown {
        q_i,
        q_ii,
        q_iii,
        q_iv,
        regime1: if lambda > lambda_bar(p) {
            FirstRegime::I
        } else {
            FirstRegime::II
        },
        regime2: if lambda < lambda_bbar(p) {
            SecondRegime::III
        } else {
            SecondRegime::IV
        },
    }
}

/// Approximate maxima over `lambda` of the four scalar estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GSequences {
    pub g_i: f64,
    pub g_ii: f64,
    pub g_iii: f64,
    pub g_iv: f64,
}

pub fn g_sequences(n: usize, p: &Params) -> GSequences {
    let a = p.alpha();
    let nb = nbar(n);
    let c = cube_root_constant();
    let trig = 2.0 * PI / p.sin_api();
    GSequences {
        g_i: 4.0 * PI * a * (-c * (nb * a * a * PI * PI).cbrt()).exp(),
        g_ii: trig * (-(2.0 * (1.0 - a) * PI * nb).sqrt()).exp(),
        g_iii: 4.0 * PI * a * (-c * (a * (a + 1.0) * PI * PI * nb).cbrt()).exp(),
        g_iv: trig * (-(2.0 * nb * (1.0 - a) * (a + 1.0) * PI / a).sqrt()).exp(),
    }
}

/// Crossover rule size beyond which `g_I` dominates `g_II`.
pub fn n_star(p: &Params) -> f64 {
    let a = p.alpha();
    cube_root_constant().powi(6) / 32.0 * a.powi(4) / (1.0 - a).powi(3) * PI - 0.5
}

/// Crossover rule size beyond which `g_III` dominates `g_IV`.
pub fn n_star_star(p: &Params) -> f64 {
    let a = p.alpha();
    cube_root_constant().powi(6) / 32.0 * a.powi(5) / ((1.0 - a).powi(3) * (1.0 + a)) * PI - 0.5
}

pub fn eps1(n: usize, p: &Params) -> f64 {
    let g = g_sequences(n, p);
    if n as f64 >= n_star(p) {
        g.g_i
    } else {
        g.g_ii
    }
}

pub fn eps2(m: usize, p: &Params) -> f64 {
    let g = g_sequences(m, p);
    if m as f64 >= n_star_star(p) {
        g.g_iii
    } else {
        g.g_iv
    }
}

/// Predicted operator-norm error of the method with `n` nodes per integral.
pub fn standard_estimate(n: usize, p: &Params) -> f64 {
    p.prefactor() * eps1(n, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(alpha: f64, h: f64) -> Params {
        Params::new(alpha, h).unwrap()
    }

    #[test]
    fn poles_vanish_on_scaled_unit() {
        let p = params(0.3, 0.01);
        let lambda = 1.0 / p.h_pow();
        let z = poles(lambda, &p);
        assert!(z.z_i.re.abs() < 1e-12);
        assert!(z.z_iii.re.abs() < 1e-12);
    }

    #[test]
    fn coincident_poles_at_half() {
        let z = poles(1.0, &params(0.5, 1.0));
        assert_relative_eq!(z.z_i.im, PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(z.z_ii.im, PI / 2.0, max_relative = 1e-15);
        assert_eq!(z.z_i.re, 0.0);
    }

    #[test]
    fn pole_values() {
        let (a, h, lambda) = (0.3, 0.01, 1e4);
        let z = poles(lambda, &params(a, h));
        let l = (h.powf(1.0 / a) * lambda).ln();
        assert_relative_eq!(z.z_i.re, a * l, max_relative = 1e-13);
        assert_relative_eq!(z.z_iii.re, -(a + 1.0) * l, max_relative = 1e-13);
        assert_relative_eq!(z.z_iii.im, 1.3 * PI, max_relative = 1e-15);
        assert_relative_eq!(z.z_iv.im, 0.7 * 1.3 * PI / 0.3, max_relative = 1e-14);
    }

    #[test]
    fn gamma_examples() {
        let p = params(0.5, 0.1);
        let (gp, gm) = gamma_pm(100.0, &p);
        assert_relative_eq!(gp, PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gm, PI.sqrt(), max_relative = 1e-14);

        let p = params(0.5, 0.01);
        let l: f64 = (1e-4f64 * 1e8).ln();
        let r = (l * l + PI * PI).sqrt();
        let (gp, gm) = gamma_pm(1e8, &p);
        assert_relative_eq!(gp, (r + l).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gm, (r - l).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn lambda_thresholds() {
        assert_relative_eq!(lambda_bar(&params(0.5, 0.01)), 1e4, max_relative = 1e-12);
        assert_relative_eq!(lambda_bbar(&params(0.5, 0.01)), 1e4, max_relative = 1e-12);
        assert_eq!(lambda_bbar(&params(0.5, 1.0)), 1.0);
        let p = params(0.3, 0.01);
        assert!(lambda_bar(&p) < 1.0 / p.h_pow());
        let expected = ((0.6f64 - 1.0) * PI / (0.6 * 0.7)).exp() * 0.01f64.powf(-1.0 / 0.3);
        assert_relative_eq!(lambda_bar(&p), expected, max_relative = 1e-12);
        let expected = (-(1.5f64 - 1.0) * PI / (1.5 * 0.25)).exp().max(1.0);
        assert_relative_eq!(
            lambda_bbar(&params(0.75, 1.0)),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn regimes_follow_thresholds() {
        let p = params(0.5, 0.01);
        let above = q_estimates(2e4, 10, &p);
        assert_eq!(above.regime1, FirstRegime::I);
        assert_eq!(above.regime2, SecondRegime::IV);
        let below = q_estimates(5e3, 10, &p);
        assert_eq!(below.regime1, FirstRegime::II);
        assert_eq!(below.regime2, SecondRegime::III);
        assert_eq!(below.first(), below.q_ii);
        assert_eq!(below.second(), below.q_iii);
    }

    #[test]
    fn q_values_direct() {
        // q_II and q_IV written out with real arithmetic only.
        let (a, h, lambda, n) = (0.3f64, 0.01f64, 1e3f64, 30usize);
        let p = params(a, h);
        let nb = 4.0 * n as f64 + 2.0;
        let sl = h.powf(1.0 / a) * lambda;
        let den2 = ((1.0 - sl * (PI / a).cos()).powi(2) + (sl * (PI / a).sin()).powi(2)).sqrt();
        let q2 = 2.0 * PI * (-(2.0 * (1.0 - a) * PI * nb).sqrt()).exp() / ((a * PI).sin() * den2);
        let th = (1.0 - a) * PI / a;
        let den4 = ((th.cos() + sl).powi(2) + th.sin().powi(2)).sqrt();
        let q4 = 2.0 * PI * (-(2.0 * nb * (1.0 - a) * (a + 1.0) * PI / a).sqrt()).exp()
            / ((a * PI).sin() * den4);
        let q = q_estimates(lambda, n, &p);
        assert_relative_eq!(q.q_ii, q2, max_relative = 1e-12);
        assert_relative_eq!(q.q_iv, q4, max_relative = 1e-12);
        // The q_I denominator factors as (1 + u)|u + e^{-2 i alpha pi}|.
        let u = h * lambda.powf(a);
        let den1 =
            (1.0 + u) * ((u + (2.0 * a * PI).cos()).powi(2) + (2.0 * a * PI).sin().powi(2)).sqrt();
        let (_, gm) = gamma_pm(lambda, &p);
        let q1 = 4.0 * PI * a * u * (-(2.0 * a * nb).sqrt() * gm).exp() / den1;
        assert_relative_eq!(q.q_i, q1, max_relative = 1e-12);
    }

    #[test]
    fn double_pole_is_finite() {
        let p = params(0.5, 0.1);
        let q = q_estimates(lambda_bar(&p), 30, &p);
        assert!(q.q_i.is_finite() && q.q_ii.is_finite());
    }

    #[test]
    fn g_i_reference_value() {
        let g = g_sequences(50, &params(0.5, 0.01));
        let expo = 3.0 * 2f64.powf(-2.0 / 3.0) * (202.0 * 0.25 * PI * PI).powf(1.0 / 3.0);
        assert_relative_eq!(g.g_i, 2.0 * PI * (-expo).exp(), max_relative = 1e-13);
        assert!((g.g_i - 1.9e-6).abs() < 0.15e-6);
        assert_relative_eq!(
            standard_estimate(50, &params(0.5, 0.01)),
            2.0 / PI * g.g_i,
            max_relative = 1e-14
        );
        assert!((standard_estimate(50, &params(0.5, 0.01)) - 1.2e-6).abs() < 0.1e-6);
    }

    #[test]
    fn crossovers() {
        assert!((n_star(&params(0.47, 1.0)) - 1.0).abs() < 0.05);
        assert!((n_star_star(&params(0.55, 1.0)) - 1.0).abs() < 0.1);
        assert!((n_star(&params(0.6, 1.0)) - 8.56).abs() < 0.01);
        assert!((n_star_star(&params(0.6, 1.0)) - 2.90).abs() < 0.01);
        assert_relative_eq!(cube_root_constant(), 1.88988, max_relative = 1e-5);
    }

    #[test]
    fn eps_selection() {
        // n* < 1 below alpha ~ 0.47, so g_I is selected for every n.
        let p = params(0.3, 0.01);
        for n in [1, 5, 40, 200] {
            let g = g_sequences(n, &p);
            assert_eq!(eps1(n, &p), g.g_i);
            assert!(g.g_i > g.g_ii);
        }
        let p = params(0.6, 0.01);
        assert_eq!(eps1(20, &p), g_sequences(20, &p).g_i);
        assert_eq!(eps1(8, &p), g_sequences(8, &p).g_ii);
        assert_eq!(eps2(2, &p), g_sequences(2, &p).g_iv);
        assert_eq!(eps2(3, &p), g_sequences(3, &p).g_iii);
    }

    #[test]
    fn crossover_matches_sequences() {
        // The analytic crossover drops the prefactors, so allow one index.
        let p = params(0.6, 0.01);
        let ns = n_star(&p).ceil() as usize;
        let actual = (1..200)
            .find(|&n| {
                let g = g_sequences(n, &p);
                g.g_i >= g.g_ii
            })
            .unwrap();
        assert!(actual.abs_diff(ns) <= 1, "actual {actual} vs {ns}");
    }

    #[test]
    fn second_integral_sequences_are_smaller() {
        let p = params(0.7, 0.01);
        for n in 1..=60 {
            let g = g_sequences(n, &p);
            assert!(g.g_iii.max(g.g_iv) < g.g_i.max(g.g_ii));
        }
    }

    proptest! {
        #[test]
        fn gamma_product_is_pi(alpha in 0.02f64..0.98, log_h in -4.0f64..1.0, log_l in 0.0f64..16.0) {
            let p = params(alpha, 10f64.powf(log_h));
            let (gp, gm) = gamma_pm(10f64.powf(log_l), &p);
            prop_assert!(gp > 0.0 && gm > 0.0);
            prop_assert!((gp * gm - PI).abs() <= 1e-12 * PI);
        }

        #[test]
        fn sequences_decrease(alpha in 0.02f64..0.98, n in 1usize..400) {
            let p = params(alpha, 0.01);
            let (a, b) = (g_sequences(n, &p), g_sequences(n + 1, &p));
            prop_assert!(b.g_i < a.g_i && b.g_ii < a.g_ii && b.g_iii < a.g_iii && b.g_iv < a.g_iv);
            prop_assert!(standard_estimate(n + 1, &p) < standard_estimate(n, &p));
            prop_assert!(n_star_star(&p) < n_star(&p));
        }

        #[test]
        fn q_ii_decreases_in_n(alpha in 0.02f64..0.98, log_l in 0.0f64..16.0, n in 1usize..200) {
            let p = params(alpha, 0.05);
            let l = 10f64.powf(log_l);
            prop_assert!(q_estimates(l, n + 1, &p).q_ii < q_estimates(l, n, &p).q_ii);
        }
    }
}
