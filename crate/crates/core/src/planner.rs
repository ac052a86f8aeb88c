//! Node budgets: balancing the second rule size against the first, truncating
//! both rules where the exponential weight makes the tail negligible, and the
//! combined plan that drives the truncated method.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimates::{eps1, eps2, g_sequences, n_star, n_star_star};
use crate::integrands::{bounds, Params};
use crate::laguerre::{gauss_laguerre, truncation_index, QuadratureRule, Truncation};

// Absorbs rounding in formulas that hit an integer exactly (e.g. 4.5 - 0.5).
const ROUNDING_SLACK: f64 = 1e-9;

/// Second-integral rule size that equalises the two error contributions.
///
/// The value is rounded up and clamped to `[1, n]`.
pub fn balance_m(n: usize, p: &Params) -> usize {
    if n == 0 {
        return 1;
    }
    let raw = balance_m_raw(n, p);
    let m = (raw - ROUNDING_SLACK).ceil();
    if m.is_nan() || m < 1.0 {
        1
    } else {
        (m as usize).min(n)
    }
}

/// Unrounded balancing formula.
pub fn balance_m_raw(n: usize, p: &Params) -> f64 {
    let a = p.alpha();
    let nf = n as f64;
    if nf <= n_star_star(p) || nf > n_star(p) {
        a * (2.0 * nf + 1.0) / (2.0 * (a + 1.0)) - 0.5
    } else {
        let inner = 2.0 * ((2.0 * nf + 1.0) * (1.0 - a) * PI).sqrt() + (2.0 * a * p.sin_api()).ln();
        inner.powi(3) / (27.0 * (a + 1.0) * a * PI * PI) - 0.5
    }
}

/// Truncation thresholds `(s1, s2)`: beyond `s_i` the weight tail
/// `K_i e^{-s_i}` falls below the quadrature error estimate.
pub fn thresholds(n: usize, m: usize, p: &Params) -> (f64, f64) {
    let (k1, k2) = bounds(p);
    let s1 = -(eps1(n, p) / k1).ln();
    let s2 = -(eps2(m, p) / k2).ln();
    (s1.max(0.0), s2.max(0.0))
}

fn floor_clamped(value: f64, upper: usize) -> usize {
    let v = (value + ROUNDING_SLACK).floor();
    if v.is_nan() || v < 1.0 {
        1
    } else {
        (v as usize).min(upper)
    }
}

/// Closed-form approximation of the first truncation index.
pub fn analytic_j_n(n: usize, p: &Params) -> usize {
    let a = p.alpha();
    let nf = n as f64;
    let raw = if nf <= n_star(p) {
        2.0 * (1.0 - a).powf(0.25) * (2.0 * nf / PI).powf(0.75)
    } else {
        2.0 * 3f64.sqrt() * (a * nf * nf / (PI * PI)).cbrt()
    };
    floor_clamped(raw, n.max(1))
}

/// Closed-form approximation of the second truncation index, or `None` when
/// the bracketed term is negative (large `h`).
pub fn analytic_j_m_raw(m: usize, p: &Params) -> Option<usize> {
    let a = p.alpha();
    let mf = m as f64;
    let ln_k2 = bounds(p).1.ln();
    let growth = if mf <= n_star_star(p) {
        (8.0 * mf * (1.0 - a) * (a + 1.0) * PI / a).sqrt()
    } else {
        3.0 * ((a + 1.0) * a * PI * PI * mf).cbrt()
    };
    let bracket = ln_k2 + growth;
    if bracket < 0.0 {
        return None;
    }
    Some(floor_clamped(
        (4.0 * mf / (PI * PI) * bracket).sqrt(),
        m.max(1),
    ))
}

/// `(j_n, j_m)`. A negative bracket in the `j_m` formula falls back to the
/// numeric truncation index on the `m`-point rule.
pub fn analytic_j(n: usize, m: usize, p: &Params) -> Result<(usize, usize)> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("rule sizes must be positive"));
    }
    let j_n = analytic_j_n(n, p);
    let j_m = match analytic_j_m_raw(m, p) {
        Some(j) => j,
        None => {
            let rule = gauss_laguerre(m)?;
            truncation_index(&rule, thresholds(n, m, p).1)?.index
        }
    };
    Ok((j_n, j_m))
}

/// Node budget of the balanced and truncated method for a given `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub n: usize,
    pub m: usize,
    pub k_n: usize,
    pub k_m: usize,
    pub j_n: usize,
    pub j_m: usize,
    pub s1: f64,
    pub s2: f64,
    /// Truncation of the first rule was vacuous (no node reached `s1`).
    pub kept_all_n: bool,
    pub kept_all_m: bool,
    pub predicted_error: f64,
    pub inversions: usize,
}

/// A plan together with the two rules it indexes into.
#[derive(Debug, Clone)]
pub struct PlannedRules {
    pub plan: Plan,
    pub first: QuadratureRule,
    pub second: QuadratureRule,
}

pub fn make_plan(n: usize, p: &Params) -> Result<Plan> {
    Ok(make_plan_with_rules(n, p)?.plan)
}

pub fn make_plan_with_rules(n: usize, p: &Params) -> Result<PlannedRules> {
    if n == 0 {
        return Err(Error::invalid("rule size must be positive"));
    }
    let m = balance_m(n, p);
    let first = gauss_laguerre(n)?;
    let second = gauss_laguerre(m)?;
    let (s1, s2) = thresholds(n, m, p);
    let Truncation {
        index: k_n,
        kept_all: kept_all_n,
    } = truncation_index(&first, s1)?;
    let Truncation {
        index: k_m,
        kept_all: kept_all_m,
    } = truncation_index(&second, s2)?;
    let j_n = analytic_j_n(n, p);
    let j_m = analytic_j_m_raw(m, p).unwrap_or(k_m);
    let plan = Plan {
        n,
        m,
        k_n,
        k_m,
        j_n,
        j_m,
        s1,
        s2,
        kept_all_n,
        kept_all_m,
        predicted_error: truncated_estimate(n, p),
        inversions: k_n + k_m,
    };
    Ok(PlannedRules {
        plan,
        first,
        second,
    })
}

/// Smallest `n` (up to `max_n`) whose plan predicts an error `<= tol`.
pub fn plan_for_tolerance(tol: f64, max_n: usize, p: &Params) -> Result<Plan> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    for n in 1..=max_n {
        let plan = make_plan(n, p)?;
        if plan.predicted_error <= tol {
            return Ok(plan);
        }
    }
    Err(Error::invalid(format!(
        "tolerance {tol} not reached with n <= {max_n}"
    )))
}

/// Estimated error of the balanced method (`n + m` inversions).
pub fn balanced_estimate(n: usize, p: &Params) -> f64 {
    let g = g_sequences(n, p);
    2.0 * p.prefactor() * g.g_i.max(g.g_ii)
}

/// Estimated error of the balanced and truncated method.
pub fn truncated_estimate(n: usize, p: &Params) -> f64 {
    4.0 * p.prefactor() * eps1(n, p)
}

/// Asymptotic error of the balanced and the truncated method as functions of
/// the total number of inversions `q`.
pub fn asymptotic_estimates(q: usize, p: &Params) -> (f64, f64) {
    let a = p.alpha();
    let qf = q as f64;
    let sin = p.sin_api();
    let balanced =
        8.0 * sin * (-3.0 * (qf * (a + 1.0) / (2.0 * a + 1.0) * a * a * PI * PI).cbrt()).exp();
    let rate =
        3f64.powf(0.75) * 2f64.powf(-0.5) * PI * a.sqrt() / (1.0 + (a / (a + 1.0)).sqrt()).sqrt();
    let truncated = 16.0 * sin * (-rate * qf.sqrt()).exp();
    (balanced, truncated)
}

/// Asymptotic error of the un-balanced method with `q = 2n` inversions.
pub fn asymptotic_standard(q: usize, p: &Params) -> f64 {
    let a = p.alpha();
    4.0 * p.sin_api() * (-3.0 * (0.5 * q as f64 * a * a * PI * PI).cbrt()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TABLE_N: [usize; 7] = [5, 10, 15, 20, 25, 50, 100];

    fn params(alpha: f64, h: f64) -> Params {
        Params::new(alpha, h).unwrap()
    }

    #[test]
    fn balance_table_alpha_06() {
        let p = params(0.6, 0.01);
        let m: Vec<usize> = TABLE_N.iter().map(|&n| balance_m(n, &p)).collect();
        assert_eq!(m, vec![2, 4, 6, 8, 10, 19, 38]);
    }

    #[test]
    fn balance_raw_value() {
        assert_relative_eq!(
            balance_m_raw(50, &params(0.6, 0.01)),
            18.4375,
            max_relative = 1e-12
        );
    }

    #[test]
    fn balance_clamps() {
        for a in [0.1, 0.5, 0.9] {
            assert_eq!(balance_m(1, &params(a, 0.01)), 1);
        }
    }

    #[test]
    fn threshold_examples() {
        let p = params(0.75, 3.0);
        let g = g_sequences(5, &p);
        let (s1, _) = thresholds(5, 2, &p);
        assert_relative_eq!(g.g_ii, 0.0249, max_relative = 5e-3);
        assert_relative_eq!(s1, -g.g_ii.ln(), max_relative = 1e-14);
        assert!((s1 - 3.69).abs() < 0.01);

        let p = params(0.75, 0.01);
        let (_, s2) = thresholds(5, 2, &p);
        let k2 = 0.75 / 1.75 * 0.01f64.powf(-1.0 / 0.75);
        assert_relative_eq!(s2, -(eps2(2, &p) / k2).ln(), max_relative = 1e-12);
    }

    #[test]
    fn threshold_clamps_at_zero() {
        // With h large K2 < eps2 and the raw threshold would be negative.
        let p = params(0.3, 50.0);
        let (_, s2) = thresholds(3, 1, &p);
        assert_eq!(s2, 0.0);
    }

    #[test]
    fn analytic_j_raw_first_entry() {
        let raw = 2.0 * 0.25f64.powf(0.25) * (10.0 / PI).powf(0.75);
        assert!((raw - 3.37).abs() < 0.01);
        assert_eq!(analytic_j_n(5, &params(0.75, 0.01)), 3);
    }

    #[test]
    fn analytic_j_clamps() {
        let p = params(0.75, 0.01);
        assert_eq!(analytic_j(1, 1, &p).unwrap().0, 1);
        assert!(analytic_j(0, 1, &p).is_err());
    }

    #[test]
    fn negative_bracket_falls_back() {
        let p = params(0.2, 20.0);
        assert!(analytic_j_m_raw(1, &p).is_none());
        let (_, j_m) = analytic_j(2, 1, &p).unwrap();
        assert_eq!(j_m, 1);
    }

    #[test]
    fn degenerate_plan() {
        let plan = make_plan(1, &params(0.5, 0.01)).unwrap();
        assert_eq!(
            (plan.n, plan.m, plan.k_n, plan.k_m, plan.j_n, plan.j_m),
            (1, 1, 1, 1, 1, 1)
        );
        assert_eq!(plan.inversions, 2);
    }

    #[test]
    fn balanced_estimate_doubles_standard() {
        let p = params(0.5, 0.01);
        let ratio = balanced_estimate(50, &p) / crate::estimates::standard_estimate(50, &p);
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-14);
        assert!((balanced_estimate(50, &p) - 2.5e-6).abs() < 0.3e-6);
    }

    #[test]
    fn asymptotic_speedup_constant() {
        for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let speed = (2.0 * a + 2.0) / (2.0 * a + 1.0);
            assert!(speed > 4.0 / 3.0 && speed < 2.0);
        }
    }

    #[test]
    fn asymptotic_values() {
        let p = params(0.5, 0.01);
        let (b, t) = asymptotic_estimates(60, &p);
        let expected_b = 8.0 * (-3.0 * (60.0 * 1.5 / 2.0 * 0.25 * PI * PI).powf(1.0 / 3.0)).exp();
        let rate = 3f64.powf(0.75) / 2f64.sqrt() * PI * 0.5f64.sqrt()
            / (1.0 + (1.0f64 / 3.0).sqrt()).sqrt();
        assert_relative_eq!(b, expected_b, max_relative = 1e-13);
        assert_relative_eq!(t, 16.0 * (-rate * 60f64.sqrt()).exp(), max_relative = 1e-13);
    }

    #[test]
    fn tolerance_loop() {
        let p = params(0.6, 0.01);
        assert_eq!(plan_for_tolerance(1.0, 10, &p).unwrap().n, 1);
        let plan = plan_for_tolerance(1e-6, 500, &p).unwrap();
        assert!(plan.predicted_error <= 1e-6);
        assert!(make_plan(plan.n - 1, &p).unwrap().predicted_error > 1e-6);
        assert!(plan_for_tolerance(1e-30, 3, &p).is_err());
    }

    proptest! {
        #[test]
        fn balance_invariants(alpha in 0.05f64..0.95, n in 1usize..=100) {
            let p = params(alpha, 0.01);
            let m = balance_m(n, &p);
            prop_assert!(m >= 1 && m <= n);
            prop_assert!(analytic_j_n(n, &p) <= n);
        }

        #[test]
        fn asymptotics_decrease(alpha in 0.05f64..0.95, q in 1usize..500) {
            let p = params(alpha, 0.01);
            let (b0, t0) = asymptotic_estimates(q, &p);
            let (b1, t1) = asymptotic_estimates(q + 1, &p);
            prop_assert!(b1 < b0 && t1 < t0);
        }
    }
}
