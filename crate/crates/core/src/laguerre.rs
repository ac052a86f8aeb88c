//! Gauss-Laguerre rules for the weight `e^{-x}` on `[0, inf)`.
//!
//! Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix of the
//! Laguerre polynomials (diagonal `2j - 1`, off-diagonal `j`), polished with
//! Newton steps on the three-term recurrence. Weights use the closed form
//! `w_j = x_j / (n L_{n-1}(x_j))^2`, evaluated in log space so that the
//! exponentially small weights keep full relative accuracy.

use crate::error::{Error, Result};

/// Largest accepted rule size.
pub const MAX_RULE_SIZE: usize = 10_000;

const NEWTON_TOL: f64 = 1e-30;
const NEWTON_MAX_ITER: usize = 8;
const QL_MAX_ITER: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Abscissae in strictly increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Applies the rule to `f`, summing in ascending node order.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Result of locating a truncation threshold among the nodes of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    /// 1-based count of nodes kept.
    pub index: usize,
    /// No node reached the threshold, so every node is kept.
    pub kept_all: bool,
}

/// Builds the `n`-point Gauss-Laguerre rule.
pub fn gauss_laguerre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_RULE_SIZE {
        return Err(Error::invalid(format!(
            "rule size must lie in [1, {MAX_RULE_SIZE}], got {n}"
        )));
    }

    let mut diag: Vec<f64> = (1..=n).map(|j| (2 * j - 1) as f64).collect();
    let mut off: Vec<f64> = (1..=n)
        .map(|j| if j < n { j as f64 } else { 0.0 })
        .collect();
    tridiagonal_eigenvalues(&mut diag, &mut off).map_err(|_| Error::NoConvergence(n))?;
    diag.sort_by(f64::total_cmp);

    let polished: Vec<Dd> = diag.iter().map(|&x| newton_polish(n, x)).collect();

    let ln_n = (n as f64).ln();
    let weights = polished
        .iter()
        .map(|&x| {
            let eval = laguerre_pair(n, x);
            let ln_x = x.hi.ln() + (x.lo / x.hi).ln_1p();
            (ln_x - 2.0 * ln_n - 2.0 * eval.ln_abs_prev()).exp()
        })
        .collect();
    let nodes = polished.iter().map(|x| x.to_f64()).collect();

    Ok(QuadratureRule { nodes, weights })
}

/// Smallest 1-based index `k` with `node_k >= s`.
///
/// When every node lies below `s` the whole rule is kept (`index = n`) and the
/// result is flagged with `kept_all`.
pub fn truncation_index(rule: &QuadratureRule, s: f64) -> Result<Truncation> {
    if !(s >= 0.0) {
        return Err(Error::invalid(format!(
            "truncation threshold must be non-negative, got {s}"
        )));
    }
    let below = rule.nodes.partition_point(|&x| x < s);
    Ok(if below == rule.n() {
        Truncation {
            index: rule.n(),
            kept_all: true,
        }
    } else {
        Truncation {
            index: below + 1,
            kept_all: false,
        }
    })
}

/// Unevaluated sum `hi + lo` carrying about 32 significant digits.
///
/// The three-term recurrence loses several digits near the smallest roots,
/// and the weight formula amplifies node errors there, so polishing and the
/// weight evaluation run in this extended format.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const fn new(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let r = Dd::renorm(s.hi, s.lo + t.hi);
        Dd::renorm(r.hi, r.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, err + (self.hi * o.lo + self.lo * o.hi))
    }

    fn mul_f(self, k: f64) -> Dd {
        let p = self.hi * k;
        let err = self.hi.mul_add(k, -p);
        Dd::renorm(p, err + self.lo * k)
    }

    fn div_f(self, k: f64) -> Dd {
        let q = self.hi / k;
        // Remainder of the leading quotient, then one correction term.
        let r = Dd::new(q).mul_f(k);
        let rem = self.sub(r);
        Dd::renorm(q, rem.hi / k)
    }

    fn scale(self, k: f64) -> Dd {
        Dd {
            hi: self.hi * k,
            lo: self.lo * k,
        }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `L_n(x)` and `L_{n-1}(x)` sharing a common scale factor `exp(ln_scale)`.
#[derive(Debug, Clone, Copy)]
struct LaguerrePair {
    cur: Dd,
    prev: Dd,
    ln_scale: f64,
}

impl LaguerrePair {
    fn ln_abs_prev(&self) -> f64 {
        // ln|hi + lo| = ln|hi| + ln(1 + lo/hi), with lo/hi below 1e-16.
        self.prev.hi.abs().ln() + (self.prev.lo / self.prev.hi).ln_1p() + self.ln_scale
    }
}

fn laguerre_pair(n: usize, x: Dd) -> LaguerrePair {
    const RESCALE_ABOVE: f64 = 1.0e150;
    // A power of two keeps the rescaling exact.
    let factor = 2f64.powi(-200);
    let mut prev = Dd::new(1.0);
    let mut cur = Dd::new(1.0).sub(x);
    let mut ln_scale = 0.0;
    for k in 1..n {
        let kf = k as f64;
        let coef = Dd::new(2.0 * kf + 1.0).sub(x);
        let next = coef.mul(cur).sub(prev.mul_f(kf)).div_f(kf + 1.0);
        prev = cur;
        cur = next;
        if cur.hi.abs() > RESCALE_ABOVE {
            prev = prev.scale(factor);
            cur = cur.scale(factor);
            ln_scale += 200.0 * std::f64::consts::LN_2;
        }
    }
    LaguerrePair {
        cur,
        prev,
        ln_scale,
    }
}

fn newton_polish(n: usize, start: f64) -> Dd {
    let nf = n as f64;
    let mut x = Dd::new(start);
    for _ in 0..NEWTON_MAX_ITER {
        let p = laguerre_pair(n, x);
        // x L_n'(x) = n (L_n(x) - L_{n-1}(x)); the common scale cancels.
        let dp = nf * p.cur.sub(p.prev).to_f64() / x.hi;
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p.cur.to_f64() / dp;
        let next = x.sub(Dd::new(step));
        if !(next.hi > 0.0) {
            break;
        }
        x = next;
        if step.abs() <= NEWTON_TOL * x.hi {
            break;
        }
    }
    x
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson-type shifts. `off[i]` couples rows `i` and `i + 1`; the last
/// entry is ignored. On return `diag` holds the (unsorted) eigenvalues.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> std::result::Result<(), ()> {
    let n = diag.len();
    if n < 2 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(());
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_point_rule() {
        let rule = gauss_laguerre(1).unwrap();
        assert_relative_eq!(rule.nodes()[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(rule.weights()[0], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn two_point_rule_matches_closed_form() {
        let rule = gauss_laguerre(2).unwrap();
        let r2 = 2f64.sqrt();
        assert_relative_eq!(rule.nodes()[0], 2.0 - r2, max_relative = 1e-14);
        assert_relative_eq!(rule.nodes()[1], 2.0 + r2, max_relative = 1e-14);
        assert_relative_eq!(rule.weights()[0], (2.0 + r2) / 4.0, max_relative = 1e-14);
        assert_relative_eq!(rule.weights()[1], (2.0 - r2) / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(gauss_laguerre(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            gauss_laguerre(MAX_RULE_SIZE + 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn first_moment_is_one() {
        for n in [1, 3, 7, 20, 64, 150] {
            let rule = gauss_laguerre(n).unwrap();
            assert_relative_eq!(rule.integrate(|x| x), 1.0, max_relative = 1e-12);
            assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn deterministic_output() {
        let a = gauss_laguerre(37).unwrap();
        let b = gauss_laguerre(37).unwrap();
        assert!(a
            .nodes()
            .iter()
            .zip(b.nodes())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a
            .weights()
            .iter()
            .zip(b.weights())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn truncation_examples() {
        let rule = gauss_laguerre(2).unwrap();
        let t = |s| truncation_index(&rule, s).unwrap();
        assert_eq!(
            t(0.0),
            Truncation {
                index: 1,
                kept_all: false
            }
        );
        assert_eq!(
            t(1.0),
            Truncation {
                index: 2,
                kept_all: false
            }
        );
        assert_eq!(
            t(100.0),
            Truncation {
                index: 2,
                kept_all: true
            }
        );
        assert!(truncation_index(&rule, -1.0).is_err());
        assert!(truncation_index(&rule, f64::NAN).is_err());
    }

    #[test]
    fn threshold_on_a_node_keeps_that_node() {
        let rule = gauss_laguerre(5).unwrap();
        let s = rule.nodes()[2];
        assert_eq!(truncation_index(&rule, s).unwrap().index, 3);
    }

    #[test]
    fn large_rule_stays_sorted_and_normalised() {
        let rule = gauss_laguerre(1000).unwrap();
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes()[0] > 0.0);
        let total: f64 = rule.weights().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ql_matches_known_spectrum() {
        // Second-difference matrix: eigenvalues 2 - 2 cos(k pi / (n + 1)).
        let n = 12;
        let mut d = vec![2.0; n];
        let mut e = vec![-1.0; n];
        tridiagonal_eigenvalues(&mut d, &mut e).unwrap();
        d.sort_by(f64::total_cmp);
        for (k, ev) in d.iter().enumerate() {
            let exact =
                2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_relative_eq!(*ev, exact, epsilon = 1e-13);
        }
    }
}
