//! Applying the quadrature-based rational approximation to an operator.
//!
//! Every Laguerre node becomes one shifted solve `(sigma I + tau L) y = b`
//! scaled by a positive factor. Solves run concurrently; their results are
//! buffered and reduced in a fixed order (ascending nodes, first integral then
//! second) so the output does not depend on the thread count.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrands::Params;
use crate::laguerre::{gauss_laguerre, QuadratureRule};
use crate::planner::{balance_m, make_plan_with_rules};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integral {
    First,
    Second,
}

impl fmt::Display for Integral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integral::First => "first",
            Integral::Second => "second",
        })
    }
}

/// Which variant of the method to run, parameterised by the first rule size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `n` nodes for both integrals.
    Standard(usize),
    /// `n` nodes for the first integral, `m = balance_m(n)` for the second.
    Balanced(usize),
    /// Balanced rules truncated to the plan's `k_n` and `k_m` nodes.
    Truncated(usize),
}

impl Mode {
    pub fn n(&self) -> usize {
        match *self {
            Mode::Standard(n) | Mode::Balanced(n) | Mode::Truncated(n) => n,
        }
    }
}

/// Coefficients of one node's shifted system and the factor applied to its
/// solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedSystem {
    pub sigma: f64,
    pub tau: f64,
    pub scale: f64,
}

pub fn node_system(x: f64, w: f64, which: Integral, p: &Params) -> ShiftedSystem {
    let a = p.alpha();
    match which {
        Integral::First => {
            let e = (-x).exp();
            ShiftedSystem {
                sigma: 1.0,
                tau: (-x / a).exp() * p.h_pow(),
                scale: w / (e * e + 2.0 * e * p.cos_api() + 1.0),
            }
        }
        Integral::Second => {
            let a1 = a + 1.0;
            let e = (-a * x / a1).exp();
            ShiftedSystem {
                sigma: (-x / a1).exp(),
                tau: p.h_pow(),
                scale: w * (a / a1) / (1.0 + 2.0 * p.cos_api() * e + e * e),
            }
        }
    }
}

/// Shifted solves supplied by the caller, for operators the crate does not
/// store itself (sparse matrices, matrix-free operators, ...).
pub trait ShiftedSolver: Send + Sync {
    fn dimension(&self) -> usize;

    /// Solves `(sigma I + tau L) y = b`.
    fn solve_shifted(
        &self,
        sigma: f64,
        tau: f64,
        b: &[f64],
    ) -> std::result::Result<Vec<f64>, String>;
}

/// Self-adjoint positive operator with spectrum in `[1, inf)`.
#[derive(Clone)]
pub enum OperatorHandle {
    /// Diagonal entries `>= 1`; `+inf` is allowed and maps to a zero output.
    Diagonal(Vec<f64>),
    DenseSpd(DMatrix<f64>),
    External(Arc<dyn ShiftedSolver>),
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorHandle::Diagonal(d) => f.debug_tuple("Diagonal").field(&d.len()).finish(),
            OperatorHandle::DenseSpd(a) => f.debug_tuple("DenseSpd").field(&a.shape()).finish(),
            OperatorHandle::External(s) => f.debug_tuple("External").field(&s.dimension()).finish(),
        }
    }
}

impl OperatorHandle {
    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("operator must have positive dimension"));
        }
        if let Some((i, d)) = entries.iter().enumerate().find(|(_, d)| !(**d >= 1.0)) {
            return Err(Error::invalid(format!(
                "diagonal entry {i} is {d}; entries must be >= 1"
            )));
        }
        Ok(OperatorHandle::Diagonal(entries))
    }

    /// Dense symmetric matrix. Symmetry is checked here, positive
    /// definiteness by the factorizations during application.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r == 0 || r != c {
            return Err(Error::invalid(format!(
                "matrix must be square and non-empty, got {r}x{c}"
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..r {
            for j in (i + 1)..r {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(OperatorHandle::DenseSpd(matrix))
    }

    pub fn external(solver: Arc<dyn ShiftedSolver>) -> Result<Self> {
        if solver.dimension() == 0 {
            return Err(Error::invalid("operator must have positive dimension"));
        }
        Ok(OperatorHandle::External(solver))
    }

    pub fn dimension(&self) -> usize {
        match self {
            OperatorHandle::Diagonal(d) => d.len(),
            OperatorHandle::DenseSpd(a) => a.nrows(),
            OperatorHandle::External(s) => s.dimension(),
        }
    }

    fn solve(&self, sys: &ShiftedSystem, b: &[f64]) -> std::result::Result<Vec<f64>, String> {
        match self {
            OperatorHandle::Diagonal(d) => Ok(d
                .iter()
                .zip(b)
                .map(|(&di, &bi)| diagonal_solve(sys, di, bi))
                .collect()),
            OperatorHandle::DenseSpd(a) => {
                let n = a.nrows();
                let shifted = a * sys.tau + DMatrix::<f64>::identity(n, n) * sys.sigma;
                let chol = Cholesky::new(shifted)
                    .ok_or_else(|| "shifted matrix is not positive definite".to_string())?;
                Ok(chol
                    .solve(&DVector::from_column_slice(b))
                    .as_slice()
                    .to_vec())
            }
            OperatorHandle::External(s) => {
                let y = s.solve_shifted(sys.sigma, sys.tau, b)?;
                if y.len() != b.len() {
                    return Err(format!(
                        "solver returned {} entries, expected {}",
                        y.len(),
                        b.len()
                    ));
                }
                Ok(y)
            }
        }
    }
}

fn diagonal_solve(sys: &ShiftedSystem, d: f64, b: f64) -> f64 {
    if d.is_infinite() {
        return 0.0;
    }
    b / (sys.sigma + sys.tau * d)
}

/// Node systems of both integrals for a mode, each in ascending node order.
#[derive(Debug, Clone)]
pub struct NodeSystems {
    pub first: Vec<ShiftedSystem>,
    pub second: Vec<ShiftedSystem>,
}

impl NodeSystems {
    pub fn inversions(&self) -> usize {
        self.first.len() + self.second.len()
    }
}

fn systems_from(
    rule: &QuadratureRule,
    keep: usize,
    which: Integral,
    p: &Params,
) -> Vec<ShiftedSystem> {
    rule.iter()
        .take(keep)
        .map(|(x, w)| node_system(x, w, which, p))
        .collect()
}

pub fn node_systems(p: &Params, mode: Mode) -> Result<NodeSystems> {
    let n = mode.n();
    if n == 0 {
        return Err(Error::invalid("rule size must be positive"));
    }
    let (first_rule, second_rule, k1, k2) = match mode {
        Mode::Standard(_) => {
            let rule = gauss_laguerre(n)?;
            (rule.clone(), rule, n, n)
        }
        Mode::Balanced(_) => {
            let m = balance_m(n, p);
            (gauss_laguerre(n)?, gauss_laguerre(m)?, n, m)
        }
        Mode::Truncated(_) => {
            let planned = make_plan_with_rules(n, p)?;
            let (k_n, k_m) = (planned.plan.k_n, planned.plan.k_m);
            (planned.first, planned.second, k_n, k_m)
        }
    };
    Ok(NodeSystems {
        first: systems_from(&first_rule, k1, Integral::First, p),
        second: systems_from(&second_rule, k2, Integral::Second, p),
    })
}

/// The two scaled quadrature sums `(I1_n, I2_m)` for an operator, before the
/// `sin(alpha pi)/(alpha pi)` prefactor.
pub fn integral_sums(
    op: &OperatorHandle,
    b: &[f64],
    systems: &NodeSystems,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if b.len() != op.dimension() {
        return Err(Error::invalid(format!(
            "right-hand side has {} entries, operator dimension is {}",
            b.len(),
            op.dimension()
        )));
    }
    let sum = |which: Integral, list: &[ShiftedSystem]| -> Result<Vec<f64>> {
        let solves: Vec<std::result::Result<Vec<f64>, String>> =
            list.par_iter().map(|sys| op.solve(sys, b)).collect();
        let mut acc = vec![0.0; b.len()];
        for (node, (sys, y)) in list.iter().zip(solves).enumerate() {
            let y = y.map_err(|reason| Error::Operator {
                node: node + 1,
                integral: which,
                reason,
            })?;
            for (a, yi) in acc.iter_mut().zip(y) {
                *a += sys.scale * yi;
            }
        }
        Ok(acc)
    };
    Ok((
        sum(Integral::First, &systems.first)?,
        sum(Integral::Second, &systems.second)?,
    ))
}

/// Approximates `(I + h L^alpha)^{-1} b`.
pub fn apply_resolvent(op: &OperatorHandle, b: &[f64], p: &Params, mode: Mode) -> Result<Vec<f64>> {
    let systems = node_systems(p, mode)?;
    apply_with_systems(op, b, p, &systems)
}

/// As [`apply_resolvent`] with precomputed node systems.
pub fn apply_with_systems(
    op: &OperatorHandle,
    b: &[f64],
    p: &Params,
    systems: &NodeSystems,
) -> Result<Vec<f64>> {
    let (first, second) = integral_sums(op, b, systems)?;
    Ok(first
        .into_iter()
        .zip(second)
        .map(|(a, c)| p.prefactor() * (a + c))
        .collect())
}

/// Scalar version of [`apply_resolvent`] on the `1 x 1` operator `[lambda]`.
pub fn scalar_approx(lambda: f64, p: &Params, mode: Mode) -> Result<f64> {
    let op = OperatorHandle::diagonal(vec![lambda])?;
    Ok(apply_resolvent(&op, &[1.0], p, mode)?[0])
}

/// Per-integral scalar sums `(I1, I2)` at `lambda`.
pub fn scalar_integral_sums(lambda: f64, systems: &NodeSystems) -> Result<(f64, f64)> {
    let op = OperatorHandle::diagonal(vec![lambda])?;
    let (a, b) = integral_sums(&op, &[1.0], systems)?;
    Ok((a[0], b[0]))
}
