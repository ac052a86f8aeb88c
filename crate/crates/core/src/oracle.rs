//! Independent references for checking the method: the exact diagonal
//! resolvent, adaptive quadrature of the two-integral representation, and
//! measured-error sweeps over `lambda`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::apply::{node_systems, scalar_integral_sums, Mode, NodeSystems};
use crate::error::{Error, Result};
use crate::estimates::{q_estimates, EstimateBreakdown};
use crate::integrands::{bounds, exact_scalar_resolvent, f1, f2, Params};

/// `b_i / (1 + h d_i^alpha)`, with `+inf` entries mapped to zero.
pub fn exact_diagonal_apply(entries: &[f64], b: &[f64], p: &Params) -> Result<Vec<f64>> {
    if entries.len() != b.len() {
        return Err(Error::invalid(format!(
            "{} diagonal entries but {} right-hand side entries",
            entries.len(),
            b.len()
        )));
    }
    entries
        .iter()
        .zip(b)
        .map(|(&d, &bi)| Ok(bi * exact_scalar_resolvent(d, p)?))
        .collect()
}

/// Exact resolvent of a symmetric matrix through its eigendecomposition.
///
/// The eigenvalues must be at least one (up to rounding), matching the
/// spectral assumption of the method.
pub fn exact_dense_apply(matrix: &DMatrix<f64>, b: &[f64], p: &Params) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n || b.len() != n {
        return Err(Error::invalid(format!(
            "matrix is {}x{} but the right-hand side has {} entries",
            n,
            matrix.ncols(),
            b.len()
        )));
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let min_ev = eig.eigenvalues.min();
    if n > 0 && min_ev < 1.0 - 1e-10 * eig.eigenvalues.amax().max(1.0) {
        return Err(Error::invalid(format!(
            "smallest eigenvalue {min_ev} is below 1"
        )));
    }
    let rhs = DVector::from_column_slice(b);
    let mut coeffs = eig.eigenvectors.transpose() * rhs;
    for (c, &ev) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= exact_scalar_resolvent(ev.max(1.0), p)?;
    }
    Ok((eig.eigenvectors * coeffs).iter().copied().collect())
}

// Gauss-Kronrod 10/21 point pair on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_570_548_180_565,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const MAX_PANELS: usize = 5000;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Globally adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
///
/// Stops once the summed panel error is below `max(abs_tol, rel_tol |I|)`.
/// Returns `(value, error_estimate)`.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!("invalid interval [{a}, {b}]")));
    }
    // Start from unit-ish panels so narrow features are not missed.
    let initial = ((b - a).ceil() as usize).clamp(1, 256);
    let width = (b - a) / initial as f64;
    let mut heap: BinaryHeap<Panel> = (0..initial)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == initial { b } else { lo + width };
            kronrod_panel(&f, lo, hi)
        })
        .collect();
    loop {
        let value = neumaier_sum(heap.iter().map(|p| p.value));
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature(
                "integrand produced a non-finite value".into(),
            ));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok((value, error));
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature(format!(
                "error estimate {error:e} above tolerance after {MAX_PANELS} panels"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Quadrature(
                "panel width reached machine precision".into(),
            ));
        }
        heap.push(kronrod_panel(&f, worst.a, mid));
        heap.push(kronrod_panel(&f, mid, worst.b));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Integrates the two-integral representation at `lambda` adaptively and
/// compares it with `1 / (1 + h lambda^alpha)`. Fails if the gap exceeds `tol`.
pub fn representation_check(lambda: f64, p: &Params, tol: f64) -> Result<RepresentationCheck> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let rhs = exact_scalar_resolvent(lambda, p)?;
    let (k1, k2) = bounds(p);
    let target = tol / 10.0;
    let cut = 50f64.max((p.prefactor() * (k1 + k2) / target).ln());
    let integrand = |x: f64| {
        let e = (-x).exp();
        let v1 = f1(x, lambda, p).unwrap_or(f64::NAN);
        let v2 = f2(x, lambda, p).unwrap_or(f64::NAN);
        p.prefactor() * e * (v1 + v2)
    };
    let (lhs, _) = adaptive_integrate(integrand, 0.0, cut, target, 0.0)?;
    let gap = (lhs - rhs).abs();
    if gap > tol {
        return Err(Error::Quadrature(format!(
            "representation gap {gap:e} exceeds {tol:e} at lambda = {lambda}"
        )));
    }
    Ok(RepresentationCheck { lhs, rhs, gap })
}

const REFERENCE_REL_TOL: f64 = 1e-15;

/// Reference values `(I1(lambda), I2(lambda))` to near machine precision.
pub fn reference_integrals(lambda: f64, p: &Params) -> Result<(f64, f64)> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda must be finite and >= 1, got {lambda}"
        )));
    }
    let sl = p.scaled(lambda);
    let sin2 = p.sin_api() * p.sin_api();
    // Tail beyond the cut is below e^{-40} relative to the integral.
    let spread = 4.0 * (1.0 + sl) / (sl.min(1.0) * sin2);
    let cut = 40.0 + spread.ln().max(0.0);
    let one = adaptive_integrate(
        |x| (-x).exp() * f1(x, lambda, p).unwrap_or(f64::NAN),
        0.0,
        cut,
        0.0,
        REFERENCE_REL_TOL,
    )
    .or_else(|_| {
        adaptive_integrate(
            |x| (-x).exp() * f1(x, lambda, p).unwrap_or(f64::NAN),
            0.0,
            cut,
            0.0,
            1e-14,
        )
    })?;
    let two = adaptive_integrate(
        |x| (-x).exp() * f2(x, lambda, p).unwrap_or(f64::NAN),
        0.0,
        cut,
        0.0,
        REFERENCE_REL_TOL,
    )
    .or_else(|_| {
        adaptive_integrate(
            |x| (-x).exp() * f2(x, lambda, p).unwrap_or(f64::NAN),
            0.0,
            cut,
            0.0,
            1e-14,
        )
    })?;
    Ok((one.0, two.0))
}

/// One row of a scalar error sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub lambda: f64,
    /// `|exact - approximation|` including the prefactor.
    pub err_total: f64,
    /// `|I1 - I1_n|` against the adaptive reference.
    pub err_int1: f64,
    /// `|I2 - I2_m|` against the adaptive reference.
    pub err_int2: f64,
    /// `q_I`, `q_II` at the first rule size and `q_III`, `q_IV` at the second.
    pub estimates: EstimateBreakdown,
}

/// Rule sizes used for the scalar estimates of each integral in `mode`.
fn estimate_sizes(p: &Params, mode: Mode, systems: &NodeSystems) -> (usize, usize) {
    match mode {
        Mode::Standard(n) => (n, n),
        Mode::Balanced(n) => (n, systems.second.len()),
        Mode::Truncated(n) => (n, crate::planner::balance_m(n, p)),
    }
}

/// Measured errors and estimates over `lambda_grid`. Rows follow the grid
/// order.
pub fn error_sweep(p: &Params, lambda_grid: &[f64], mode: Mode) -> Result<Vec<SweepRecord>> {
    let systems = node_systems(p, mode)?;
    let (n1, n2) = estimate_sizes(p, mode, &systems);
    lambda_grid
        .par_iter()
        .map(|&lambda| {
            let (i1_n, i2_n) = scalar_integral_sums(lambda, &systems)?;
            let (i1, i2) = reference_integrals(lambda, p)?;
            let approx = p.prefactor() * (i1_n + i2_n);
            let exact = exact_scalar_resolvent(lambda, p)?;
            let first = q_estimates(lambda, n1, p);
            let second = q_estimates(lambda, n2, p);
            Ok(SweepRecord {
                lambda,
                err_total: (exact - approx).abs(),
                err_int1: (i1 - i1_n).abs(),
                err_int2: (i2 - i2_n).abs(),
                estimates: EstimateBreakdown {
                    q_iii: second.q_iii,
                    q_iv: second.q_iv,
                    regime2: second.regime2,
                    ..first
                },
            })
        })
        .collect()
}

/// `points` values log-uniformly spaced in `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..points)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
                .collect()
        }
    }
}

/// `diag(10^0, 10^0.1, ..., 10^16)`.
pub fn reference_operator_entries() -> Vec<f64> {
    (0..=160).map(|k| 10f64.powf(k as f64 / 10.0)).collect()
}
