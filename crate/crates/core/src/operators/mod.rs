//! Dual-pairing SBP operators in space and time.
//!
//! A triplet `(D⁻, D⁺, H)` satisfies `H D⁺ + (D⁻)ᵀ H = e_N e_Nᵀ - e_1 e_1ᵀ` and
//! its dissipation `H (D⁺ - D⁻)` is negative semidefinite. The same operator
//! family discretizes time, where the penalized, adjoint and reversed variants
//! below carry the weak initial condition.

mod tables;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use tables::Closure;

/// Orders with embedded coefficient tables.
pub const SUPPORTED_ORDERS: [usize; 4] = [2, 4, 6, 8];

/// Relative floor used by the semidefiniteness checks.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Absolute tolerance of the summation-by-parts identity, before scaling.
pub const SBP_TOLERANCE: f64 = 1e-12;

/// Relative tolerance of polynomial exactness checks.
pub const EXACTNESS_TOLERANCE: f64 = 1e-10;

/// Which first-derivative operator a time derivative is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// The backward (upwind) operator `D⁻`.
    Minus,
    /// The centered average `½(D⁻ + D⁺)`.
    Center,
}

impl Flavor {
    pub const ALL: [Flavor; 2] = [Flavor::Minus, Flavor::Center];

    pub fn label(self) -> &'static str {
        match self {
            Flavor::Minus => "m",
            Flavor::Center => "c",
        }
    }
}

/// Smallest admissible grid size for an order: two closures plus one point.
pub fn minimal_points(order: usize) -> Result<usize> {
    let c = tables::closure(order).ok_or(Error::UnsupportedOrder(order))?;
    Ok(2 * c.block_rows() + 1)
}

/// Forward/backward difference pair with its diagonal quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SbpTriplet {
    pub order: usize,
    pub n: usize,
    pub spacing: f64,
    pub d_minus: DMatrix<f64>,
    pub d_plus: DMatrix<f64>,
    /// Diagonal of `H`, already scaled by the spacing.
    pub h: DVector<f64>,
}

impl SbpTriplet {
    pub fn h_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.h)
    }

    /// Centered operator `½(D⁻ + D⁺)`.
    pub fn d_center(&self) -> DMatrix<f64> {
        (&self.d_minus + &self.d_plus) * 0.5
    }

    /// Number of boundary-closure rows at each end.
    pub fn closure_rows(&self) -> usize {
        tables::closure(self.order).map_or(0, Closure::block_rows)
    }
}

/// Unit-spacing pieces `(Q, S, h)` with `H D± = Q + B/2 ± S`.
fn unit_parts(c: &Closure, n: usize) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let r = c.block_rows();
    let w = c.half_width();

    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for (k, &a) in c.central.iter().enumerate() {
            let off = k + 1;
            if i + off < n {
                q[(i, i + off)] = a;
            }
            if i >= off {
                q[(i, i - off)] = -a;
            }
        }
    }
    debug_assert!(w <= r);
    let mut idx = 0;
    for i in 0..r {
        q[(i, i)] = 0.0;
        for j in i + 1..r {
            let v = c.skew_block[idx];
            idx += 1;
            q[(i, j)] = v;
            q[(j, i)] = -v;
        }
    }
    for i in 0..r {
        for j in 0..r {
            q[(n - 1 - i, n - 1 - j)] = -q[(i, j)];
        }
    }

    let mut h = DVector::from_element(n, 1.0);
    for (i, &v) in c.norm.iter().enumerate() {
        h[i] = v;
        h[n - 1 - i] = v;
    }

    // S = -Δᵀ C Δ with Δ the undivided difference of degree K.
    let k = c.difference_degree();
    let rows = n - k;
    let stencil: Vec<f64> = (0..=k)
        .map(|m| {
            let sign = if (k - m).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(k, m)
        })
        .collect();
    let mut weights = vec![c.dissipation; rows];
    for (j, &f) in c.dissipation_boundary.iter().enumerate() {
        weights[j] = f * c.dissipation;
        weights[rows - 1 - j] = f * c.dissipation;
    }
    let mut s = DMatrix::zeros(n, n);
    for (row, &cw) in weights.iter().enumerate() {
        for (a, &sa) in stencil.iter().enumerate() {
            for (b, &sb) in stencil.iter().enumerate() {
                s[(row + a, row + b)] -= cw * sa * sb;
            }
        }
    }
    (q, s, h)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn boundary_matrix(n: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n);
    b[(0, 0)] = -1.0;
    b[(n - 1, n - 1)] = 1.0;
    b
}

fn check_grid(order: usize, n: usize, spacing: f64) -> Result<&'static Closure> {
    let c = tables::closure(order).ok_or(Error::UnsupportedOrder(order))?;
    let min = 2 * c.block_rows() + 1;
    if n < min {
        return Err(Error::GridTooSmall { order, n, min });
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidSpacing(spacing));
    }
    Ok(c)
}

fn raw_triplet(order: usize, n: usize, spacing: f64) -> Result<SbpTriplet> {
    let c = check_grid(order, n, spacing)?;
    let (q, s, h) = unit_parts(c, n);
    let half_b = boundary_matrix(n) * 0.5;
    let inv = h.map(|v| 1.0 / (v * spacing));
    let mut d_plus = &q + &half_b + &s;
    let mut d_minus = &q + &half_b - &s;
    for i in 0..n {
        d_plus.row_mut(i).scale_mut(inv[i]);
        d_minus.row_mut(i).scale_mut(inv[i]);
    }
    Ok(SbpTriplet { order, n, spacing, d_minus, d_plus, h: h * spacing })
}

/// Builds and certifies the spatial triplet of interior order `order`.
pub fn build_space_triplet(order: usize, n: usize, spacing: f64) -> Result<SbpTriplet> {
    let t = raw_triplet(order, n, spacing)?;
    let report = verify_space(&t);
    if !report.all_passed() {
        return Err(Error::Certification(report.summary()));
    }
    Ok(t)
}

/// Outcome of one numerical check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Check {
    pub passed: bool,
    /// Nonnegative measured violation.
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(residual: f64, tolerance: f64) -> Self {
        let residual = residual.max(0.0);
        Check { passed: residual.is_finite() && residual <= tolerance, residual, tolerance }
    }
}

/// Residuals of the framework assumptions for one operator family.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AssumptionReport {
    pub order: usize,
    pub n: usize,
    /// Smallest diagonal entry of `H` must be positive; residual is its deficit.
    pub positive_norm: Check,
    /// Interior exactness of `D⁻` and `D⁺` on monomials up to the order.
    pub interior_accuracy: Check,
    /// Highest monomial degree that boundary rows differentiate exactly.
    pub boundary_degree: Option<usize>,
    /// `max|H D⁺ + (D⁻)ᵀ H - B|`.
    pub sbp_identity: Check,
    /// Largest eigenvalue of the symmetric part of `H (D⁺ - D⁻)`.
    pub dissipation: Check,
    /// Time operators only: smallest eigenvalue deficit of `Q + Qᵀ` per flavor.
    pub time_positivity: Vec<(Flavor, Check)>,
    /// Time operators only: spread of `Q + Qᵀ` eigenvalues around zero for the centered flavor.
    pub center_neutrality: Option<Check>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.positive_norm.passed
            && self.interior_accuracy.passed
            && self.sbp_identity.passed
            && self.dissipation.passed
            && self.time_positivity.iter().all(|(_, c)| c.passed)
            && self.center_neutrality.is_none_or(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut parts = vec![
            format!("positive norm {}", mark(&self.positive_norm)),
            format!("interior accuracy {}", mark(&self.interior_accuracy)),
            format!("sbp identity {}", mark(&self.sbp_identity)),
            format!("dissipation {}", mark(&self.dissipation)),
        ];
        for (f, c) in &self.time_positivity {
            parts.push(format!("time positivity ({:?}) {}", f, mark(c)));
        }
        if let Some(c) = &self.center_neutrality {
            parts.push(format!("centered neutrality {}", mark(c)));
        }
        format!("order {} n {}: {}", self.order, self.n, parts.join(", "))
    }
}

fn mark(c: &Check) -> String {
    format!("{} (residual {:.3e}, tol {:.1e})", if c.passed { "ok" } else { "FAIL" }, c.residual, c.tolerance)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, &v| a.max(v.abs()))
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Largest relative error of `rows` of `d` applied to monomials of degree `0..=degree`.
///
/// Monomials are taken in the variable scaled to `[-1, 1]` so that the check
/// measures roundoff rather than growth of `x^q`.
fn monomial_error(d: &DMatrix<f64>, spacing: f64, rows: std::ops::Range<usize>, degree: usize) -> f64 {
    let n = d.nrows();
    let mid = (n as f64 - 1.0) / 2.0;
    let scale = (mid * spacing).max(f64::MIN_POSITIVE);
    let x: Vec<f64> = (0..n).map(|i| (i as f64 - mid) * spacing / scale).collect();
    let mut worst = 0.0_f64;
    for q in 0..=degree {
        let f = DVector::from_iterator(n, x.iter().map(|&xi| xi.powi(q as i32)));
        let df = d * &f;
        let exact = |i: usize| if q == 0 { 0.0 } else { q as f64 * x[i].powi(q as i32 - 1) / scale };
        let size = rows.clone().fold(1.0_f64, |a, i| a.max(exact(i).abs()));
        for i in rows.clone() {
            worst = worst.max((df[i] - exact(i)).abs() / size);
        }
    }
    worst
}

fn boundary_degree(d: &DMatrix<f64>, spacing: f64, rows: usize, max: usize) -> usize {
    let mut best = 0;
    for q in 1..=max {
        if monomial_error(d, spacing, 0..rows, q) <= 1e-8 {
            best = q;
        } else {
            break;
        }
    }
    best
}

fn common_checks(
    order: usize,
    spacing: f64,
    d_minus: &DMatrix<f64>,
    d_plus: &DMatrix<f64>,
    h: &DVector<f64>,
) -> AssumptionReport {
    let n = h.len();
    let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let positive_norm = Check { passed: hmin > 0.0, residual: (-hmin).max(0.0), tolerance: 0.0 };

    let r = tables::closure(order).map_or(0, Closure::block_rows);
    let interior = if n > 2 * r { r..n - r } else { 0..0 };
    let acc =
        monomial_error(d_minus, spacing, interior.clone(), order).max(monomial_error(d_plus, spacing, interior, order));
    let interior_accuracy = Check::new(acc, EXACTNESS_TOLERANCE);
    let boundary_degree = (n > 2 * r && r > 0)
        .then(|| boundary_degree(d_minus, spacing, r, order).min(boundary_degree(d_plus, spacing, r, order)));

    let hm = DMatrix::from_diagonal(h);
    let resid = &hm * d_plus + d_minus.transpose() * &hm - boundary_matrix(n);
    let scale = 1.0_f64.max(1.0 / spacing);
    let sbp_identity = Check::new(max_abs(&resid), SBP_TOLERANCE * scale);

    let diss = &hm * (d_plus - d_minus);
    let (_, hi) = symmetric_eigenvalues(&diss);
    let dissipation = Check::new(hi, EIGEN_TOLERANCE * max_abs(&diss).max(f64::MIN_POSITIVE));

    AssumptionReport {
        order,
        n,
        positive_norm,
        interior_accuracy,
        boundary_degree,
        sbp_identity,
        dissipation,
        time_positivity: Vec::new(),
        center_neutrality: None,
    }
}

/// Measures every assumption on a spatial triplet. Never fails; violations are reported.
pub fn verify_space(t: &SbpTriplet) -> AssumptionReport {
    common_checks(t.order, t.spacing, &t.d_minus, &t.d_plus, &t.h)
}

/// Temporal operator family on one time block.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeOps {
    pub order: usize,
    pub m: usize,
    pub step: f64,
    pub d_minus: DMatrix<f64>,
    pub d_center: DMatrix<f64>,
    pub h: DVector<f64>,
    pub flavor_i: Flavor,
    pub flavor_j: Flavor,
}

/// Builds and certifies the time operators for one block of `m` points.
pub fn build_time_ops(order: usize, m: usize, step: f64, flavor_i: Flavor, flavor_j: Flavor) -> Result<TimeOps> {
    let t = raw_triplet(order, m, step)?;
    let d_center = t.d_center();
    let ops = TimeOps { order, m, step, d_minus: t.d_minus, d_center, h: t.h, flavor_i, flavor_j };
    let report = verify_time(&ops);
    if !report.all_passed() {
        return Err(Error::Certification(report.summary()));
    }
    Ok(ops)
}

impl TimeOps {
    /// Wraps externally supplied operators without certification.
    pub fn from_parts(
        order: usize,
        step: f64,
        d_minus: DMatrix<f64>,
        d_center: DMatrix<f64>,
        h: DVector<f64>,
        flavor_i: Flavor,
        flavor_j: Flavor,
    ) -> Result<TimeOps> {
        let m = h.len();
        for d in [&d_minus, &d_center] {
            if d.nrows() != m || d.ncols() != m {
                return Err(Error::DimensionMismatch { expected: m, got: d.nrows() });
            }
        }
        Ok(TimeOps { order, m, step, d_minus, d_center, h, flavor_i, flavor_j })
    }

    /// Same operators with another flavor pair.
    pub fn with_flavors(&self, flavor_i: Flavor, flavor_j: Flavor) -> TimeOps {
        TimeOps { flavor_i, flavor_j, ..self.clone() }
    }

    pub fn d_plus(&self) -> DMatrix<f64> {
        &self.d_center * 2.0 - &self.d_minus
    }

    /// `D⁽ᵏ⁾ₜ` for the given flavor.
    pub fn derivative(&self, flavor: Flavor) -> DMatrix<f64> {
        match flavor {
            Flavor::Minus => self.d_minus.clone(),
            Flavor::Center => self.d_center.clone(),
        }
    }

    pub fn h_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.h)
    }

    /// Initial-time penalty `Hₜ⁻¹ e₁ e₁ᵀ`.
    pub fn initial_penalty(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.m, self.m);
        p[(0, 0)] = 1.0 / self.h[0];
        p
    }

    /// Interface transfer `Hₜ⁻¹ e₁ e_Mᵀ`.
    pub fn interface_penalty(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.m, self.m);
        p[(0, self.m - 1)] = 1.0 / self.h[0];
        p
    }
}

/// Backward identity `R`.
pub fn reversal(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| if i + j == m - 1 { 1.0 } else { 0.0 })
}

/// Measures every assumption on a time block, including the positivity of
/// `Q + Qᵀ` with `Q = Hₜ D⁽ᵏ⁾ₜ - ½B` for both selected flavors.
pub fn verify_time(t: &TimeOps) -> AssumptionReport {
    let d_plus = t.d_plus();
    let mut report = common_checks(t.order, t.step, &t.d_minus, &d_plus, &t.h);
    let hm = t.h_matrix();
    let half_b = boundary_matrix(t.m) * 0.5;
    let mut flavors = vec![t.flavor_i];
    if t.flavor_j != t.flavor_i {
        flavors.push(t.flavor_j);
    }
    for f in flavors {
        let q = &hm * t.derivative(f) - &half_b;
        let sym = &q + q.transpose();
        let (lo, hi) = symmetric_eigenvalues(&sym);
        let tol = EIGEN_TOLERANCE * max_abs(&sym).max(1.0);
        report.time_positivity.push((f, Check::new(-lo, tol)));
        if f == Flavor::Center {
            report.center_neutrality = Some(Check::new(lo.abs().max(hi.abs()), tol));
        }
    }
    report
}

/// Penalized operator `D̃⁽ᵏ⁾ₜ = D⁽ᵏ⁾ₜ + Hₜ⁻¹ e₁ e₁ᵀ`.
pub fn penalized_time_op(t: &TimeOps, flavor: Flavor) -> DMatrix<f64> {
    let mut d = t.derivative(flavor);
    d[(0, 0)] += 1.0 / t.h[0];
    d
}

/// Adjoint partner `D̂⁽ᵏ⁾ₜ`: `D⁺ₜ` for the upwind flavor, `Dₜ` for the
/// centered one, minus `Hₜ⁻¹ e_M e_Mᵀ`.
pub fn adjoint_time_op(t: &TimeOps, flavor: Flavor) -> DMatrix<f64> {
    let mut d = match flavor {
        Flavor::Minus => t.d_plus(),
        Flavor::Center => t.d_center.clone(),
    };
    let m = t.m;
    d[(m - 1, m - 1)] -= 1.0 / t.h[m - 1];
    d
}

/// Reversed-time operator `D̃⁽ᵏ⁾_τ = -R D̂⁽ᵏ⁾ₜ R`.
pub fn reversed_time_op(t: &TimeOps, flavor: Flavor) -> DMatrix<f64> {
    let r = reversal(t.m);
    -(&r * adjoint_time_op(t, flavor) * &r)
}
