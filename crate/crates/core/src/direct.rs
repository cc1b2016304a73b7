//! Direct min-max least-squares estimation of the individual uplift.
//!
//! With linear-in-parameter models `f(x) = αᵀφ(x)` and critic `g(x) = βᵀψ(x)`
//! the sample objective is the quadratic form
//!
//! ```text
//! Ĵ(α, β) = 2 αᵀAβ − 4 bᵀβ − βᵀCβ
//! ```
//!
//! where `A`, `b`, `C` are (weighted) sample averages over the pooled `(x̃, w)`
//! and `(x, z)` samples. Adding `λ_f‖α‖² − λ_g‖β‖²`, the inner maximization over
//! `β` and the outer minimization over `α` both have closed forms.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::{PooledWSet, PooledZSet};
use crate::error::{invalid, Result, UpliftError};
use crate::features::GaussianBasis;
use crate::linalg::{add_ridge, condition_number, symmetrize, SpdFactor, ILL_CONDITIONED};

/// Binary outcomes in `{-1, 1}` bound the uplift to this range.
pub const BINARY_UPLIFT_BOUND: f64 = 2.0;

/// A fit is flagged when the policy contrast in `A` is not significant at this level.
pub const WEAK_CONTRAST_LEVEL: f64 = 1e-3;

/// Rows used to estimate the effective degrees of freedom of the contrast test.
const CONTRAST_DOF_ROWS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub lambda_f: f64,
    pub lambda_g: f64,
    /// Clamp predictions to `[-2, 2]` (outcomes known to be binary).
    pub clip_binary: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            lambda_f: 1e-3,
            lambda_g: 1e-3,
            clip_binary: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_f", self.lambda_f), ("lambda_g", self.lambda_g)] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be finite and strictly positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Sufficient statistics of the sample objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Statistics {
    /// `b_f × b_g`
    pub a: DMatrix<f64>,
    /// `b_g`
    pub b: DVector<f64>,
    /// `b_g × b_g`, symmetric positive semidefinite
    pub c: DMatrix<f64>,
    /// Test of `E[A] = 0`, i.e. of identical treatment policies.
    pub contrast: ContrastTest,
}

/// Scaled chi-square test of `E[A] = 0`.
///
/// `R = ñ‖A‖²_F / tr Σ` where `Σ` is the covariance of one summand of `A`.
/// Under the null `R·d` is approximately `χ²_d` with the Satterthwaite
/// degrees of freedom `d = (tr Σ)² / tr Σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastTest {
    /// `sqrt(R)`: `‖A‖_F` over its null standard deviation.
    pub snr: f64,
    pub dof: f64,
    pub p_value: f64,
}

impl ContrastTest {
    pub const UNKNOWN: ContrastTest = ContrastTest {
        snr: f64::NAN,
        dof: f64::NAN,
        p_value: f64::NAN,
    };

    fn from_ratio(ratio: f64, dof: f64) -> Self {
        let p_value = if ratio.is_finite() && dof.is_finite() && dof > 0.0 {
            ChiSquared::new(dof).map_or(f64::NAN, |chi| chi.sf(ratio * dof))
        } else if ratio == f64::INFINITY {
            0.0
        } else {
            f64::NAN
        };
        Self {
            snr: ratio.sqrt(),
            dof,
            p_value,
        }
    }
}

impl Statistics {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DMatrix<f64>) -> Result<Self> {
        if a.ncols() != b.len() || c.nrows() != b.len() || c.ncols() != b.len() {
            return Err(UpliftError::DimensionMismatch {
                context: "statistics",
                expected: b.len(),
                got: a.ncols().max(c.nrows()).max(c.ncols()),
            });
        }
        Ok(Self {
            a,
            b,
            c,
            contrast: ContrastTest::UNKNOWN,
        })
    }

    pub fn f_size(&self) -> usize {
        self.a.nrows()
    }

    pub fn g_size(&self) -> usize {
        self.b.len()
    }

    /// `2αᵀAβ − 4bᵀβ − βᵀCβ`
    pub fn objective(&self, alpha: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        2.0 * alpha.dot(&(&self.a * beta)) - 4.0 * self.b.dot(beta) - beta.dot(&(&self.c * beta))
    }

    /// Objective plus `λ_f‖α‖² − λ_g‖β‖²`.
    pub fn regularized_objective(&self, alpha: &DVector<f64>, beta: &DVector<f64>, hyper: &HyperParams) -> f64 {
        self.objective(alpha, beta) + hyper.lambda_f * alpha.norm_squared() - hyper.lambda_g * beta.norm_squared()
    }

    /// Regularized objective with the critic set to its maximizer for `alpha`.
    pub fn reduced_objective(&self, alpha: &DVector<f64>, hyper: &HyperParams) -> Result<f64> {
        let beta = solve_inner(self, alpha, hyper.lambda_g)?;
        Ok(self.regularized_objective(alpha, &beta, hyper))
    }

    /// Gradient of the regularized objective in `β`: `2Aᵀα − 4b − 2(C + λ_g I)β`.
    pub fn inner_gradient(&self, alpha: &DVector<f64>, beta: &DVector<f64>, lambda_g: f64) -> DVector<f64> {
        2.0 * self.a.tr_mul(alpha) - 4.0 * &self.b - 2.0 * (&self.c * beta + lambda_g * beta)
    }
}

fn check_pooled(zs: &PooledZSet, ws: &PooledWSet) -> Result<()> {
    if zs.is_empty() || ws.is_empty() {
        return invalid("both pooled sets must be nonempty");
    }
    if zs.weights.len() != zs.len() || ws.weights.len() != ws.len() {
        return invalid("pooled weights must match sample counts");
    }
    Ok(())
}

/// Builds `A`, `b`, `C` from pooled samples. Sample weights multiply each summand;
/// the normalizers stay `1/n` and `1/ñ`.
pub fn assemble_statistics(
    zs: &PooledZSet,
    ws: &PooledWSet,
    basis_f: &GaussianBasis,
    basis_g: &GaussianBasis,
) -> Result<Statistics> {
    check_pooled(zs, ws)?;
    let n = zs.len() as f64;
    let nt = ws.len() as f64;

    let phi_w = basis_f.transform(&ws.features)?;
    let psi_w = basis_g.transform(&ws.features)?;
    let psi_z = basis_g.transform(&zs.features)?;

    let mut signed_psi_w = psi_w.clone();
    for (i, mut row) in signed_psi_w.row_iter_mut().enumerate() {
        row *= ws.weights[i] * ws.w[i] / nt;
    }
    let a = phi_w.tr_mul(&signed_psi_w);

    let zr = DVector::from_iterator(zs.len(), (0..zs.len()).map(|i| zs.weights[i] * zs.z[i] / n));
    let b = psi_z.tr_mul(&zr);

    let mut scaled_z = psi_z.clone();
    for (i, mut row) in scaled_z.row_iter_mut().enumerate() {
        row *= zs.weights[i] / (2.0 * n);
    }
    let mut scaled_w = psi_w.clone();
    for (i, mut row) in scaled_w.row_iter_mut().enumerate() {
        row *= ws.weights[i] / (2.0 * nt);
    }
    let c = symmetrize(psi_z.tr_mul(&scaled_z) + psi_w.tr_mul(&scaled_w));

    let contrast = contrast_test(&a, ws, &phi_w, &psi_w);

    if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(UpliftError::Numerical {
            context: "assemble_statistics",
            detail: "non-finite statistic".into(),
            condition: f64::NAN,
        });
    }
    Ok(Statistics { a, b, c, contrast })
}

/// Summands of `A` are `v_i = s_i vec(φ_i ψ_iᵀ)` with `s_i = r_i w_i`, so inner
/// products `v_iᵀv_j = s_i s_j (φ_iᵀφ_j)(ψ_iᵀψ_j)` give `tr Σ` and `tr Σ²`
/// without forming the `b_f b_g`-dimensional covariance.
fn contrast_test(a: &DMatrix<f64>, ws: &PooledWSet, phi: &DMatrix<f64>, psi: &DMatrix<f64>) -> ContrastTest {
    let nt = ws.len();
    let s: Vec<f64> = (0..nt).map(|i| ws.weights[i] * ws.w[i]).collect();
    let a_sq = a.norm_squared();
    let second_moment = (0..nt)
        .map(|i| s[i] * s[i] * phi.row(i).norm_squared() * psi.row(i).norm_squared())
        .sum::<f64>()
        / nt as f64;
    let trace = second_moment - a_sq;
    if !(trace > 0.0) {
        return ContrastTest::from_ratio(if a_sq > 0.0 { f64::INFINITY } else { f64::NAN }, f64::NAN);
    }
    let ratio = nt as f64 * a_sq / trace;

    // tr Σ² = ‖M‖²_F − 2 aᵀMa + ‖a‖⁴ with M the raw second-moment matrix,
    // estimated on evenly strided rows.
    let stride = nt.div_ceil(CONTRAST_DOF_ROWS).max(1);
    let rows: Vec<usize> = (0..nt).step_by(stride).collect();
    let m = rows.len() as f64;
    let sub_phi = phi.select_rows(&rows);
    let sub_psi = psi.select_rows(&rows);
    let gram = (&sub_phi * sub_phi.transpose()).component_mul(&(&sub_psi * sub_psi.transpose()));
    let mut m_sq = 0.0;
    for (jj, &j) in rows.iter().enumerate() {
        for (ii, &i) in rows.iter().enumerate() {
            let v = s[i] * s[j] * gram[(ii, jj)];
            m_sq += v * v;
        }
    }
    m_sq /= m * m;
    let projected = (&sub_phi * a).component_mul(&sub_psi);
    let ama = rows
        .iter()
        .enumerate()
        .map(|(ii, &i)| (s[i] * projected.row(ii).sum()).powi(2))
        .sum::<f64>()
        / m;
    let trace_sq = m_sq - 2.0 * ama + a_sq * a_sq;
    let dof = if trace_sq > 0.0 {
        (trace * trace / trace_sq).max(1e-3)
    } else {
        f64::NAN
    };
    ContrastTest::from_ratio(ratio, dof)
}

/// Critic maximizing the regularized objective for fixed `alpha`:
/// `β̂ = (C + λ_g I)⁻¹(Aᵀα − 2b)`.
pub fn solve_inner(stats: &Statistics, alpha: &DVector<f64>, lambda_g: f64) -> Result<DVector<f64>> {
    if alpha.len() != stats.f_size() {
        return Err(UpliftError::DimensionMismatch {
            context: "solve_inner alpha",
            expected: stats.f_size(),
            got: alpha.len(),
        });
    }
    if !(lambda_g > 0.0) {
        return invalid(format!("lambda_g must be strictly positive, got {lambda_g}"));
    }
    let c_reg = SpdFactor::new(add_ridge(stats.c.clone(), lambda_g), "solve_inner")?;
    let rhs = stats.a.tr_mul(alpha) - 2.0 * &stats.b;
    Ok(c_reg.solve(&rhs))
}

/// Conditioning of the two systems solved during a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    /// Condition number of `C + λ_g I`.
    pub inner_condition: f64,
    /// Condition number of `A(C + λ_g I)⁻¹Aᵀ + λ_f I`.
    pub outer_condition: f64,
    pub contrast: ContrastTest,
}

impl FitDiagnostics {
    pub fn near_singular(&self) -> bool {
        self.inner_condition > ILL_CONDITIONED || self.outer_condition > ILL_CONDITIONED
    }

    /// The two policies are not separable on the basis at this sample size.
    /// An untested contrast (no sample data) is not flagged.
    pub fn weak_contrast(&self) -> bool {
        self.contrast.p_value > WEAK_CONTRAST_LEVEL
    }

    pub fn degenerate(&self) -> bool {
        self.near_singular() || self.weak_contrast()
    }
}

/// Fitted direct estimator: `û(x) = αᵀφ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxModel {
    alpha: DVector<f64>,
    beta: DVector<f64>,
    basis_f: GaussianBasis,
    basis_g: GaussianBasis,
    hyper: HyperParams,
    diagnostics: Option<FitDiagnostics>,
}

/// Closed-form solution `α̂ = 2(A C̃⁻¹Aᵀ + λ_f I)⁻¹ A C̃⁻¹ b` with `C̃ = C + λ_g I`.
pub fn solve_outer(stats: &Statistics, hyper: &HyperParams) -> Result<(DVector<f64>, FitDiagnostics)> {
    hyper.validate()?;
    let c_tilde = add_ridge(stats.c.clone(), hyper.lambda_g);
    let inner_condition = condition_number(&c_tilde);
    let c_fac = SpdFactor::new(c_tilde, "inner system")?;
    // K = C̃⁻¹Aᵀ, so A C̃⁻¹ b = Kᵀ b and A C̃⁻¹ Aᵀ = A K.
    let k = c_fac.solve_matrix(&stats.a.transpose());
    let outer = add_ridge(symmetrize(&stats.a * &k), hyper.lambda_f);
    let outer_condition = condition_number(&outer);
    let rhs = 2.0 * k.tr_mul(&stats.b);
    let alpha = SpdFactor::new(outer, "outer system")?.solve(&rhs);
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(UpliftError::Numerical {
            context: "outer system",
            detail: "solution has non-finite entries".into(),
            condition: outer_condition,
        });
    }
    let diagnostics = FitDiagnostics {
        inner_condition,
        outer_condition,
        contrast: stats.contrast,
    };
    if diagnostics.near_singular() {
        log::warn!("near-singular min-max fit: cond(C~) = {inner_condition:.3e}, cond(outer) = {outer_condition:.3e}");
    }
    Ok((alpha, diagnostics))
}

/// Fits the direct estimator on pooled samples.
pub fn fit(
    zs: &PooledZSet,
    ws: &PooledWSet,
    basis_f: &GaussianBasis,
    basis_g: &GaussianBasis,
    hyper: HyperParams,
) -> Result<MinMaxModel> {
    hyper.validate()?;
    let stats = assemble_statistics(zs, ws, basis_f, basis_g)?;
    fit_statistics(&stats, basis_f.clone(), basis_g.clone(), hyper)
}

/// Fits from precomputed statistics.
pub fn fit_statistics(
    stats: &Statistics,
    basis_f: GaussianBasis,
    basis_g: GaussianBasis,
    hyper: HyperParams,
) -> Result<MinMaxModel> {
    if basis_f.size() != stats.f_size() || basis_g.size() != stats.g_size() {
        return Err(UpliftError::DimensionMismatch {
            context: "basis size vs statistics",
            expected: stats.f_size(),
            got: basis_f.size(),
        });
    }
    let (alpha, diagnostics) = solve_outer(stats, &hyper)?;
    let beta = solve_inner(stats, &alpha, hyper.lambda_g)?;
    Ok(MinMaxModel {
        alpha,
        beta,
        basis_f,
        basis_g,
        hyper,
        diagnostics: Some(diagnostics),
    })
}

impl MinMaxModel {
    pub fn from_parts(
        alpha: DVector<f64>,
        beta: DVector<f64>,
        basis_f: GaussianBasis,
        basis_g: GaussianBasis,
        hyper: HyperParams,
    ) -> Result<Self> {
        if alpha.len() != basis_f.size() {
            return Err(UpliftError::DimensionMismatch {
                context: "alpha vs basis_f",
                expected: basis_f.size(),
                got: alpha.len(),
            });
        }
        if beta.len() != basis_g.size() {
            return Err(UpliftError::DimensionMismatch {
                context: "beta vs basis_g",
                expected: basis_g.size(),
                got: beta.len(),
            });
        }
        if alpha.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return invalid("model coefficients must be finite");
        }
        hyper.validate()?;
        Ok(Self {
            alpha,
            beta,
            basis_f,
            basis_g,
            hyper,
            diagnostics: None,
        })
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn basis_f(&self) -> &GaussianBasis {
        &self.basis_f
    }

    pub fn basis_g(&self) -> &GaussianBasis {
        &self.basis_g
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    /// Present for freshly fitted models, absent after deserialization.
    pub fn diagnostics(&self) -> Option<&FitDiagnostics> {
        self.diagnostics.as_ref()
    }

    /// `αᵀφ(x)` per row, before any clipping.
    pub fn predict_raw(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self.basis_f.transform(x)? * &self.alpha)
    }

    /// Uplift estimates, clamped to `[-2, 2]` when `clip_binary` is set.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let mut u = self.predict_raw(x)?;
        if self.hyper.clip_binary {
            u.apply(|v| *v = v.clamp(-BINARY_UPLIFT_BOUND, BINARY_UPLIFT_BOUND));
        }
        Ok(u)
    }

    /// Critic values `βᵀψ(x)`.
    pub fn critic(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self.basis_g.transform(x)? * &self.beta)
    }

    /// Serializes to the flat text model format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let num = |v: f64| format!("{v:.16e}");
        writeln!(s, "{MODEL_MAGIC}").unwrap();
        writeln!(s, "lambda_f {}", num(self.hyper.lambda_f)).unwrap();
        writeln!(s, "lambda_g {}", num(self.hyper.lambda_g)).unwrap();
        writeln!(s, "clip_binary {}", self.hyper.clip_binary).unwrap();
        for (name, basis) in [("basis_f", &self.basis_f), ("basis_g", &self.basis_g)] {
            writeln!(s, "{name} {} {} {}", basis.size(), basis.dim(), num(basis.bandwidth())).unwrap();
            for row in basis.centers().row_iter() {
                let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
                writeln!(s, "{}", cells.join(" ")).unwrap();
            }
        }
        for (name, coef) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            writeln!(s, "{name} {}", coef.len()).unwrap();
            for &v in coef.iter() {
                writeln!(s, "{}", num(v)).unwrap();
            }
        }
        s
    }

    /// Parses the format written by [`MinMaxModel::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = ModelLines::new(text);
        let magic = lines.next_line()?;
        if magic.trim() != MODEL_MAGIC {
            return Err(lines.error(format!("expected header `{MODEL_MAGIC}`")));
        }
        let lambda_f = lines.keyed("lambda_f")?;
        let lambda_f = lines.parse_f64(lambda_f)?;
        let lambda_g = lines.keyed("lambda_g")?;
        let lambda_g = lines.parse_f64(lambda_g)?;
        let clip = lines.keyed("clip_binary")?;
        let clip_binary = match clip.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(lines.error(format!("bad boolean `{other}`"))),
        };
        let basis_f = lines.basis("basis_f")?;
        let basis_g = lines.basis("basis_g")?;
        let alpha = lines.vector("alpha")?;
        let beta = lines.vector("beta")?;
        Self::from_parts(
            alpha,
            beta,
            basis_f,
            basis_g,
            HyperParams {
                lambda_f,
                lambda_g,
                clip_binary,
            },
        )
    }
}

const MODEL_MAGIC: &str = "uplift-minmax-model 1";

struct ModelLines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> ModelLines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn error(&self, detail: String) -> UpliftError {
        UpliftError::Format {
            line: self.line,
            detail,
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.error("unexpected end of model".into()))
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.error(format!("expected `{key}`")));
        }
        Ok(parts.collect::<Vec<_>>().join(" "))
    }

    fn parse_f64(&self, s: impl AsRef<str>) -> Result<f64> {
        s.as_ref()
            .trim()
            .parse::<f64>()
            .map_err(|e| self.error(format!("bad number `{}`: {e}", s.as_ref())))
    }

    fn parse_usize(&self, s: &str) -> Result<usize> {
        s.parse::<usize>()
            .map_err(|e| self.error(format!("bad count `{s}`: {e}")))
    }

    fn basis(&mut self, key: &str) -> Result<GaussianBasis> {
        let header = self.keyed(key)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(self.error(format!("`{key}` needs rows, cols and bandwidth")));
        }
        let rows = self.parse_usize(fields[0])?;
        let cols = self.parse_usize(fields[1])?;
        let bandwidth = self.parse_f64(fields[2])?;
        let mut centers = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            let line = self.next_line()?;
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != cols {
                return Err(self.error(format!("expected {cols} values, found {}", cells.len())));
            }
            for (j, c) in cells.iter().enumerate() {
                centers[(i, j)] = self.parse_f64(c)?;
            }
        }
        GaussianBasis::new(centers, bandwidth).map_err(|e| self.error(e.to_string()))
    }

    fn vector(&mut self, key: &str) -> Result<DVector<f64>> {
        let len = self.keyed(key)?;
        let len = self.parse_usize(len.trim())?;
        let mut v = DVector::zeros(len);
        for i in 0..len {
            let line = self.next_line()?;
            v[i] = self.parse_f64(line)?;
        }
        Ok(v)
    }
}

/// Evaluates `Ĵ(f_α, g_β)` term by term from the pooled samples.
pub fn empirical_objective(
    zs: &PooledZSet,
    ws: &PooledWSet,
    basis_f: &GaussianBasis,
    basis_g: &GaussianBasis,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
) -> Result<f64> {
    check_pooled(zs, ws)?;
    if alpha.len() != basis_f.size() || beta.len() != basis_g.size() {
        return Err(UpliftError::DimensionMismatch {
            context: "empirical_objective coefficients",
            expected: basis_f.size(),
            got: alpha.len(),
        });
    }
    let n = zs.len() as f64;
    let nt = ws.len() as f64;
    let f_w = basis_f.transform(&ws.features)? * alpha;
    let g_w = basis_g.transform(&ws.features)? * beta;
    let g_z = basis_g.transform(&zs.features)? * beta;

    let mut cross = 0.0;
    let mut g_sq_w = 0.0;
    for i in 0..ws.len() {
        cross += ws.weights[i] * ws.w[i] * f_w[i] * g_w[i];
        g_sq_w += ws.weights[i] * g_w[i] * g_w[i];
    }
    let mut lin = 0.0;
    let mut g_sq_z = 0.0;
    for i in 0..zs.len() {
        lin += zs.weights[i] * zs.z[i] * g_z[i];
        g_sq_z += zs.weights[i] * g_z[i] * g_z[i];
    }
    Ok(2.0 / nt * cross - 4.0 / n * lin - g_sq_z / (2.0 * n) - g_sq_w / (2.0 * nt))
}

impl MinMaxModel {
    /// `Ĵ` at the stored `(α̂, β̂)`; with `regularized` the `λ` terms are added.
    pub fn empirical_objective(&self, zs: &PooledZSet, ws: &PooledWSet, regularized: bool) -> Result<f64> {
        let j = empirical_objective(zs, ws, &self.basis_f, &self.basis_g, &self.alpha, &self.beta)?;
        Ok(if regularized {
            j + self.hyper.lambda_f * self.alpha.norm_squared() - self.hyper.lambda_g * self.beta.norm_squared()
        } else {
            j
        })
    }
}
