//! Penalized (iteratively reweighted) least squares with one thin-plate
//! smooth, GCV smoothing-parameter selection and Bayesian-style coefficient
//! covariance.
//!
//! Coefficients are ordered parametric columns first, then the smooth
//! columns of the basis. The smoothing parameter multiplies the basis
//! penalty exactly as built; nothing is rescaled internally.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{dot, gram, mat_vec, sym_eigen, symmetrize, xt_wv, Cholesky};
use crate::search::{minimize_log, Boundary, LogSearchOptions};
use crate::tprs::TprsBasis;

/// Response distribution and link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    GaussianIdentity,
    BinomialLogit,
    BinomialProbit,
}

impl Family {
    pub fn is_binomial(self) -> bool {
        !matches!(self, Family::GaussianIdentity)
    }

    /// Short label used in method variants: `linear`, `logit`, `probit`.
    pub fn label(self) -> &'static str {
        match self {
            Family::GaussianIdentity => "linear",
            Family::BinomialLogit => "logit",
            Family::BinomialProbit => "probit",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "gaussian" | "identity" => Some(Family::GaussianIdentity),
            "logit" | "logistic" => Some(Family::BinomialLogit),
            "probit" => Some(Family::BinomialProbit),
            _ => None,
        }
    }

    fn clamp_eta(self, eta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => eta,
            Family::BinomialLogit => eta.clamp(-30.0, 30.0),
            // -qnorm(machine epsilon)
            Family::BinomialProbit => eta.clamp(-8.125890664701906, 8.125890664701906),
        }
    }

    fn linkinv(self, eta: f64) -> f64 {
        let e = self.clamp_eta(eta);
        match self {
            Family::GaussianIdentity => e,
            Family::BinomialLogit => 1.0 / (1.0 + (-e).exp()),
            Family::BinomialProbit => norm_cdf(e),
        }
    }

    fn mu_eta(self, eta: f64) -> f64 {
        let e = self.clamp_eta(eta);
        match self {
            Family::GaussianIdentity => 1.0,
            Family::BinomialLogit => {
                let mu = 1.0 / (1.0 + (-e).exp());
                (mu * (1.0 - mu)).max(f64::EPSILON)
            }
            Family::BinomialProbit => norm_pdf(e).max(f64::EPSILON),
        }
    }

    fn link(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => mu,
            Family::BinomialLogit => (mu / (1.0 - mu)).ln(),
            Family::BinomialProbit => norm_quantile(mu),
        }
    }

    /// `ln μ` and `ln(1 − μ)` at a linear predictor, without cancellation.
    fn log_mu_pair(self, eta: f64) -> (f64, f64) {
        let e = self.clamp_eta(eta);
        match self {
            Family::GaussianIdentity => unreachable!("gaussian has no log-probabilities"),
            Family::BinomialLogit => (-softplus(-e), -softplus(e)),
            Family::BinomialProbit => (norm_cdf(e).ln(), norm_cdf(-e).ln()),
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse normal CDF by Newton steps from a logistic starting guess; only
/// used for IRLS starting values, which lie in (0.25, 0.75).
fn norm_quantile(p: f64) -> f64 {
    let mut x = (p / (1.0 - p)).ln() * 0.6;
    for _ in 0..50 {
        let step = (norm_cdf(x) - p) / norm_pdf(x).max(1e-300);
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x
}

/// A model with parametric columns and at most one smooth term.
#[derive(Clone, Copy)]
pub struct ModelSpec<'a> {
    pub response: &'a [f64],
    /// n × p parametric design; must contain the intercept column
    pub parametric: MatRef<'a, f64>,
    pub basis: Option<&'a TprsBasis>,
    pub family: Family,
    pub weights: Option<&'a [f64]>,
}

impl<'a> ModelSpec<'a> {
    pub fn new(response: &'a [f64], parametric: MatRef<'a, f64>, family: Family) -> Self {
        Self {
            response,
            parametric,
            basis: None,
            family,
            weights: None,
        }
    }

    pub fn with_basis(mut self, basis: &'a TprsBasis) -> Self {
        self.basis = Some(basis);
        self
    }

    pub fn with_weights(mut self, weights: &'a [f64]) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Dimension("empty response".into()));
        }
        if self.parametric.nrows() != n {
            return Err(Error::Dimension(format!(
                "parametric design has {} rows, response has {n}",
                self.parametric.nrows()
            )));
        }
        if self.parametric.ncols() == 0 {
            return Err(Error::Dimension(
                "parametric design needs an intercept column".into(),
            ));
        }
        if let Some(b) = self.basis {
            if b.nrows() != n {
                return Err(Error::Dimension(format!(
                    "basis has {} rows, response has {n}",
                    b.nrows()
                )));
            }
        }
        if let Some(w) = self.weights {
            if w.len() != n {
                return Err(Error::Dimension(
                    "weights length differs from response".into(),
                ));
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Domain(
                    "weights must be finite and non-negative".into(),
                ));
            }
        }
        if self.response.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("response contains non-finite values".into()));
        }
        if self.family.is_binomial() && self.response.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Domain("binomial response must be 0/1".into()));
        }
        Ok(())
    }
}

/// Non-fatal conditions observed while fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// Binomial fitted probabilities within 1e-12 of 0 or 1.
    Separation { pinned: usize },
    /// GCV was minimized at an end of the search interval.
    LambdaAtBoundary(Boundary),
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub edf_total: f64,
    pub edf_smooth: f64,
    /// dispersion: residual variance for gaussian, 1 for binomial
    pub scale: f64,
    /// `(XᵀWX + λS)⁻¹ · scale`
    pub covariance: Mat<f64>,
    pub gcv: f64,
    pub deviance: f64,
    /// deviance of the intercept-only model
    pub null_deviance: f64,
    /// fitted means
    pub fitted: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub n_parametric: usize,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn se(&self, index: usize) -> f64 {
        coef_se(self, index)
    }

    pub fn n(&self) -> usize {
        self.fitted.len()
    }

    pub fn residuals(&self, response: &[f64]) -> Vec<f64> {
        response
            .iter()
            .zip(&self.fitted)
            .map(|(y, f)| y - f)
            .collect()
    }
}

/// `[parametric | basis.design]`.
pub fn stack_design(parametric: MatRef<'_, f64>, basis: Option<&TprsBasis>) -> Mat<f64> {
    let n = parametric.nrows();
    let p = parametric.ncols();
    let q = basis.map_or(0, |b| b.ncols());
    Mat::<f64>::from_fn(n, p + q, |i, j| {
        if j < p {
            parametric[(i, j)]
        } else {
            basis.expect("basis columns").design[(i, j - p)]
        }
    })
}

/// Block-diagonal penalty with zeros on the parametric block.
pub fn stack_penalty(n_parametric: usize, basis: Option<&TprsBasis>) -> Mat<f64> {
    let q = basis.map_or(0, |b| b.ncols());
    let mut s = Mat::<f64>::zeros(n_parametric + q, n_parametric + q);
    if let Some(b) = basis {
        for j in 0..q {
            for i in 0..q {
                s[(n_parametric + i, n_parametric + j)] = b.penalty[(i, j)];
            }
        }
    }
    s
}

/// `tr((XᵀWX + λS)⁻¹ XᵀWX)`.
pub fn hat_trace(
    x: MatRef<'_, f64>,
    s: MatRef<'_, f64>,
    lambda: f64,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let g = gram(x, weights);
    let a = penalized(&g, s, lambda);
    let chol = factor_normal(&a)?;
    Ok(trace_product(&chol.inverse(), &g))
}

fn penalized(g: &Mat<f64>, s: MatRef<'_, f64>, lambda: f64) -> Mat<f64> {
    let mut a = g.clone();
    if lambda != 0.0 {
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                a[(i, j)] += lambda * s[(i, j)];
            }
        }
    }
    a
}

fn factor_normal(a: &Mat<f64>) -> Result<Cholesky> {
    Cholesky::factor(a.as_ref(), "penalized normal equations").map_err(|e| match e {
        Error::Factorization { n, .. } => Error::SingularDesign(format!(
            "penalized normal equations ({n} coefficients) are not positive definite"
        )),
        other => other,
    })
}

/// `tr(A B)` for symmetric `A`, `B`.
fn trace_product(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut t = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            t += a[(i, j)] * b[(i, j)];
        }
    }
    t
}

fn weight(w: Option<&[f64]>, i: usize) -> f64 {
    w.map_or(1.0, |w| w[i])
}

fn null_deviance(y: &[f64], w: Option<&[f64]>, family: Family) -> f64 {
    let sw: f64 = (0..y.len()).map(|i| weight(w, i)).sum();
    let mean = (0..y.len()).map(|i| weight(w, i) * y[i]).sum::<f64>() / sw;
    if family.is_binomial() {
        if mean <= 0.0 || mean >= 1.0 {
            return 0.0;
        }
        -2.0 * (0..y.len())
            .map(|i| weight(w, i) * (y[i] * mean.ln() + (1.0 - y[i]) * (1.0 - mean).ln()))
            .sum::<f64>()
    } else {
        (0..y.len())
            .map(|i| weight(w, i) * (y[i] - mean).powi(2))
            .sum()
    }
}

fn ubre_value(n: usize, deviance: f64, edf: f64) -> f64 {
    let n = n as f64;
    deviance / n + 2.0 * edf / n - 1.0
}

fn gcv_value(n: usize, deviance: f64, edf: f64) -> f64 {
    let denom = n as f64 - edf;
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        n as f64 * deviance / (denom * denom)
    }
}

/// Design, penalty and cached cross-products for one model.
struct Prepared<'a> {
    spec: ModelSpec<'a>,
    x: Mat<f64>,
    s: Mat<f64>,
    p_par: usize,
}

impl<'a> Prepared<'a> {
    fn new(spec: ModelSpec<'a>) -> Result<Self> {
        spec.validate()?;
        let x = stack_design(spec.parametric, spec.basis);
        let s = stack_penalty(spec.parametric.ncols(), spec.basis);
        Ok(Self {
            spec,
            x,
            s,
            p_par: spec.parametric.ncols(),
        })
    }

    fn n(&self) -> usize {
        self.spec.n()
    }

    fn gaussian_at(&self, lambda: f64, g: &Mat<f64>, xty: &[f64]) -> Result<FitResult> {
        let y = self.spec.response;
        let w = self.spec.weights;
        let n = self.n();
        let a = penalized(g, self.s.as_ref(), lambda);
        let chol = factor_normal(&a)?;
        let beta = chol.solve_vec(xty);
        let fitted = mat_vec(self.x.as_ref(), &beta);
        let rss: f64 = (0..n)
            .map(|i| weight(w, i) * (y[i] - fitted[i]).powi(2))
            .sum();
        let inv = chol.inverse();
        let edf_total = trace_product(&inv, g);
        let resid_df = n as f64 - edf_total;
        let scale = if resid_df > 1e-8 {
            rss / resid_df
        } else {
            f64::NAN
        };
        let mut covariance = inv;
        for j in 0..covariance.ncols() {
            for i in 0..covariance.nrows() {
                covariance[(i, j)] *= scale;
            }
        }
        Ok(FitResult {
            coefficients: beta,
            lambda,
            edf_total,
            edf_smooth: edf_total - self.p_par as f64,
            scale,
            covariance,
            gcv: gcv_value(n, rss, edf_total),
            deviance: rss,
            null_deviance: null_deviance(y, w, Family::GaussianIdentity),
            fitted,
            converged: true,
            iterations: 1,
            n_parametric: self.p_par,
            warnings: Vec::new(),
        })
    }

    fn binomial_deviance(&self, eta: &[f64]) -> f64 {
        let y = self.spec.response;
        let fam = self.spec.family;
        let mut d = 0.0;
        for (i, &e) in eta.iter().enumerate() {
            let (lm, l1m) = fam.log_mu_pair(e);
            d -= 2.0 * weight(self.spec.weights, i) * if y[i] == 1.0 { lm } else { l1m };
        }
        d
    }

    fn irls_weights(&self, eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let y = self.spec.response;
        let fam = self.spec.family;
        let mut w = Vec::with_capacity(eta.len());
        let mut wz = Vec::with_capacity(eta.len());
        for (i, &e) in eta.iter().enumerate() {
            let mu = fam.linkinv(e);
            let d = fam.mu_eta(e);
            let var = (mu * (1.0 - mu)).max(f64::EPSILON);
            let wi = weight(self.spec.weights, i) * d * d / var;
            w.push(wi);
            // W z = w η + w (y − μ)/μ'
            wz.push(wi * e + weight(self.spec.weights, i) * d / var * (y[i] - mu));
        }
        (w, wz)
    }

    fn binomial_at(&self, lambda: f64, start: Option<&[f64]>) -> Result<FitResult> {
        const MAX_ITER: usize = 100;
        const TOL: f64 = 1e-8;
        let fam = self.spec.family;
        let y = self.spec.response;
        let n = self.n();
        let penalty_of = |beta: &[f64]| -> f64 {
            if lambda == 0.0 {
                return 0.0;
            }
            let sb = mat_vec(self.s.as_ref(), beta);
            lambda * dot(beta, &sb)
        };

        let (mut beta, mut eta) = match start {
            Some(b) => (b.to_vec(), mat_vec(self.x.as_ref(), b)),
            None => {
                let eta = y.iter().map(|&v| fam.link((v + 0.5) / 2.0)).collect();
                (vec![0.0; self.x.ncols()], eta)
            }
        };
        let mut dev = self.binomial_deviance(&eta);
        let mut pen_dev = if start.is_some() {
            dev + penalty_of(&beta)
        } else {
            f64::INFINITY
        };
        let mut converged = false;
        let mut change = f64::INFINITY;
        let mut iterations = 0;
        let mut last_system = None;
        for iter in 1..=MAX_ITER {
            iterations = iter;
            let (w, wz) = self.irls_weights(&eta);
            let g = gram(self.x.as_ref(), Some(&w));
            let a = penalized(&g, self.s.as_ref(), lambda);
            let chol = factor_normal(&a)?;
            let mut beta_new = chol.solve_vec(&xt_wv(self.x.as_ref(), None, &wz));
            let mut eta_new = mat_vec(self.x.as_ref(), &beta_new);
            let mut dev_new = self.binomial_deviance(&eta_new);
            let mut pen_new = dev_new + penalty_of(&beta_new);
            let mut halvings = 0;
            while pen_dev.is_finite()
                && (!pen_new.is_finite() || pen_new > pen_dev * (1.0 + 1e-12) + 1e-12)
                && halvings < 30
            {
                for (bn, b) in beta_new.iter_mut().zip(&beta) {
                    *bn = 0.5 * (*bn + b);
                }
                eta_new = mat_vec(self.x.as_ref(), &beta_new);
                dev_new = self.binomial_deviance(&eta_new);
                pen_new = dev_new + penalty_of(&beta_new);
                halvings += 1;
            }
            change = (dev_new - dev).abs() / (dev_new.abs() + 0.1);
            last_system = Some((g, chol));
            beta = beta_new;
            eta = eta_new;
            dev = dev_new;
            pen_dev = pen_new;
            if change < TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { iterations, change });
        }
        // weights of the final iteration, as in the usual GLM convention
        let (g, chol) = last_system.expect("at least one iteration");
        let covariance = chol.inverse();
        let edf_total = trace_product(&covariance, &g);
        let fitted: Vec<f64> = eta.iter().map(|&e| fam.linkinv(e)).collect();
        let pinned = fitted
            .iter()
            .filter(|&&m| m < 1e-12 || m > 1.0 - 1e-12)
            .count();
        let mut warnings = Vec::new();
        if pinned > 0 {
            warnings.push(FitWarning::Separation { pinned });
        }
        Ok(FitResult {
            coefficients: beta,
            lambda,
            edf_total,
            edf_smooth: edf_total - self.p_par as f64,
            scale: 1.0,
            covariance,
            gcv: gcv_value(n, dev, edf_total),
            deviance: dev,
            null_deviance: null_deviance(y, self.spec.weights, fam),
            fitted,
            converged,
            iterations,
            n_parametric: self.p_par,
            warnings,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// Fits the model at a fixed smoothing parameter.
///
/// Gaussian: minimizes `‖W^{1/2}(y − Xβ)‖² + λβᵀSβ` directly. Binomial:
/// penalized IRLS, converged when the relative deviance change drops below
/// 1e-8 (at most 100 iterations), with step halving on the penalized
/// deviance.
pub fn fit_penalized(spec: &ModelSpec<'_>, lambda: f64) -> Result<FitResult> {
    check_lambda(lambda)?;
    let prep = Prepared::new(*spec)?;
    if spec.family.is_binomial() {
        prep.binomial_at(lambda, None)
    } else {
        let g = gram(prep.x.as_ref(), spec.weights);
        let xty = xt_wv(prep.x.as_ref(), spec.weights, spec.response);
        prep.gaussian_at(lambda, &g, &xty)
    }
}

/// `n · D / (n − edf)²`.
pub fn gcv_score(fit: &FitResult, n: usize) -> Result<f64> {
    if fit.edf_total >= n as f64 {
        return Err(Error::DegenerateGcv {
            edf: fit.edf_total,
            n,
        });
    }
    Ok(gcv_value(n, fit.deviance, fit.edf_total))
}

/// `D / n + 2 edf / n − 1`, the unbiased risk estimate for a family with
/// unit scale.
pub fn ubre_score(fit: &FitResult, n: usize) -> f64 {
    ubre_value(n, fit.deviance, fit.edf_total)
}

/// Smoothing parameter selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `n D / (n − edf)²`, for families with an estimated scale
    Gcv,
    /// `D / n + 2 edf / n − 1`, for families with scale fixed at 1
    Ubre,
}

impl Criterion {
    /// GCV when the scale is estimated, UBRE when it is known.
    pub fn for_family(family: Family) -> Self {
        if family.is_binomial() {
            Criterion::Ubre
        } else {
            Criterion::Gcv
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Gcv => "gcv",
            Criterion::Ubre => "ubre",
        }
    }

    fn value(self, n: usize, deviance: f64, edf: f64) -> f64 {
        match self {
            Criterion::Gcv => gcv_value(n, deviance, edf),
            Criterion::Ubre => ubre_value(n, deviance, edf),
        }
    }
}

pub fn coef_se(fit: &FitResult, index: usize) -> f64 {
    fit.covariance[(index, index)].max(0.0).sqrt()
}

/// Outcome of a GCV search.
#[derive(Debug, Clone)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub fit: FitResult,
    pub criterion: Criterion,
    /// criterion value at `lambda`
    pub score: f64,
    pub boundary: Option<Boundary>,
    pub evaluations: usize,
}

/// Gaussian GCV as an explicit function of λ.
///
/// With `XᵀWX = LLᵀ` and `L⁻¹SL⁻ᵀ = VDVᵀ`, every quantity at a given λ is
/// diagonal in the rotated coordinates: `edf(λ) = Σ 1/(1 + λd_j)` and
/// `RSS(λ) = RSS(0) + Σ (f_j λd_j / (1 + λd_j))²` with `f = VᵀL⁻¹XᵀWy`.
pub struct GaussianGcvPath {
    n: usize,
    d: Vec<f64>,
    f: Vec<f64>,
    rss0: f64,
}

impl GaussianGcvPath {
    pub fn new(spec: &ModelSpec<'_>) -> Result<Self> {
        let prep = Prepared::new(*spec)?;
        let g = gram(prep.x.as_ref(), spec.weights);
        let xty = xt_wv(prep.x.as_ref(), spec.weights, spec.response);
        Self::from_parts(&prep, &g, &xty)
    }

    fn from_parts(prep: &Prepared<'_>, g: &Mat<f64>, xty: &[f64]) -> Result<Self> {
        let chol = factor_normal(g)?;
        let l = chol.l();
        let p = g.ncols();
        // M = L⁻¹ S L⁻ᵀ
        let mut tmp = prep.s.clone();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(
            l,
            tmp.as_mut(),
            faer::Par::Seq,
        );
        let mut m = tmp.transpose().to_owned();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(
            l,
            m.as_mut(),
            faer::Par::Seq,
        );
        symmetrize(&mut m);
        let (d, v) = sym_eigen(m.as_ref(), "rotated penalty")?;
        let d: Vec<f64> = d.into_iter().map(|x| x.max(0.0)).collect();
        let mut c = Mat::<f64>::from_fn(p, 1, |i, _| xty[i]);
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(
            l,
            c.as_mut(),
            faer::Par::Seq,
        );
        let f_col = v.transpose() * &c;
        let f: Vec<f64> = (0..p).map(|i| f_col[(i, 0)]).collect();

        // unpenalized residual sum of squares, computed directly
        let mut beta0 = c.clone();
        faer::linalg::triangular_solve::solve_upper_triangular_in_place(
            l.transpose(),
            beta0.as_mut(),
            faer::Par::Seq,
        );
        let b0: Vec<f64> = (0..p).map(|i| beta0[(i, 0)]).collect();
        let fit0 = mat_vec(prep.x.as_ref(), &b0);
        let y = prep.spec.response;
        let rss0 = (0..y.len())
            .map(|i| weight(prep.spec.weights, i) * (y[i] - fit0[i]).powi(2))
            .sum();
        Ok(Self {
            n: prep.n(),
            d,
            f,
            rss0,
        })
    }

    pub fn edf(&self, lambda: f64) -> f64 {
        self.d.iter().map(|d| 1.0 / (1.0 + lambda * d)).sum()
    }

    pub fn rss(&self, lambda: f64) -> f64 {
        self.rss0
            + self
                .d
                .iter()
                .zip(&self.f)
                .map(|(d, f)| {
                    let s = lambda * d;
                    (f * s / (1.0 + s)).powi(2)
                })
                .sum::<f64>()
    }

    pub fn gcv(&self, lambda: f64) -> f64 {
        gcv_value(self.n, self.rss(lambda), self.edf(lambda))
    }

    pub fn ubre(&self, lambda: f64) -> f64 {
        ubre_value(self.n, self.rss(lambda), self.edf(lambda))
    }
}

/// Chooses λ over `[1e-8, 1e8]`: a 41-point log grid, then golden-section
/// refinement to relative tolerance 1e-4 inside the bracket. The criterion
/// is GCV for the Gaussian family and UBRE for binomial families (scale 1).
/// Ties go to the larger λ. A minimum on the grid edge is returned as is,
/// flagged with its boundary.
pub fn select_lambda(spec: &ModelSpec<'_>) -> Result<LambdaSelection> {
    select_lambda_with(spec, &LogSearchOptions::default())
}

pub fn select_lambda_with(
    spec: &ModelSpec<'_>,
    opts: &LogSearchOptions,
) -> Result<LambdaSelection> {
    select_lambda_by(spec, Criterion::for_family(spec.family), opts)
}

pub fn select_lambda_by(
    spec: &ModelSpec<'_>,
    criterion: Criterion,
    opts: &LogSearchOptions,
) -> Result<LambdaSelection> {
    if spec.basis.is_none() {
        return Err(Error::Domain(
            "smoothing parameter selection needs a smooth term".into(),
        ));
    }
    let prep = Prepared::new(*spec)?;
    let n = prep.n();
    if spec.family.is_binomial() {
        // warm starts interpolated from the nearest λ values already fitted
        let mut cache: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut best: Option<(f64, FitResult)> = None;
        let mut crit = |lambda: f64| -> f64 {
            let start = warm_start(&cache, lambda.ln());
            let attempt = match prep.binomial_at(lambda, start.as_deref()) {
                Ok(f) => Ok(f),
                Err(_) if start.is_some() => prep.binomial_at(lambda, None),
                Err(e) => Err(e),
            };
            match attempt {
                Ok(fit) => {
                    let v = criterion.value(n, fit.deviance, fit.edf_total);
                    cache.push((lambda.ln(), fit.coefficients.clone()));
                    let better = match &best {
                        None => v.is_finite(),
                        Some((bv, b)) => v < *bv || (v == *bv && lambda > b.lambda),
                    };
                    if better {
                        best = Some((v, fit));
                    }
                    v
                }
                Err(_) => f64::INFINITY,
            }
        };
        let search = minimize_log(&mut crit, opts).ok_or_else(|| {
            Error::SingularDesign("no smoothing parameter produced a valid fit".into())
        })?;
        let mut fit = match best {
            Some((_, f)) if f.lambda == search.x_min => f,
            _ => prep.binomial_at(
                search.x_min,
                warm_start(&cache, search.x_min.ln()).as_deref(),
            )?,
        };
        let score = criterion.value(n, fit.deviance, fit.edf_total);
        if let Some(b) = search.boundary {
            fit.warnings.push(FitWarning::LambdaAtBoundary(b));
        }
        Ok(LambdaSelection {
            lambda: search.x_min,
            fit,
            criterion,
            score,
            boundary: search.boundary,
            evaluations: search.evaluations,
        })
    } else {
        let g = gram(prep.x.as_ref(), spec.weights);
        let xty = xt_wv(prep.x.as_ref(), spec.weights, spec.response);
        let path = GaussianGcvPath::from_parts(&prep, &g, &xty)?;
        let search = minimize_log(
            |l| match criterion {
                Criterion::Gcv => path.gcv(l),
                Criterion::Ubre => path.ubre(l),
            },
            opts,
        )
        .ok_or_else(|| {
            Error::SingularDesign("criterion undefined on the whole search interval".into())
        })?;
        let mut fit = prep.gaussian_at(search.x_min, &g, &xty)?;
        let score = criterion.value(n, fit.deviance, fit.edf_total);
        if let Some(b) = search.boundary {
            fit.warnings.push(FitWarning::LambdaAtBoundary(b));
        }
        Ok(LambdaSelection {
            lambda: search.x_min,
            fit,
            criterion,
            score,
            boundary: search.boundary,
            evaluations: search.evaluations,
        })
    }
}

/// Coefficients linearly inter- or extrapolated in `ln λ` from the two
/// nearest fitted values.
fn warm_start(cache: &[(f64, Vec<f64>)], ll: f64) -> Option<Vec<f64>> {
    let mut near: Vec<&(f64, Vec<f64>)> = cache.iter().collect();
    near.sort_by(|a, b| (a.0 - ll).abs().total_cmp(&(b.0 - ll).abs()));
    match near.as_slice() {
        [] => None,
        [only] => Some(only.1.clone()),
        [a, b, ..] => {
            let t = (ll - a.0) / (a.0 - b.0);
            Some(a.1.iter().zip(&b.1).map(|(x, y)| x + t * (x - y)).collect())
        }
    }
}

/// Intercept column followed by the given columns.
pub fn design_with_intercept(n: usize, columns: &[&[f64]]) -> Mat<f64> {
    assert!(
        columns.iter().all(|c| c.len() == n),
        "column length differs from n"
    );
    Mat::<f64>::from_fn(n, columns.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            columns[j - 1][i]
        }
    })
}
