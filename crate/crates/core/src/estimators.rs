//! Exposure-effect estimators under spatial confounding.
//!
//! Every estimator regresses the outcome on an intercept, the exposure and
//! any covariates, and differs only in how (and whether) a thin-plate smooth
//! of location is used to soak up spatial confounding:
//!
//! * `NS`: no spatial adjustment.
//! * `F-DF`: unpenalized smooth with a fixed number of degrees of freedom.
//! * `PS`: penalized smooth with λ chosen by GCV on the outcome model.
//! * `E-PS`: λ chosen on an exposure model (GCV, or UBRE for a binomial
//!   exposure model), then held fixed in the outcome model.
//! * `Spatial+`: the exposure is replaced by its residual from a spatial
//!   exposure model before fitting a GCV-penalized outcome model.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use faer::Mat;

use crate::error::{Error, Result};
use crate::field::LocationSet;
use crate::pls::{
    fit_penalized, select_lambda, Family, FitResult, FitWarning, LambdaSelection, ModelSpec,
};
use crate::tprs::{TprsBasis, TprsKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExposureKind {
    Continuous,
    /// `I(x* > 0)` for a latent probit-style `x*`
    Binary,
}

impl ExposureKind {
    pub fn label(self) -> &'static str {
        match self {
            ExposureKind::Continuous => "continuous",
            ExposureKind::Binary => "binary",
        }
    }
}

/// Components used to generate a simulated dataset.
#[derive(Debug, Clone, Default)]
pub struct Truth {
    pub beta: f64,
    pub gamma: f64,
    pub gamma_y: f64,
    pub z_c: Option<Vec<f64>>,
    pub z_u: Option<Vec<f64>>,
    pub z_y: Option<Vec<f64>>,
    pub eps_x: Vec<f64>,
    pub eps_y: Vec<f64>,
    /// spatial part of the exposure, `δ_u z^u + δ_c z^c`
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub locations: LocationSet,
    pub exposure: Vec<f64>,
    pub outcome: Vec<f64>,
    pub exposure_kind: ExposureKind,
    pub covariates: Option<Mat<f64>>,
    pub truth: Option<Truth>,
}

impl Dataset {
    pub fn new(
        locations: LocationSet,
        exposure: Vec<f64>,
        outcome: Vec<f64>,
        exposure_kind: ExposureKind,
    ) -> Result<Self> {
        let n = locations.len();
        if exposure.len() != n || outcome.len() != n {
            return Err(Error::Dimension(format!(
                "{n} locations, {} exposures, {} outcomes",
                exposure.len(),
                outcome.len()
            )));
        }
        if exposure.iter().chain(&outcome).any(|v| !v.is_finite()) {
            return Err(Error::Domain("exposure and outcome must be finite".into()));
        }
        if exposure_kind == ExposureKind::Binary && exposure.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Domain("binary exposure must be 0/1".into()));
        }
        Ok(Self {
            locations,
            exposure,
            outcome,
            exposure_kind,
            covariates: None,
            truth: None,
        })
    }

    pub fn with_covariates(mut self, covariates: Mat<f64>) -> Result<Self> {
        if covariates.nrows() != self.n() {
            return Err(Error::Dimension(format!(
                "covariates have {} rows, dataset has {}",
                covariates.nrows(),
                self.n()
            )));
        }
        self.covariates = Some(covariates);
        Ok(self)
    }

    pub fn with_truth(mut self, truth: Truth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn n(&self) -> usize {
        self.exposure.len()
    }

    fn n_covariates(&self) -> usize {
        self.covariates.as_ref().map_or(0, |c| c.ncols())
    }

    /// `[1 | exposure | covariates]`, or `[1 | covariates]` without exposure.
    fn design(&self, exposure: Option<&[f64]>) -> Mat<f64> {
        let n = self.n();
        let off = usize::from(exposure.is_some());
        let cov = self.covariates.as_ref();
        Mat::<f64>::from_fn(n, 1 + off + self.n_covariates(), |i, j| {
            match (j, exposure) {
                (0, _) => 1.0,
                (1, Some(x)) => x[i],
                _ => cov.expect("covariate column")[(i, j - 1 - off)],
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ns,
    Fdf,
    Ps,
    Eps,
    SpatialPlus,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ns => "NS",
            Method::Fdf => "F-DF",
            Method::Ps => "PS",
            Method::Eps => "E-PS",
            Method::SpatialPlus => "Spatial+",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaEstimate {
    pub method: Method,
    pub variant: String,
    pub beta_hat: f64,
    pub se: f64,
    pub lambda_used: Option<f64>,
    pub edf_smooth: Option<f64>,
    /// wall-clock seconds
    pub elapsed: f64,
    pub warnings: Vec<FitWarning>,
}

/// Thin-plate bases of several dimensions over one location set, sharing a
/// single kernel eigendecomposition.
pub struct BasisCache {
    kernel: TprsKernel,
    bases: Vec<TprsBasis>,
}

impl BasisCache {
    pub fn new(locations: &LocationSet) -> Result<Self> {
        Ok(Self::from_kernel(TprsKernel::new(locations)?))
    }

    pub fn from_kernel(kernel: TprsKernel) -> Self {
        Self {
            kernel,
            bases: Vec::new(),
        }
    }

    pub fn kernel(&self) -> &TprsKernel {
        &self.kernel
    }

    pub fn basis(&mut self, k: usize) -> Result<&TprsBasis> {
        if let Some(i) = self.bases.iter().position(|b| b.k == k) {
            return Ok(&self.bases[i]);
        }
        let b = self.kernel.basis(k)?;
        self.bases.push(b);
        Ok(self.bases.last().expect("just pushed"))
    }
}

fn exposure_coefficient(
    method: Method,
    variant: String,
    fit: &FitResult,
    smooth: bool,
    started: Instant,
) -> BetaEstimate {
    BetaEstimate {
        method,
        variant,
        beta_hat: fit.coefficients[1],
        se: fit.se(1),
        lambda_used: smooth.then_some(fit.lambda),
        edf_smooth: smooth.then_some(fit.edf_smooth),
        elapsed: started.elapsed().as_secs_f64(),
        warnings: fit.warnings.clone(),
    }
}

fn check_basis(data: &Dataset, basis: &TprsBasis) -> Result<()> {
    if basis.nrows() != data.n() {
        return Err(Error::Dimension(format!(
            "basis has {} rows, dataset has {}",
            basis.nrows(),
            data.n()
        )));
    }
    Ok(())
}

/// Ordinary least squares on intercept, exposure and covariates.
pub fn estimate_ns(data: &Dataset) -> Result<BetaEstimate> {
    let started = Instant::now();
    let x = data.design(Some(&data.exposure));
    let fit = fit_penalized(
        &ModelSpec::new(&data.outcome, x.as_ref(), Family::GaussianIdentity),
        0.0,
    )?;
    Ok(exposure_coefficient(
        Method::Ns,
        "none".into(),
        &fit,
        false,
        started,
    ))
}

/// Unpenalized fit with a `k`-dimensional thin-plate basis (`k − 1` spatial
/// degrees of freedom after the intercept).
pub fn estimate_fdf(data: &Dataset, k: usize) -> Result<BetaEstimate> {
    estimate_fdf_with(data, &build_basis(data, k)?)
}

pub fn estimate_fdf_with(data: &Dataset, basis: &TprsBasis) -> Result<BetaEstimate> {
    check_basis(data, basis)?;
    let started = Instant::now();
    let x = data.design(Some(&data.exposure));
    let spec =
        ModelSpec::new(&data.outcome, x.as_ref(), Family::GaussianIdentity).with_basis(basis);
    let fit = fit_penalized(&spec, 0.0)?;
    let mut est = exposure_coefficient(Method::Fdf, (basis.k - 1).to_string(), &fit, true, started);
    est.lambda_used = Some(0.0);
    Ok(est)
}

/// Penalized spline with λ selected by GCV on the outcome model.
pub fn estimate_ps(data: &Dataset, k: usize) -> Result<BetaEstimate> {
    estimate_ps_with(data, &build_basis(data, k)?)
}

pub fn estimate_ps_with(data: &Dataset, basis: &TprsBasis) -> Result<BetaEstimate> {
    check_basis(data, basis)?;
    let started = Instant::now();
    let x = data.design(Some(&data.exposure));
    let spec =
        ModelSpec::new(&data.outcome, x.as_ref(), Family::GaussianIdentity).with_basis(basis);
    let sel = select_lambda(&spec)?;
    Ok(exposure_coefficient(
        Method::Ps,
        format!("K={}", basis.k),
        &sel.fit,
        true,
        started,
    ))
}

/// Outcome model at a fixed smoothing parameter.
pub fn estimate_ps_fixed(data: &Dataset, basis: &TprsBasis, lambda: f64) -> Result<BetaEstimate> {
    check_basis(data, basis)?;
    let started = Instant::now();
    let x = data.design(Some(&data.exposure));
    let spec =
        ModelSpec::new(&data.outcome, x.as_ref(), Family::GaussianIdentity).with_basis(basis);
    let fit = fit_penalized(&spec, lambda)?;
    Ok(exposure_coefficient(
        Method::Ps,
        format!("K={}:lambda={lambda}", basis.k),
        &fit,
        true,
        started,
    ))
}

fn build_basis(data: &Dataset, k: usize) -> Result<TprsBasis> {
    if k > data.n() {
        return Err(Error::Domain(format!(
            "basis dimension {k} exceeds n = {}",
            data.n()
        )));
    }
    TprsKernel::new(&data.locations)?.basis(k)
}

/// Default exposure-model family: linear for continuous exposures, logistic
/// for binary ones.
pub fn default_exposure_family(kind: ExposureKind) -> Family {
    match kind {
        ExposureKind::Continuous => Family::GaussianIdentity,
        ExposureKind::Binary => Family::BinomialLogit,
    }
}

fn check_family(data: &Dataset, family: Family) -> Result<()> {
    if family.is_binomial() && data.exposure_kind == ExposureKind::Continuous {
        return Err(Error::Domain(format!(
            "{} exposure model needs a binary exposure",
            family.label()
        )));
    }
    Ok(())
}

/// Spatial model of the exposure on intercept, covariates and the smooth,
/// with λ chosen by the family's default criterion.
pub fn exposure_model(
    data: &Dataset,
    basis: &TprsBasis,
    family: Family,
) -> Result<LambdaSelection> {
    check_basis(data, basis)?;
    check_family(data, family)?;
    let z = data.design(None);
    let spec = ModelSpec::new(&data.exposure, z.as_ref(), family).with_basis(basis);
    select_lambda(&spec)
}

/// Two-stage exposure-penalized spline. The exposure-model λ̂ is carried to
/// the gaussian outcome model unchanged; the reported SE is conditional on
/// it.
pub fn estimate_eps(data: &Dataset, k: usize, exposure_family: Family) -> Result<BetaEstimate> {
    estimate_eps_with(data, &build_basis(data, k)?, exposure_family)
}

pub fn estimate_eps_with(
    data: &Dataset,
    basis: &TprsBasis,
    exposure_family: Family,
) -> Result<BetaEstimate> {
    let started = Instant::now();
    let stage1 = exposure_model(data, basis, exposure_family)?;
    let x = data.design(Some(&data.exposure));
    let spec =
        ModelSpec::new(&data.outcome, x.as_ref(), Family::GaussianIdentity).with_basis(basis);
    let fit = fit_penalized(&spec, stage1.lambda)?;
    let mut est = exposure_coefficient(
        Method::Eps,
        format!("K={}:{}", basis.k, exposure_family.label()),
        &fit,
        true,
        started,
    );
    let mut warnings = stage1.fit.warnings.clone();
    warnings.extend(est.warnings);
    est.warnings = warnings;
    Ok(est)
}

/// Spatial+: the exposure is replaced by its residual from a gaussian spatial
/// exposure model, and the outcome model selects its own λ by GCV.
pub fn estimate_spatialplus(
    data: &Dataset,
    k: usize,
    exposure_family: Family,
) -> Result<BetaEstimate> {
    estimate_spatialplus_with(data, &build_basis(data, k)?, exposure_family)
}

pub fn estimate_spatialplus_with(
    data: &Dataset,
    basis: &TprsBasis,
    exposure_family: Family,
) -> Result<BetaEstimate> {
    if exposure_family.is_binomial() || data.exposure_kind == ExposureKind::Binary {
        return Err(Error::Unsupported(
            "Spatial+ is only available for continuous exposures with a linear exposure model"
                .into(),
        ));
    }
    let started = Instant::now();
    let stage1 = exposure_model(data, basis, exposure_family)?;
    let resid = stage1.fit.residuals(&data.exposure);
    let x = data.design(Some(&resid));
    let spec =
        ModelSpec::new(&data.outcome, x.as_ref(), Family::GaussianIdentity).with_basis(basis);
    let sel = select_lambda(&spec)?;
    let mut est = exposure_coefficient(
        Method::SpatialPlus,
        format!("K={}", basis.k),
        &sel.fit,
        true,
        started,
    );
    let mut warnings = stage1.fit.warnings.clone();
    warnings.extend(est.warnings);
    est.warnings = warnings;
    Ok(est)
}

/// Estimated share of exposure variability not explained by location: the
/// residual over null deviance of a smoothing-parameter-selected
/// intercept-plus-smooth exposure model (logistic for binary exposures).
pub fn estimate_pns(data: &Dataset, k: usize) -> Result<f64> {
    estimate_pns_with(data, &build_basis(data, k)?)
}

pub fn estimate_pns_with(data: &Dataset, basis: &TprsBasis) -> Result<f64> {
    check_basis(data, basis)?;
    let z = crate::pls::design_with_intercept(data.n(), &[]);
    let spec = ModelSpec::new(
        &data.exposure,
        z.as_ref(),
        default_exposure_family(data.exposure_kind),
    )
    .with_basis(basis);
    let sel = select_lambda(&spec)?;
    if sel.fit.null_deviance <= 0.0 {
        return Err(Error::Domain("exposure is constant".into()));
    }
    Ok((sel.fit.deviance / sel.fit.null_deviance).clamp(0.0, 1.0))
}

/// An estimator with its tuning choices, as written on the command line:
/// `NS`, `F-DF:50`, `PS:K=500`, `E-PS:K=500:logit`, `Spatial+:K=500`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodSpec {
    Ns,
    /// spatial degrees of freedom; the basis dimension is `df + 1`
    Fdf {
        df: usize,
    },
    Ps {
        k: usize,
    },
    /// `None` picks the family from the exposure type
    Eps {
        k: usize,
        family: Option<Family>,
    },
    SpatialPlus {
        k: usize,
    },
}

pub const DEFAULT_K: usize = 500;

impl MethodSpec {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Ns => Method::Ns,
            MethodSpec::Fdf { .. } => Method::Fdf,
            MethodSpec::Ps { .. } => Method::Ps,
            MethodSpec::Eps { .. } => Method::Eps,
            MethodSpec::SpatialPlus { .. } => Method::SpatialPlus,
        }
    }

    /// Basis dimension used, if any.
    pub fn basis_dim(&self) -> Option<usize> {
        match *self {
            MethodSpec::Ns => None,
            MethodSpec::Fdf { df } => Some(df + 1),
            MethodSpec::Ps { k } | MethodSpec::Eps { k, .. } | MethodSpec::SpatialPlus { k } => {
                Some(k)
            }
        }
    }

    /// Variant string reported with estimates for an exposure of this kind.
    pub fn variant(&self, kind: ExposureKind) -> String {
        match *self {
            MethodSpec::Ns => "none".into(),
            MethodSpec::Fdf { df } => df.to_string(),
            MethodSpec::Ps { k } | MethodSpec::SpatialPlus { k } => format!("K={k}"),
            MethodSpec::Eps { k, family } => {
                format!(
                    "K={k}:{}",
                    family
                        .unwrap_or_else(|| default_exposure_family(kind))
                        .label()
                )
            }
        }
    }

    /// Checks tuning values against a sample size.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(k) = self.basis_dim() {
            if k < 4 {
                return Err(Error::Domain(format!(
                    "{self}: basis dimension {k} is below 4"
                )));
            }
            if k > n {
                return Err(Error::Domain(format!(
                    "{self}: basis dimension {k} exceeds n = {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn estimate(&self, data: &Dataset, cache: &mut BasisCache) -> Result<BetaEstimate> {
        self.validate(data.n())?;
        match *self {
            MethodSpec::Ns => estimate_ns(data),
            MethodSpec::Fdf { df } => estimate_fdf_with(data, cache.basis(df + 1)?),
            MethodSpec::Ps { k } => estimate_ps_with(data, cache.basis(k)?),
            MethodSpec::Eps { k, family } => estimate_eps_with(
                data,
                cache.basis(k)?,
                family.unwrap_or_else(|| default_exposure_family(data.exposure_kind)),
            ),
            MethodSpec::SpatialPlus { k } => {
                estimate_spatialplus_with(data, cache.basis(k)?, Family::GaussianIdentity)
            }
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Ns => write!(f, "NS"),
            MethodSpec::Fdf { df } => write!(f, "F-DF:{df}"),
            MethodSpec::Ps { k } => write!(f, "PS:K={k}"),
            MethodSpec::Eps { k, family: None } => write!(f, "E-PS:K={k}"),
            MethodSpec::Eps {
                k,
                family: Some(fam),
            } => write!(f, "E-PS:K={k}:{}", fam.label()),
            MethodSpec::SpatialPlus { k } => write!(f, "Spatial+:K={k}"),
        }
    }
}

fn parse_k(s: &str, whole: &str) -> Result<usize> {
    let digits = s
        .strip_prefix("K=")
        .or_else(|| s.strip_prefix("k="))
        .unwrap_or(s);
    digits
        .parse()
        .map_err(|_| Error::Usage(format!("bad basis dimension {s:?} in method {whole:?}")))
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let too_many = |max: usize| -> Result<()> {
            if rest.len() > max {
                Err(Error::Usage(format!("too many fields in method {s:?}")))
            } else {
                Ok(())
            }
        };
        let k_or_default =
            |i: usize| -> Result<usize> { rest.get(i).map_or(Ok(DEFAULT_K), |p| parse_k(p, s)) };
        match name.to_ascii_uppercase().as_str() {
            "NS" => {
                too_many(0)?;
                Ok(MethodSpec::Ns)
            }
            "F-DF" | "FDF" => {
                too_many(1)?;
                let df = rest.first().ok_or_else(|| {
                    Error::Usage(format!("method {s:?} needs a DF count, e.g. F-DF:50"))
                })?;
                let df = df
                    .strip_prefix("DF=")
                    .or_else(|| df.strip_prefix("df="))
                    .unwrap_or(df)
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad DF count in method {s:?}")))?;
                Ok(MethodSpec::Fdf { df })
            }
            "PS" => {
                too_many(1)?;
                Ok(MethodSpec::Ps {
                    k: k_or_default(0)?,
                })
            }
            "E-PS" | "EPS" => {
                too_many(2)?;
                let family = match rest.get(1) {
                    None => None,
                    Some(f) => Some(Family::from_label(f).ok_or_else(|| {
                        Error::Usage(format!("unknown exposure family {f:?} in method {s:?}"))
                    })?),
                };
                Ok(MethodSpec::Eps {
                    k: k_or_default(0)?,
                    family,
                })
            }
            "SPATIAL+" | "SPATIALPLUS" => {
                too_many(1)?;
                Ok(MethodSpec::SpatialPlus {
                    k: k_or_default(0)?,
                })
            }
            _ => Err(Error::Usage(format!("unknown method {s:?}"))),
        }
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<MethodSpec>> {
    let methods: Vec<MethodSpec> = list
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::Usage("method list is empty".into()));
    }
    Ok(methods)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_vec;
    use crate::rng::keyed_stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Exposure and outcome share a smooth confounder.
    fn confounded(n: usize, seed: u64) -> Dataset {
        let mut rng = keyed_stream(seed, &[b"est"]);
        let locs = LocationSet::uniform(n, &mut rng).unwrap();
        let zc: Vec<f64> = locs
            .coords()
            .iter()
            .map(|p| (3.0 * p[0]).sin() + p[1] * p[1])
            .collect();
        let ex = normals(n, &mut rng);
        let ey = normals(n, &mut rng);
        let x: Vec<f64> = (0..n).map(|i| zc[i] + 0.7 * ex[i]).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 3.0 * x[i] + 2.0 * zc[i] + 0.5 * ey[i])
            .collect();
        Dataset::new(locs, x, y, ExposureKind::Continuous)
            .unwrap()
            .with_truth(Truth {
                beta: 3.0,
                gamma: 2.0,
                eps_x: ex.iter().map(|e| 0.7 * e).collect(),
                eps_y: ey,
                x0: zc.clone(),
                z_c: Some(zc),
                ..Truth::default()
            })
    }

    #[test]
    fn ns_recovers_exact_line() {
        let locs = LocationSet::new((0..6).map(|i| [0.1 * i as f64, 0.5]).collect()).unwrap();
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let d = Dataset::new(locs, x, y, ExposureKind::Continuous).unwrap();
        let e = estimate_ns(&d).unwrap();
        assert!((e.beta_hat - 3.0).abs() < 1e-12);
        assert!(e.se < 1e-6);
        assert_eq!(e.lambda_used, None);
    }

    #[test]
    fn ns_orthogonal_exposure_gives_zero() {
        let locs = LocationSet::new((0..4).map(|i| [0.2 * i as f64, 0.2]).collect()).unwrap();
        let d = Dataset::new(
            locs,
            vec![1.0, -1.0, 1.0, -1.0],
            vec![1.0, 1.0, -1.0, -1.0],
            ExposureKind::Continuous,
        )
        .unwrap();
        assert!(estimate_ns(&d).unwrap().beta_hat.abs() < 1e-12);
    }

    #[test]
    fn spatial_methods_reduce_confounding_bias() {
        let d = confounded(400, 1);
        let mut cache = BasisCache::new(&d.locations).unwrap();
        let ns = estimate_ns(&d).unwrap();
        assert!(ns.beta_hat - 3.0 > 0.5, "ns {}", ns.beta_hat);
        for m in ["PS:K=40", "E-PS:K=40", "Spatial+:K=40", "F-DF:39"] {
            let spec: MethodSpec = m.parse().unwrap();
            let e = spec.estimate(&d, &mut cache).unwrap();
            assert!((e.beta_hat - 3.0).abs() < 0.25, "{m}: {}", e.beta_hat);
            assert!(e.se > 0.0);
        }
    }

    #[test]
    fn confounder_in_basis_span_is_removed_exactly() {
        let mut rng = keyed_stream(2, &[b"span"]);
        let n = 150;
        let locs = LocationSet::uniform(n, &mut rng).unwrap();
        let basis = TprsKernel::new(&locs).unwrap().basis(12).unwrap();
        let coef: Vec<f64> = (0..basis.ncols())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let zc = mat_vec(basis.design.as_ref(), &coef);
        let ex = normals(n, &mut rng);
        let x: Vec<f64> = (0..n).map(|i| zc[i] + ex[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| 3.0 * x[i] + 4.0 * zc[i]).collect();
        let d = Dataset::new(locs, x, y, ExposureKind::Continuous).unwrap();
        let e = estimate_fdf_with(&d, &basis).unwrap();
        assert!((e.beta_hat - 3.0).abs() < 1e-9);
        assert_eq!(e.variant, "11");
    }

    #[test]
    fn fdf_equals_ps_at_zero_lambda() {
        let d = confounded(120, 3);
        let basis = TprsKernel::new(&d.locations).unwrap().basis(15).unwrap();
        let a = estimate_fdf_with(&d, &basis).unwrap();
        let b = estimate_ps_fixed(&d, &basis, 0.0).unwrap();
        assert_eq!(a.beta_hat, b.beta_hat);
        assert_eq!(a.se, b.se);
    }

    #[test]
    fn outcome_shift_and_scale() {
        let d = confounded(150, 4);
        let mut cache = BasisCache::new(&d.locations).unwrap();
        let specs = ["NS", "F-DF:20", "PS:K=21", "E-PS:K=21", "Spatial+:K=21"];
        for m in specs {
            let spec: MethodSpec = m.parse().unwrap();
            let base = spec.estimate(&d, &mut cache).unwrap();
            assert_eq!(base.variant, spec.variant(ExposureKind::Continuous));
            let mut shifted = d.clone();
            shifted.outcome.iter_mut().for_each(|v| *v += 17.0);
            let s = spec.estimate(&shifted, &mut cache).unwrap();
            assert!(
                (s.beta_hat - base.beta_hat).abs() < 1e-7 * base.beta_hat.abs(),
                "{m} shift"
            );
            let mut scaled = d.clone();
            scaled.outcome.iter_mut().for_each(|v| *v *= -2.5);
            let s = spec.estimate(&scaled, &mut cache).unwrap();
            assert!(
                (s.beta_hat + 2.5 * base.beta_hat).abs() < 1e-6 * base.beta_hat.abs(),
                "{m} scale"
            );
        }
    }

    #[test]
    fn repeat_invocations_identical() {
        let d = confounded(120, 5);
        for m in ["NS", "F-DF:10", "PS:K=20", "E-PS:K=20", "Spatial+:K=20"] {
            let spec: MethodSpec = m.parse().unwrap();
            let a = spec
                .estimate(&d, &mut BasisCache::new(&d.locations).unwrap())
                .unwrap();
            let b = spec
                .estimate(&d, &mut BasisCache::new(&d.locations).unwrap())
                .unwrap();
            assert_eq!(a.beta_hat.to_bits(), b.beta_hat.to_bits());
            assert_eq!(a.se.to_bits(), b.se.to_bits());
        }
    }

    #[test]
    fn eps_first_stage_residual_tracks_nonspatial_noise() {
        let d = confounded(500, 6);
        let basis = TprsKernel::new(&d.locations).unwrap().basis(50).unwrap();
        let stage1 = exposure_model(&d, &basis, Family::GaussianIdentity).unwrap();
        assert!(stage1.boundary.is_none());
        let r = stage1.fit.residuals(&d.exposure);
        let ex = &d.truth.as_ref().unwrap().eps_x;
        assert!(correlation(&r, ex) > 0.9);
    }

    #[test]
    fn white_noise_exposure() {
        let mut rng = keyed_stream(7, &[b"wn"]);
        let n = 300;
        let locs = LocationSet::uniform(n, &mut rng).unwrap();
        let x = normals(n, &mut rng);
        let zy: Vec<f64> = locs
            .coords()
            .iter()
            .map(|p| 2.0 * (4.0 * p[0]).cos())
            .collect();
        let e = normals(n, &mut rng);
        let y: Vec<f64> = (0..n).map(|i| 3.0 * x[i] + zy[i] + e[i]).collect();
        let d = Dataset::new(locs, x, y, ExposureKind::Continuous).unwrap();
        let basis = TprsKernel::new(&d.locations).unwrap().basis(30).unwrap();
        assert!(estimate_pns_with(&d, &basis).unwrap() > 0.9);
        let stage1 = exposure_model(&d, &basis, Family::GaussianIdentity).unwrap();
        assert!(
            stage1.fit.edf_smooth < 10.0,
            "edf {}",
            stage1.fit.edf_smooth
        );
        let ps = estimate_ps_with(&d, &basis).unwrap();
        let sp = estimate_spatialplus_with(&d, &basis, Family::GaussianIdentity).unwrap();
        assert!((ps.beta_hat - sp.beta_hat).abs() < 0.02);
    }

    #[test]
    fn covariates_enter_the_design() {
        let mut d = confounded(200, 8);
        let mut rng = keyed_stream(8, &[b"cov"]);
        let c = normals(200, &mut rng);
        for i in 0..200 {
            d.outcome[i] += 5.0 * c[i];
        }
        let without = estimate_ns(&d).unwrap();
        let d = d
            .with_covariates(Mat::from_fn(200, 1, |i, _| c[i]))
            .unwrap();
        let with = estimate_ns(&d).unwrap();
        assert!(with.se < without.se);
        let e = estimate_eps(&d, 20, Family::GaussianIdentity).unwrap();
        assert!((e.beta_hat - 3.0).abs() < 0.3);
    }

    #[test]
    fn binary_exposure_families() {
        let mut rng = keyed_stream(9, &[b"bin"]);
        let n = 300;
        let locs = LocationSet::uniform(n, &mut rng).unwrap();
        let zc: Vec<f64> = locs
            .coords()
            .iter()
            .map(|p| 1.5 * (3.0 * p[0]).sin())
            .collect();
        let x: Vec<f64> = zc
            .iter()
            .map(|z| {
                if z + rng.sample::<f64, _>(StandardNormal) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 3.0 * x[i] + zc[i] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let d = Dataset::new(locs, x, y, ExposureKind::Binary).unwrap();
        let mut cache = BasisCache::new(&d.locations).unwrap();
        for fam in ["logit", "probit", "linear"] {
            let spec: MethodSpec = format!("E-PS:K=30:{fam}").parse().unwrap();
            let e = spec.estimate(&d, &mut cache).unwrap();
            assert_eq!(e.variant, format!("K=30:{fam}"));
            assert_eq!(e.variant, spec.variant(ExposureKind::Binary));
            assert!(e.beta_hat.is_finite() && e.se > 0.0);
        }
        let default = MethodSpec::Eps {
            k: 30,
            family: None,
        }
        .estimate(&d, &mut cache)
        .unwrap();
        assert_eq!(default.variant, "K=30:logit");
        assert!(matches!(
            "Spatial+:K=30"
                .parse::<MethodSpec>()
                .unwrap()
                .estimate(&d, &mut cache),
            Err(Error::Unsupported(_))
        ));
        let p = estimate_pns_with(&d, cache.basis(30).unwrap()).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn binomial_family_rejected_for_continuous_exposure() {
        let d = confounded(60, 10);
        assert!(estimate_eps(&d, 10, Family::BinomialLogit).is_err());
    }

    #[test]
    fn method_spec_round_trip() {
        for s in [
            "NS",
            "F-DF:50",
            "PS:K=500",
            "E-PS:K=1000:logit",
            "E-PS:K=500",
            "Spatial+:K=500",
        ] {
            let m: MethodSpec = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert_eq!(
            "PS".parse::<MethodSpec>().unwrap(),
            MethodSpec::Ps { k: DEFAULT_K }
        );
        assert_eq!(
            "e-ps:500:probit".parse::<MethodSpec>().unwrap().to_string(),
            "E-PS:K=500:probit"
        );
        for bad in ["XX", "F-DF", "PS:K=abc", "E-PS:K=5:weird", "NS:3"] {
            assert!(bad.parse::<MethodSpec>().is_err(), "{bad}");
        }
        assert!("F-DF:999999"
            .parse::<MethodSpec>()
            .unwrap()
            .validate(2500)
            .is_err());
        assert!("F-DF:2"
            .parse::<MethodSpec>()
            .unwrap()
            .validate(2500)
            .is_err());
        assert_eq!(parse_methods("NS, PS:K=500,E-PS:K=500").unwrap().len(), 3);
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }
}
