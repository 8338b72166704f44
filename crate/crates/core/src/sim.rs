//! Monte Carlo harness: scenario grids, dataset generation, parallel
//! replication runs and operating characteristics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{BasisCache, Dataset, ExposureKind, Method, MethodSpec, Truth};
use crate::field::{z_score, GpSampler, LocationSet, MaternSpec};
use crate::pls::FitWarning;
use crate::rng::{keyed_stream, ReplicationStreams, StreamRng};

/// Spatial decay values used throughout the grids.
pub const PHI_VALUES: [f64; 3] = [0.04, 0.15, 0.6];
/// Non-spatial exposure variances of the main grid.
pub const SIGMA_X2_VALUES: [f64; 3] = [0.0, 0.056, 0.5];

/// One data-generating mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub n: usize,
    pub sigma_x2: f64,
    pub phi_u: Option<f64>,
    pub phi_c: Option<f64>,
    pub phi_y: Option<f64>,
    pub nu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub gamma_y: f64,
    pub sigma_y2: f64,
    pub delta_u: f64,
    pub delta_c: f64,
    pub exposure_kind: ExposureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Main,
    AppendixA,
    AppendixB,
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(GridKind::Main),
            "appendix_a" => Ok(GridKind::AppendixA),
            "appendix_b" => Ok(GridKind::AppendixB),
            _ => Err(Error::Usage(format!("unknown grid {s:?}"))),
        }
    }
}

pub const DEFAULT_N: usize = 2500;

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn loadings(phi_u: Option<f64>, phi_c: Option<f64>) -> (f64, f64) {
    if phi_u.is_some() && phi_c.is_some() {
        (0.5, 0.5)
    } else {
        (0.5f64.sqrt(), 0.5f64.sqrt())
    }
}

impl Scenario {
    /// Continuous exposure with the default effect sizes and loadings.
    pub fn continuous(
        sigma_x2: f64,
        phi_u: Option<f64>,
        phi_c: Option<f64>,
        phi_y: Option<f64>,
    ) -> Self {
        let (delta_u, delta_c) = loadings(phi_u, phi_c);
        let prefix = if phi_y.is_some() { "A" } else { "M" };
        let mut id = format!(
            "{prefix}_sx{sigma_x2}_u{}_c{}",
            fmt_opt(phi_u),
            fmt_opt(phi_c)
        );
        if phi_y.is_some() {
            id.push_str(&format!("_y{}", fmt_opt(phi_y)));
        }
        Self {
            id,
            n: DEFAULT_N,
            sigma_x2,
            phi_u,
            phi_c,
            phi_y,
            nu: 1.5,
            beta: 3.0,
            gamma: 1.0,
            gamma_y: if phi_y.is_some() { 1.0 } else { 0.0 },
            sigma_y2: 9.0,
            delta_u,
            delta_c,
            exposure_kind: ExposureKind::Continuous,
        }
    }

    /// Binary exposure `I(x* > 0)` with a standard normal latent error.
    pub fn binary(phi_u: Option<f64>, phi_c: Option<f64>) -> Self {
        let mut s = Self::continuous(1.0, phi_u, phi_c, None);
        s.id = format!("B_u{}_c{}", fmt_opt(phi_u), fmt_opt(phi_c));
        s.exposure_kind = ExposureKind::Binary;
        s
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(format!("scenario {}: {msg}", self.id)));
        if self.id.is_empty() || self.id.contains([',', '"', '\n']) {
            return bad("id must be non-empty without commas or quotes".into());
        }
        if self.n < 2 {
            return bad(format!("n = {} is too small", self.n));
        }
        for (name, phi) in [
            ("phi_u", self.phi_u),
            ("phi_c", self.phi_c),
            ("phi_y", self.phi_y),
        ] {
            if let Some(p) = phi {
                if !(p > 0.0 && p.is_finite()) {
                    return bad(format!("{name} must be positive"));
                }
            }
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad("nu must be positive".into());
        }
        for (name, v) in [("sigma_x2", self.sigma_x2), ("sigma_y2", self.sigma_y2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("gamma_y", self.gamma_y),
            ("delta_u", self.delta_u),
            ("delta_c", self.delta_c),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.exposure_kind == ExposureKind::Continuous
            && self.phi_u.is_none()
            && self.sigma_x2 <= 0.0
        {
            return bad(
                "without an unconfounded spatial component the exposure needs sigma_x2 > 0".into(),
            );
        }
        Ok(())
    }
}

/// Scenarios of a named grid, in a fixed order.
pub fn scenario_grid(kind: GridKind) -> Vec<Scenario> {
    let opts = [Some(0.04), Some(0.15), Some(0.6), None];
    match kind {
        GridKind::Main => {
            let mut out = Vec::new();
            for sx in SIGMA_X2_VALUES {
                for phi_c in opts {
                    for phi_u in opts {
                        if phi_u.is_none() && sx == 0.0 {
                            continue;
                        }
                        out.push(Scenario::continuous(sx, phi_u, phi_c, None));
                    }
                }
            }
            out
        }
        GridKind::AppendixA => permutations()
            .into_iter()
            .map(|(c, u, y)| Scenario::continuous(0.5, Some(u), Some(c), Some(y)))
            .collect(),
        GridKind::AppendixB => {
            let mut out = Vec::new();
            for c in PHI_VALUES {
                for u in PHI_VALUES {
                    if c != u {
                        out.push(Scenario::binary(Some(u), Some(c)));
                    }
                }
            }
            out
        }
    }
}

/// All orderings of the three decay values as `(φ^c, φ^u, φ^y)`.
fn permutations() -> Vec<(f64, f64, f64)> {
    let v = PHI_VALUES;
    let mut out = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                if a != b && b != c && a != c {
                    out.push((v[a], v[b], v[c]));
                }
            }
        }
    }
    out
}

/// Column order of custom scenario files.
pub const SCENARIO_FIELDS: [&str; 14] = [
    "id",
    "n",
    "sigma_x2",
    "phi_u",
    "phi_c",
    "phi_y",
    "nu",
    "beta",
    "gamma",
    "gamma_y",
    "sigma_y2",
    "delta_u",
    "delta_c",
    "exposure_kind",
];

/// Parses one scenario per line (fields in [`SCENARIO_FIELDS`] order, `NA`
/// for an absent component). Blank lines, `#` comments and a header line
/// starting with `id` are skipped. An `NA` sample size becomes `default_n`.
pub fn parse_scenario_file(text: &str, default_n: usize) -> Result<Vec<Scenario>> {
    let mut out: Vec<Scenario> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("id,") {
            continue;
        }
        let err = |msg: String| Error::Usage(format!("scenario line {}: {msg}", lineno + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != SCENARIO_FIELDS.len() {
            return Err(err(format!(
                "expected {} fields, found {}",
                SCENARIO_FIELDS.len(),
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse::<f64>().map_err(|_| {
                err(format!(
                    "{} is not a number: {:?}",
                    SCENARIO_FIELDS[i], fields[i]
                ))
            })
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if fields[i].eq_ignore_ascii_case("NA") {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let n = if fields[1].eq_ignore_ascii_case("NA") {
            default_n
        } else {
            fields[1]
                .parse()
                .map_err(|_| err(format!("n is not an integer: {:?}", fields[1])))?
        };
        let exposure_kind = match fields[13].to_ascii_lowercase().as_str() {
            "continuous" => ExposureKind::Continuous,
            "binary" | "binary-latent-probit" => ExposureKind::Binary,
            other => return Err(err(format!("unknown exposure kind {other:?}"))),
        };
        let s = Scenario {
            id: fields[0].to_string(),
            n,
            sigma_x2: num(2)?,
            phi_u: opt(3)?,
            phi_c: opt(4)?,
            phi_y: opt(5)?,
            nu: num(6)?,
            beta: num(7)?,
            gamma: num(8)?,
            gamma_y: num(9)?,
            sigma_y2: num(10)?,
            delta_u: num(11)?,
            delta_c: num(12)?,
            exposure_kind,
        };
        s.validate().map_err(|e| err(e.to_string()))?;
        if out.iter().any(|o| o.id == s.id) {
            return Err(err(format!("duplicate scenario id {:?}", s.id)));
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(Error::Usage("scenario file contains no scenarios".into()));
    }
    Ok(out)
}

/// Locations plus Gaussian-process samplers built on them, one per
/// covariance.
pub struct FieldCache {
    locations: LocationSet,
    samplers: Vec<((u64, u64), GpSampler)>,
}

impl FieldCache {
    pub fn new(locations: LocationSet) -> Self {
        Self {
            locations,
            samplers: Vec::new(),
        }
    }

    pub fn locations(&self) -> &LocationSet {
        &self.locations
    }

    pub fn sampler(&mut self, spec: &MaternSpec) -> Result<&GpSampler> {
        let key = (spec.nu().to_bits(), spec.phi().to_bits());
        if let Some(i) = self.samplers.iter().position(|(k, _)| *k == key) {
            return Ok(&self.samplers[i].1);
        }
        let s = GpSampler::new(&self.locations, spec)?;
        self.samplers.push((key, s));
        Ok(&self.samplers.last().expect("just pushed").1)
    }
}

fn standardized_component(
    fields: &mut FieldCache,
    nu: f64,
    phi: Option<f64>,
    rng: &mut StreamRng,
) -> Result<Option<Vec<f64>>> {
    let Some(phi) = phi else { return Ok(None) };
    let spec = MaternSpec::new(nu, phi)?;
    let raw = fields.sampler(&spec)?.sample(rng);
    Ok(Some(z_score(&raw)?.values))
}

/// Draws the spatial components and errors of one dataset. `stream` hands
/// out an independent generator per named component.
pub fn realize(
    scenario: &Scenario,
    fields: &mut FieldCache,
    mut stream: impl FnMut(&str) -> StreamRng,
) -> Result<Dataset> {
    scenario.validate()?;
    let n = scenario.n;
    if fields.locations().len() != n {
        return Err(Error::Dimension(format!(
            "scenario {} has n = {n} but {} locations were supplied",
            scenario.id,
            fields.locations().len()
        )));
    }
    let z_u = standardized_component(fields, scenario.nu, scenario.phi_u, &mut stream("z_u"))?;
    let z_c = standardized_component(fields, scenario.nu, scenario.phi_c, &mut stream("z_c"))?;
    let z_y = standardized_component(fields, scenario.nu, scenario.phi_y, &mut stream("z_y"))?;
    let sd_x = match scenario.exposure_kind {
        ExposureKind::Continuous => scenario.sigma_x2.sqrt(),
        ExposureKind::Binary => 1.0,
    };
    let normals = |rng: &mut StreamRng, sd: f64| -> Vec<f64> {
        (0..n)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let eps_x = normals(&mut stream("eps_x"), sd_x);
    let eps_y = normals(&mut stream("eps_y"), scenario.sigma_y2.sqrt());

    let at = |z: &Option<Vec<f64>>, i: usize| z.as_ref().map_or(0.0, |v| v[i]);
    let x0: Vec<f64> = (0..n)
        .map(|i| scenario.delta_u * at(&z_u, i) + scenario.delta_c * at(&z_c, i))
        .collect();
    let latent: Vec<f64> = (0..n).map(|i| x0[i] + eps_x[i]).collect();
    let exposure: Vec<f64> = match scenario.exposure_kind {
        ExposureKind::Continuous => latent,
        ExposureKind::Binary => latent
            .iter()
            .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
            .collect(),
    };
    let outcome: Vec<f64> = (0..n)
        .map(|i| {
            scenario.beta * exposure[i]
                + scenario.gamma * at(&z_c, i)
                + scenario.gamma_y * at(&z_y, i)
                + eps_y[i]
        })
        .collect();
    let data = Dataset::new(
        fields.locations().clone(),
        exposure,
        outcome,
        scenario.exposure_kind,
    )?;
    Ok(data.with_truth(Truth {
        beta: scenario.beta,
        gamma: scenario.gamma,
        gamma_y: scenario.gamma_y,
        z_c,
        z_u,
        z_y,
        eps_x,
        eps_y,
        x0,
    }))
}

/// Draws locations and all components from `rng`.
pub fn generate_dataset<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Dataset> {
    scenario.validate()?;
    let locations = LocationSet::uniform(scenario.n, rng)?;
    let seed: u64 = rng.random();
    let mut fields = FieldCache::new(locations);
    realize(scenario, &mut fields, |tag| {
        keyed_stream(seed, &[tag.as_bytes()])
    })
}

/// Dataset for one replication of a harness run. Locations depend only on
/// `(master_seed, rep, n)`; every other component is keyed by the scenario
/// id as well.
pub fn replication_dataset(scenario: &Scenario, master_seed: u64, rep: usize) -> Result<Dataset> {
    let streams = ReplicationStreams::new(master_seed, scenario.id.clone(), rep as u64);
    let locations = LocationSet::uniform(scenario.n, &mut streams.locations(scenario.n))?;
    realize(scenario, &mut FieldCache::new(locations), |tag| {
        streams.component(tag)
    })
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub scenario_id: String,
    pub method: Method,
    pub variant: String,
    pub rep: usize,
    /// NaN when failed
    pub beta_hat: f64,
    pub se: f64,
    pub lambda: Option<f64>,
    pub edf_smooth: Option<f64>,
    pub elapsed: f64,
    pub failed: bool,
    pub error: Option<String>,
    pub warnings: Vec<FitWarning>,
}

/// A scenario with the methods to run on it.
#[derive(Debug, Clone)]
pub struct Job {
    pub scenario: Scenario,
    pub methods: Vec<MethodSpec>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub n_reps: usize,
    pub master_seed: u64,
    pub workers: usize,
    /// record wall-clock times; when false `elapsed` is 0 so output is
    /// reproducible byte for byte
    pub timing: bool,
}

impl RunOptions {
    pub fn new(n_reps: usize, master_seed: u64) -> Self {
        Self {
            n_reps,
            master_seed,
            workers: 1,
            timing: false,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn timing(mut self, timing: bool) -> Self {
        self.timing = timing;
        self
    }
}

fn run_replication(
    jobs: &[Job],
    rep: usize,
    opts: &RunOptions,
) -> Result<Vec<Vec<ReplicationRecord>>> {
    // one location set, kernel and sampler set per sample size
    let mut shared: BTreeMap<usize, (FieldCache, Option<BasisCache>)> = BTreeMap::new();
    let mut out = Vec::with_capacity(jobs.len());
    for job in jobs {
        let sc = &job.scenario;
        let (fields, bases) = match shared.entry(sc.n) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                let streams = ReplicationStreams::new(opts.master_seed, "", rep as u64);
                let locs = LocationSet::uniform(sc.n, &mut streams.locations(sc.n))?;
                e.insert((FieldCache::new(locs), None))
            }
        };
        let streams = ReplicationStreams::new(opts.master_seed, sc.id.clone(), rep as u64);
        let data = realize(sc, fields, |tag| streams.component(tag))?;
        let mut records = Vec::with_capacity(job.methods.len());
        for m in &job.methods {
            let result = if m.basis_dim().is_some() {
                if bases.is_none() {
                    *bases = Some(BasisCache::new(fields.locations())?);
                }
                m.estimate(&data, bases.as_mut().expect("cache"))
            } else {
                crate::estimators::estimate_ns(&data)
            };
            records.push(match result {
                Ok(e) => ReplicationRecord {
                    scenario_id: sc.id.clone(),
                    method: e.method,
                    variant: e.variant,
                    rep,
                    beta_hat: e.beta_hat,
                    se: e.se,
                    lambda: e.lambda_used,
                    edf_smooth: e.edf_smooth,
                    elapsed: if opts.timing { e.elapsed } else { 0.0 },
                    failed: false,
                    error: None,
                    warnings: e.warnings,
                },
                Err(err) => ReplicationRecord {
                    scenario_id: sc.id.clone(),
                    method: m.method(),
                    variant: m.variant(sc.exposure_kind),
                    rep,
                    beta_hat: f64::NAN,
                    se: f64::NAN,
                    lambda: None,
                    edf_smooth: None,
                    elapsed: 0.0,
                    failed: true,
                    error: Some(err.to_string()),
                    warnings: Vec::new(),
                },
            });
        }
        out.push(records);
    }
    Ok(out)
}

/// Runs every job for `n_reps` replications on a pool of `workers` threads.
///
/// Records come back ordered by job, then replication, then method, and do
/// not depend on the worker count. Estimator failures are recorded in the
/// output; failures to generate data abort the run.
pub fn run_grid(jobs: &[Job], opts: &RunOptions) -> Result<Vec<ReplicationRecord>> {
    if opts.n_reps == 0 {
        return Err(Error::Domain("n_reps must be at least 1".into()));
    }
    if opts.workers == 0 {
        return Err(Error::Domain("workers must be at least 1".into()));
    }
    for job in jobs {
        job.scenario.validate()?;
        if job.methods.is_empty() {
            return Err(Error::Domain(format!(
                "scenario {} has no methods",
                job.scenario.id
            )));
        }
        for m in &job.methods {
            m.validate(job.scenario.n)?;
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))?;
    let per_rep: Vec<Result<Vec<Vec<ReplicationRecord>>>> = pool.install(|| {
        (0..opts.n_reps)
            .into_par_iter()
            .map(|rep| run_replication(jobs, rep, opts))
            .collect()
    });
    let per_rep: Vec<Vec<Vec<ReplicationRecord>>> = per_rep.into_iter().collect::<Result<_>>()?;
    let mut out = Vec::new();
    for j in 0..jobs.len() {
        for rep in &per_rep {
            out.extend(rep[j].iter().cloned());
        }
    }
    Ok(out)
}

/// Runs one scenario and summarizes it.
pub fn run_scenario(
    scenario: &Scenario,
    methods: &[MethodSpec],
    opts: &RunOptions,
) -> Result<(Vec<ReplicationRecord>, Vec<MetricsRow>)> {
    let jobs = [Job {
        scenario: scenario.clone(),
        methods: methods.to_vec(),
    }];
    let records = run_grid(&jobs, opts)?;
    let rows = summarize(&jobs, &records);
    Ok((records, rows))
}

/// Monte Carlo operating characteristics of one method in one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario_id: String,
    pub method: Method,
    pub variant: String,
    /// successful replications
    pub n_reps: usize,
    pub mean_beta: f64,
    pub bias: f64,
    pub rmse: f64,
    /// mean estimated SE over the sample SD of the estimates
    pub se_ratio: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean_elapsed: f64,
    /// sample SD of the estimates over `sqrt(n_reps)`
    pub mc_se_bias: f64,
    pub failure_count: usize,
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Metrics over successful estimates. Needs at least one estimate; the SD
/// based fields are NaN with fewer than two.
pub fn compute_metrics(
    beta_hat: &[f64],
    se: &[f64],
    elapsed: &[f64],
    true_beta: f64,
) -> Option<MetricsRow> {
    let n = beta_hat.len();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let mean = beta_hat.iter().sum::<f64>() / nf;
    let mse = beta_hat
        .iter()
        .map(|b| (b - true_beta).powi(2))
        .sum::<f64>()
        / nf;
    let sd = if n > 1 {
        (beta_hat.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    let mean_se = se.iter().sum::<f64>() / se.len() as f64;
    let mut sorted = beta_hat.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(MetricsRow {
        scenario_id: String::new(),
        method: Method::Ns,
        variant: String::new(),
        n_reps: n,
        mean_beta: mean,
        bias: mean - true_beta,
        rmse: mse.sqrt(),
        se_ratio: mean_se / sd,
        q25: quantile_type7(&sorted, 0.25),
        q75: quantile_type7(&sorted, 0.75),
        mean_elapsed: elapsed.iter().sum::<f64>() / elapsed.len() as f64,
        mc_se_bias: sd / nf.sqrt(),
        failure_count: 0,
    })
}

/// One row per (scenario, method variant), in job and method order.
pub fn summarize(jobs: &[Job], records: &[ReplicationRecord]) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    for job in jobs {
        let sc = &job.scenario;
        let mut seen: Vec<(Method, String)> = Vec::new();
        for m in &job.methods {
            let key = (m.method(), m.variant(sc.exposure_kind));
            if seen.contains(&key) {
                continue;
            }
            seen.push(key.clone());
            let mine: Vec<&ReplicationRecord> = records
                .iter()
                .filter(|r| r.scenario_id == sc.id && r.method == key.0 && r.variant == key.1)
                .collect();
            rows.push(summarize_records(sc, key.0, &key.1, &mine));
        }
    }
    rows
}

fn summarize_records(
    sc: &Scenario,
    method: Method,
    variant: &str,
    recs: &[&ReplicationRecord],
) -> MetricsRow {
    let ok: Vec<&&ReplicationRecord> = recs.iter().filter(|r| !r.failed).collect();
    let beta: Vec<f64> = ok.iter().map(|r| r.beta_hat).collect();
    let se: Vec<f64> = ok.iter().map(|r| r.se).collect();
    let el: Vec<f64> = ok.iter().map(|r| r.elapsed).collect();
    let failures = recs.len() - ok.len();
    let mut row = compute_metrics(&beta, &se, &el, sc.beta).unwrap_or(MetricsRow {
        scenario_id: String::new(),
        method,
        variant: String::new(),
        n_reps: 0,
        mean_beta: f64::NAN,
        bias: f64::NAN,
        rmse: f64::NAN,
        se_ratio: f64::NAN,
        q25: f64::NAN,
        q75: f64::NAN,
        mean_elapsed: f64::NAN,
        mc_se_bias: f64::NAN,
        failure_count: 0,
    });
    row.scenario_id = sc.id.clone();
    row.method = method;
    row.variant = variant.to_string();
    row.failure_count = failures;
    row
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (n={}, sigma_x2={}, phi_u={}, phi_c={}, phi_y={}, {})",
            self.id,
            self.n,
            self.sigma_x2,
            fmt_opt(self.phi_u),
            fmt_opt(self.phi_c),
            fmt_opt(self.phi_y),
            self.exposure_kind.label()
        )
    }
}
