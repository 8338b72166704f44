//! Fits a penalized spline of location by GCV and prints the criterion
//! around the selected smoothing parameter.

use rand::Rng;
use rand_distr::StandardNormal;
use spatial_confounding::pls::{design_with_intercept, fit_penalized, gcv_score, select_lambda};
use spatial_confounding::rng::keyed_stream;
use spatial_confounding::{build_tprs, Family, LocationSet, ModelSpec};

fn main() -> spatial_confounding::Result<()> {
    let mut rng = keyed_stream(11, &[b"gcv"]);
    let n = 800;
    let locs = LocationSet::uniform(n, &mut rng)?;
    let y: Vec<f64> = locs
        .coords()
        .iter()
        .map(|p| {
            (6.0 * p[0]).sin() * (4.0 * p[1]).cos() + 0.5 * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let basis = build_tprs(&locs, 100)?;
    let intercept = design_with_intercept(n, &[]);
    let spec = ModelSpec::new(&y, intercept.as_ref(), Family::GaussianIdentity).with_basis(&basis);

    let sel = select_lambda(&spec)?;
    println!(
        "selected lambda = {:.4e} (boundary: {:?}), edf smooth = {:.2}, GCV = {:.6}, scale = {:.4}",
        sel.lambda, sel.boundary, sel.fit.edf_smooth, sel.fit.gcv, sel.fit.scale
    );
    for factor in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let fit = fit_penalized(&spec, sel.lambda * factor)?;
        println!(
            "  lambda x {factor:<5} edf = {:>6.2}  GCV = {:.6}",
            fit.edf_smooth,
            gcv_score(&fit, n)?
        );
    }
    Ok(())
}
