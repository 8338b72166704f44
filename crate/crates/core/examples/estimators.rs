//! Generates one confounded dataset and compares every estimator on it,
//! together with the estimated non-spatial share of exposure variability.

use spatial_confounding::estimators::{estimate_pns_with, parse_methods, BasisCache};
use spatial_confounding::sim::replication_dataset;
use spatial_confounding::Scenario;

fn main() -> spatial_confounding::Result<()> {
    let scenario = Scenario::continuous(0.5, Some(0.04), Some(0.6), None).with_n(1000);
    println!("{scenario}");
    let data = replication_dataset(&scenario, 2024, 0)?;
    let mut cache = BasisCache::new(&data.locations)?;

    let methods = parse_methods("NS,F-DF:10,F-DF:100,PS:K=200,E-PS:K=200,Spatial+:K=200")?;
    println!(
        "{:<9} {:<8} {:>8} {:>8} {:>11} {:>8}",
        "method", "variant", "beta", "se", "lambda", "edf"
    );
    for m in &methods {
        let e = m.estimate(&data, &mut cache)?;
        println!(
            "{:<9} {:<8} {:>8.4} {:>8.4} {:>11} {:>8}",
            e.method.label(),
            e.variant,
            e.beta_hat,
            e.se,
            e.lambda_used.map_or("-".into(), |l| format!("{l:.3e}")),
            e.edf_smooth.map_or("-".into(), |d| format!("{d:.1}")),
        );
    }
    println!("true beta = {}", scenario.beta);
    println!(
        "estimated P_NS = {:.3}",
        estimate_pns_with(&data, cache.basis(200)?)?
    );
    Ok(())
}
