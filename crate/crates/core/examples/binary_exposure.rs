//! Binary exposure generated by thresholding a latent spatial variable:
//! the exposure-penalized spline with linear, probit and logistic exposure
//! models.

use spatial_confounding::estimators::{BasisCache, MethodSpec};
use spatial_confounding::sim::replication_dataset;
use spatial_confounding::{Family, Scenario};

fn main() -> spatial_confounding::Result<()> {
    let scenario = Scenario::binary(Some(0.04), Some(0.6)).with_n(800);
    let data = replication_dataset(&scenario, 5, 0)?;
    let share = data.exposure.iter().sum::<f64>() / data.n() as f64;
    println!("{scenario}: {:.1}% exposed", 100.0 * share);

    let mut cache = BasisCache::new(&data.locations)?;
    let mut methods = vec![MethodSpec::Ns, MethodSpec::Ps { k: 150 }];
    for family in [
        Family::GaussianIdentity,
        Family::BinomialProbit,
        Family::BinomialLogit,
    ] {
        methods.push(MethodSpec::Eps {
            k: 150,
            family: Some(family),
        });
    }
    for m in methods {
        let e = m.estimate(&data, &mut cache)?;
        println!(
            "{:<20} beta = {:.4}  se = {:.4}",
            m.to_string(),
            e.beta_hat,
            e.se
        );
        for w in &e.warnings {
            println!("    warning: {w:?}");
        }
    }
    Ok(())
}
