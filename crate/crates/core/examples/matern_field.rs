//! Draws a standardized Matérn (ν = 3/2) field on random locations and
//! prints the effective ranges of the three decay values used in the
//! simulation grids.

use spatial_confounding::field::{effective_range, matern_correlation, sample_gp, z_score};
use spatial_confounding::rng::keyed_stream;
use spatial_confounding::sim::PHI_VALUES;
use spatial_confounding::{LocationSet, MaternSpec};

fn main() -> spatial_confounding::Result<()> {
    for phi in PHI_VALUES {
        let spec = MaternSpec::three_halves(phi)?;
        println!(
            "phi = {phi:<5} effective range = {:.3}  rho(0.1) = {:.4}",
            effective_range(&spec),
            matern_correlation(0.1, &spec)?
        );
    }

    let mut rng = keyed_stream(7, &[b"example"]);
    let locs = LocationSet::uniform(400, &mut rng)?;
    let raw = sample_gp(&locs, &MaternSpec::three_halves(0.15)?, &mut rng)?;
    let z = z_score(&raw)?;
    let mean = z.values.iter().sum::<f64>() / z.values.len() as f64;
    let var =
        z.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (z.values.len() - 1) as f64;
    println!(
        "standardized field: n = {}, mean = {mean:.2e}, var = {var:.6}",
        z.values.len()
    );
    for (p, v) in locs.coords().iter().zip(&z.values).take(5) {
        println!("  ({:.3}, {:.3}) -> {v:+.3}", p[0], p[1]);
    }
    Ok(())
}
