//! Builds thin-plate regression spline bases of several dimensions from one
//! kernel decomposition and shows how the effective degrees of freedom of
//! the smooth shrink as λ grows.

use faer::Mat;
use spatial_confounding::rng::keyed_stream;
use spatial_confounding::tprs::effective_df;
use spatial_confounding::{LocationSet, TprsKernel};

fn main() -> spatial_confounding::Result<()> {
    let mut rng = keyed_stream(3, &[b"tprs"]);
    let locs = LocationSet::uniform(500, &mut rng)?;
    let kernel = TprsKernel::new(&locs)?;
    println!("{} distinct locations", kernel.distinct());

    let intercept = Mat::<f64>::from_fn(locs.len(), 1, |_, _| 1.0);
    for k in [10, 50, 200] {
        let basis = kernel.basis(k)?;
        print!(
            "K = {k:>3}: {} columns, {} unpenalized; EDF at λ =",
            basis.ncols(),
            basis.null_dim
        );
        for lambda in [0.0, 1e-4, 1e-2, 1.0, 1e4] {
            let edf = effective_df(&basis, &intercept, lambda, None)?;
            print!(" {lambda:e}: {edf:.1}");
        }
        println!();
    }
    Ok(())
}
