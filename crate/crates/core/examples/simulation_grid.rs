//! A small Monte Carlo study over a slice of the main scenario grid,
//! summarized as bias, rMSE and SE ratio per method.

use spatial_confounding::estimators::parse_methods;
use spatial_confounding::sim::{run_grid, summarize, Job};
use spatial_confounding::{scenario_grid, GridKind, RunOptions};

fn main() -> spatial_confounding::Result<()> {
    let methods = parse_methods("NS,PS:K=100,E-PS:K=100")?;
    let jobs: Vec<Job> = scenario_grid(GridKind::Main)
        .into_iter()
        .filter(|s| s.sigma_x2 == 0.5 && s.phi_c == Some(0.6))
        .map(|s| Job {
            scenario: s.with_n(500),
            methods: methods.clone(),
        })
        .collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let records = run_grid(&jobs, &RunOptions::new(20, 1).workers(workers))?;
    println!(
        "{:<22} {:<9} {:>7} {:>7} {:>8}",
        "scenario", "method", "bias", "rmse", "se_ratio"
    );
    for row in summarize(&jobs, &records) {
        println!(
            "{:<22} {:<9} {:>7.3} {:>7.3} {:>8.3}",
            row.scenario_id,
            row.method.label(),
            row.bias,
            row.rmse,
            row.se_ratio
        );
    }
    Ok(())
}
