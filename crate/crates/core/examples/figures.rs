//! Runs the command-line driver on a reduced main grid and writes the CSV
//! tables and SVG figures to a directory (first argument, default
//! `spconf-example-out`).

use spatial_confounding::cli::{main_with_args, EXIT_OK};

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "spconf-example-out".into());
    let code = main_with_args([
        "spconf",
        "--grid",
        "main",
        "--methods",
        "NS,PS:K=60,E-PS:K=60",
        "--reps",
        "4",
        "--n",
        "300",
        "--out",
        &out,
        "--plots",
    ]);
    assert_eq!(code, EXIT_OK);
}
