use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use spatial_confounding::cli::{main_with_args, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL};
use spatial_confounding::report::{
    format_number, parse_number, REPLICATION_COLUMNS, SUMMARY_COLUMNS,
};

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["spconf"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    main_with_args(argv)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn main_grid_row_count_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = [
        "--grid",
        "main",
        "--methods",
        "NS",
        "--reps",
        "5",
        "--n",
        "400",
        "--seed",
        "3",
    ];
    assert_eq!(run(&args, &a), EXIT_OK);
    let (header, rows) = read_csv(&a.join("replications.csv"));
    assert_eq!(header, REPLICATION_COLUMNS);
    assert_eq!(rows.len(), 44 * 5);
    let (sheader, srows) = read_csv(&a.join("summary.csv"));
    assert_eq!(sheader, SUMMARY_COLUMNS);
    assert_eq!(srows.len(), 44);

    let mut parallel = args.to_vec();
    parallel.extend_from_slice(&["--workers", "4"]);
    assert_eq!(run(&parallel, &b), EXIT_OK);
    for f in ["replications.csv", "summary.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, frac) = (h.floor() as usize, h.fract());
    if lo + 1 < sorted.len() {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    } else {
        sorted[lo]
    }
}

#[test]
fn summary_recomputes_from_replications() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let args = [
        "--grid",
        "appendix_a",
        "--methods",
        "NS,PS:K=30,E-PS:K=30",
        "--reps",
        "6",
        "--n",
        "150",
    ];
    assert_eq!(run(&args, &out), EXIT_OK);
    let (h, reps) = read_csv(&out.join("replications.csv"));
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let mut groups: BTreeMap<(String, String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &reps {
        assert_eq!(r[col("failed")], "0");
        let beta = parse_number(&r[col("beta_hat")]).unwrap().unwrap();
        let se = parse_number(&r[col("se")]).unwrap().unwrap();
        groups
            .entry((
                r[col("scenario_id")].clone(),
                r[col("method")].clone(),
                r[col("variant")].clone(),
            ))
            .or_default()
            .push((beta, se));
    }
    let (sh, rows) = read_csv(&out.join("summary.csv"));
    assert_eq!(rows.len(), groups.len());
    let scol = |name: &str| sh.iter().position(|c| c == name).unwrap();
    let truth = 3.0;
    for row in rows {
        let key = (
            row[scol("scenario_id")].clone(),
            row[scol("method")].clone(),
            row[scol("variant")].clone(),
        );
        let g = &groups[&key];
        let n = g.len() as f64;
        let mean = g.iter().map(|p| p.0).sum::<f64>() / n;
        let sd = (g.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let rmse = (g.iter().map(|p| (p.0 - truth).powi(2)).sum::<f64>() / n).sqrt();
        let se_ratio = g.iter().map(|p| p.1).sum::<f64>() / n / sd;
        let mut sorted: Vec<f64> = g.iter().map(|p| p.0).collect();
        sorted.sort_by(f64::total_cmp);
        let expect = [
            ("mean_beta", mean),
            ("bias", mean - truth),
            ("rmse", rmse),
            ("se_ratio", se_ratio),
            ("q25", quantile(&sorted, 0.25)),
            ("q75", quantile(&sorted, 0.75)),
            ("mc_se_bias", sd / n.sqrt()),
        ];
        for (name, want) in expect {
            let got = parse_number(&row[scol(name)]).unwrap().unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "{key:?} {name}: {got} vs {want}"
            );
        }
        assert_eq!(row[scol("n_reps")], g.len().to_string());
        assert_eq!(row[scol("failure_count")], "0");
    }
}

#[test]
fn numbers_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        run(
            &[
                "--grid",
                "appendix_b",
                "--methods",
                "PS:K=20",
                "--reps",
                "2",
                "--n",
                "100"
            ],
            &out
        ),
        EXIT_OK
    );
    let (h, rows) = read_csv(&out.join("replications.csv"));
    for r in rows {
        for (name, field) in h.iter().zip(&r) {
            if ["beta_hat", "se", "lambda", "edf_smooth"].contains(&name.as_str()) {
                let v = parse_number(field).unwrap().unwrap();
                assert_eq!(format_number(v), *field);
                assert_eq!(field.parse::<f64>().unwrap().to_bits(), v.to_bits());
            }
        }
    }
    for v in [
        0.1,
        1.0 / 3.0,
        -2.5e-300,
        6.02214076e23,
        f64::MIN_POSITIVE,
        f64::MAX,
    ] {
        assert_eq!(parse_number(&format_number(v)).unwrap(), Some(v));
    }
}

#[test]
fn partial_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let code = run(
        &[
            "--grid",
            "appendix_b",
            "--methods",
            "NS,Spatial+:K=20",
            "--reps",
            "2",
            "--n",
            "100",
        ],
        &out,
    );
    assert_eq!(code, EXIT_PARTIAL);
    let (h, rows) = read_csv(&out.join("replications.csv"));
    let failed = h.iter().position(|c| c == "failed").unwrap();
    let method = h.iter().position(|c| c == "method").unwrap();
    for r in rows {
        assert_eq!(r[failed], if r[method] == "Spatial+" { "1" } else { "0" });
    }
}

#[test]
fn config_file_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("figs");
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "# small run\ngrid = main\nmethods = NS,PS:K=20\nreps = 3\nn = 80\nplots = true\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    assert_eq!(
        main_with_args(["spconf", "--config", cfg.to_str().unwrap()]),
        EXIT_OK
    );
    let mut svgs: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f.ends_with(".svg"))
        .collect();
    svgs.sort();
    assert_eq!(svgs.len(), 3, "{svgs:?}");
    let svg = fs::read_to_string(out.join(&svgs[0])).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("stroke-dasharray"));
}

#[test]
fn custom_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    fs::write(
        &grid,
        "id,n,sigma_x2,phi_u,phi_c,phi_y,nu,beta,gamma,gamma_y,sigma_y2,delta_u,delta_c,exposure_kind\n\
         mine,120,0.5,0.04,0.6,NA,1.5,3,1,0,1,1,1,continuous\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        run(
            &[
                "--grid",
                grid.to_str().unwrap(),
                "--methods",
                "NS",
                "--reps",
                "3"
            ],
            &out
        ),
        EXIT_OK
    );
    let (_, rows) = read_csv(&out.join("replications.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[0] == "mine"));
}

#[test]
fn usage_errors_are_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["--methods", "XYZ"], &out), EXIT_FATAL);
    assert_eq!(run(&["--grid", "nowhere.csv"], &out), EXIT_FATAL);
    assert_eq!(
        run(&["--methods", "PS:K=50", "--n", "20", "--reps", "1"], &out),
        EXIT_FATAL
    );
    assert_eq!(run(&["--reps", "0"], &out), EXIT_FATAL);
    assert!(!out.exists());
}

#[test]
fn binary_reports_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_spconf");
    let help = Command::new(exe).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&help.stdout).contains("--methods"));
    let bad = Command::new(exe).args(["--bogus"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_FATAL));

    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(exe)
        .args([
            "--grid",
            "appendix_a",
            "--methods",
            "NS",
            "--reps",
            "2",
            "--n",
            "60",
            "--out",
        ])
        .arg(dir.path())
        .env("SPCONF_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert!(dir.path().join("summary.csv").exists());
}
