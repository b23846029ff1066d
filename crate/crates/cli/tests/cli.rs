use std::process::{Command, Output};

fn grushin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin")).args(args).output().expect("spawn grushin")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header and rows of a CSV document, after the metadata comment line.
fn csv(o: &Output) -> (serde_json::Value, Vec<String>, Vec<Vec<String>>) {
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(o);
    let mut lines = text.lines();
    let meta = lines.next().unwrap().strip_prefix("# ").expect("metadata line");
    let meta: serde_json::Value = serde_json::from_str(meta).unwrap();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (meta, header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn trig_alpha_8() {
    let (meta, h, rows) = csv(&grushin(&["trig", "--alpha", "8", "--samples", "2001"]));
    assert_eq!(meta["schema_version"], 1);
    let half = 2.168_204_838_178_412;
    assert!((meta["half_period"].as_f64().unwrap() - half).abs() < 1e-13);
    let (s, r, p) = (col(&h, "sin"), col(&h, "pythagorean_residual"), col(&h, "period"));
    let max = rows.iter().map(|row| num(&row[s]).abs()).fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-6, "{max}");
    assert!(rows.iter().all(|row| num(&row[r]).abs() <= 1e-10));
    assert!(rows.iter().all(|row| (num(&row[p]) - 2.0 * half).abs() < 1e-12));
}

#[test]
fn geodesic_starts_at_base_and_reflects_at_tau() {
    let (meta, h, rows) = csv(&grushin(&[
        "geodesic", "--alpha", "1,2", "--base", "0.7,-1.2,0.3", "--phi", "1.1,2.5", "--samples", "50",
    ]));
    let (x1, x2, hh) = (col(&h, "x1"), col(&h, "x2"), col(&h, "H"));
    assert_eq!(num(&rows[0][col(&h, "t")]), 0.0);
    assert_eq!((num(&rows[0][x1]), num(&rows[0][x2]), num(&rows[0][col(&h, "x3")])), (0.7, -1.2, 0.3));
    assert!(rows.iter().all(|r| (num(&r[hh]) - 0.5).abs() < 1e-10));
    let marked: Vec<_> = rows.iter().filter(|r| r[col(&h, "tau_marker")] == "true").collect();
    assert_eq!(marked.len(), 1);
    let tau = meta["tau"].as_f64().unwrap();
    assert_eq!(num(&marked[0][0]), tau);
    for j in meta["tau_argmin"].as_array().unwrap() {
        let j = j.as_u64().unwrap() as usize;
        let x0 = num(&rows[0][col(&h, &format!("x{j}"))]);
        let xt = num(&marked[0][col(&h, &format!("x{j}"))]);
        assert!((xt + x0).abs() < 1e-10, "x{j}: {xt} vs {x0}");
    }
}

#[test]
fn cut_locus_type2_full_range_is_not_simple() {
    let (meta, h, rows) = csv(&grushin(&["cut-locus", "--alpha", "1,1", "--base", "2.4,1,0", "--samples", "200"]));
    assert_eq!(meta["point_type"], "type2");
    let off = col(&h, "cut_y_offset");
    assert!(rows.iter().all(|r| r[off] == rows[0][off]));
    let (var, simple) = (col(&h, "variant"), col(&h, "simple"));
    let full: Vec<_> = rows.iter().filter(|r| r[var] == "full-range").collect();
    assert!(!full.is_empty());
    assert!(full.iter().all(|r| r[simple] == "false"));
    assert!(rows.iter().filter(|r| r[var] == "restricted").all(|r| r[simple] == "true"));
}

#[test]
fn cut_locus_at_origin_is_two_planes() {
    let (meta, h, rows) = csv(&grushin(&["cut-locus", "--alpha", "2,1", "--base", "0,0,0"]));
    assert_eq!(meta["case"], "x0=y0=0");
    let kind = col(&h, "kind");
    assert_eq!(rows.iter().filter(|r| r[kind] == "surface").count(), 2);
    assert!(rows.iter().all(|r| r[kind] == "surface"));
}

#[test]
fn three_dimensional_commands_reject_other_n() {
    for cmd in ["cut-locus", "classify"] {
        let o = grushin(&[cmd, "--alpha", "1,1,1", "--base", "1,1,1,0"]);
        assert_eq!(o.status.code(), Some(1), "{cmd}");
    }
}

#[test]
fn invalid_input_exits_with_1() {
    for args in [
        &["geodesic", "--alpha", "1,x"][..],
        &["geodesic", "--alpha", "1,1", "--base", "1,1"],
        &["geodesic", "--alpha", "1,1", "--base", "0,1,0", "--phi", "1,1"],
        &["sphere", "--alpha", "1,1", "--base", "1,1,0"],
        &["trig", "--alpha", "1,2"],
        &["no-such-command"],
        &["verify", "--suite", "12"],
    ] {
        assert_eq!(grushin(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["sphere", "--alpha", "1,2", "--base", "1,0.5,0", "--t", "2", "--samples", "6"];
    let (a, b) = (grushin(&args), grushin(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_carries_schema_and_columns() {
    let o = grushin(&["conjugate", "--alpha", "1,1", "--base", "1,1,0", "--covector", "0.3,0.4,0.5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["metadata"]["schema_version"], 1);
    assert_eq!(v["metadata"]["command"], "conjugate");
    let cols = v["columns"].as_array().unwrap();
    assert_eq!(v["rows"][0].as_array().unwrap().len(), cols.len());
}

#[test]
fn config_file_is_overlaid_by_flags() {
    let dir = std::env::temp_dir().join(format!("grushin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"alpha": [1, 1], "base": [2.4, 1, 0], "format": "json"}"#).unwrap();
    let out = dir.join("out.csv");
    let o = grushin(&[
        "classify", "--config", cfg.to_str().unwrap(), "--base", "1,1,0", "--format", "csv", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(2).unwrap();
    assert!(row.starts_with("riemannian,type1,"), "{row}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn verify_single_suite() {
    let o = grushin(&["verify", "--suite", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS suite 9"));
    let (_, h, rows) = csv(&o);
    assert!(rows.iter().all(|r| r[col(&h, "suite_passed")] == "true"));
}
