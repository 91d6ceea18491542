use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vecbal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vecbal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = vecbal(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// CSV tables of an output, comment lines dropped; each table is header + rows.
fn tables(body: &str) -> Vec<Vec<Vec<String>>> {
    let mut out = vec![Vec::new()];
    for line in body.lines().filter(|l| !l.starts_with('#')) {
        if line.is_empty() {
            out.push(Vec::new());
        } else {
            out.last_mut().unwrap().push(line.split(',').map(str::to_string).collect());
        }
    }
    out.retain(|t| !t.is_empty());
    out
}

fn column<'a>(table: &'a [Vec<String>], name: &str) -> Vec<&'a str> {
    let j = table[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[j].as_str()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn balance_zero_vectors() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "zeros.txt", "3 4\n0 0 0\n0 0 0\n0 0 0\n0 0 0\n");
    let out = ok(&["balance", "--input", &input, "--trials", "5"]);
    let t = tables(&out);
    assert_eq!(t[0][0].join(","), "trial,seed,failed,fail_step,max_sup_norm,max_inner,c");
    assert!(column(&t[0], "max_sup_norm").iter().all(|x| num(x) == 0.0));
    assert_eq!(column(&t[1], "failure_fraction"), vec!["0.0"]);
}

#[test]
fn balance_seeds_and_reproducibility() {
    let args = ["balance", "--kind", "iid", "--n", "5", "--t", "300", "--trials", "2", "--seed", "99"];
    let a = ok(&args);
    let b = ok(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(a, b);
    let t = tables(&a);
    let seeds = column(&t[0], "seed");
    assert_eq!(seeds.len(), 2);
    assert_ne!(seeds[0], seeds[1]);
    let other = ok(&["balance", "--kind", "iid", "--n", "5", "--t", "300", "--trials", "2", "--seed", "100"]);
    assert_ne!(column(&tables(&other)[0], "seed"), seeds);
}

#[test]
fn balance_side_files() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    let signs = dir.path().join("signs.txt");
    let csv = dir.path().join("out.csv");
    let out = ok(&[
        "balance", "--kind", "sparse", "--s", "2", "--n", "6", "--t", "50",
        "--trace", path_str(&trace), "--signs", path_str(&signs), "--output", path_str(&csv),
    ]);
    assert!(out.is_empty());
    let body = fs::read_to_string(&csv).unwrap();
    let trace = fs::read_to_string(&trace).unwrap();
    assert!(trace.starts_with("step,sign,sup_norm,inner_product\n"));
    assert_eq!(trace.lines().count(), 51);
    assert_eq!(fs::read_to_string(&signs).unwrap().lines().count(), 50);
    // The trace is trial 0 of the table.
    let last_sup = trace.lines().map(|l| l.split(',').nth(2).unwrap()).skip(1).map(num).fold(0.0, f64::max);
    assert_eq!(num(column(&tables(&body)[0], "max_sup_norm")[0]), last_sup);
}

#[test]
fn uniform_cube_reports_unscaled() {
    let out = ok(&["balance", "--kind", "iid", "--distribution", "uniform-cube", "--n", "9", "--t", "100"]);
    assert!(out.contains("# unscaled_median_max_sup_norm:"));
}

#[test]
fn exit_codes() {
    assert_eq!(vecbal(&["balance"]).status.code(), Some(1));
    assert_eq!(vecbal(&["balance", "--kind", "iid", "--n", "2"]).status.code(), Some(1));
    assert_eq!(vecbal(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(vecbal(&["balance", "--kind", "iid", "--n", "2", "--t", "5", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(vecbal(&["balance", "--kind", "iid", "--n", "2", "--t", "5", "--delta", "1.5"]).status.code(), Some(1));
    assert_eq!(vecbal(&["balance", "--input", "/nonexistent/v.txt"]).status.code(), Some(2));
    assert_eq!(vecbal(&["komlos", "--matrix", "/nonexistent/a.mtx"]).status.code(), Some(2));
    assert_eq!(
        vecbal(&["balance", "--kind", "iid", "--n", "2", "--t", "5", "--output", "/nonexistent/dir/out.csv"])
            .status
            .code(),
        Some(2)
    );
    let dir = TempDir::new().unwrap();
    let long = write(&dir, "long.txt", "1 1\n2.0\n");
    let out = vecbal(&["balance", "--input", &long]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm"));
    assert_eq!(vecbal(&["--help"]).status.code(), Some(0));
}

fn identity_like(n: usize, copies: usize) -> String {
    let mut s = format!("%%MatrixMarket matrix coordinate real general\n{n} {} {}\n", n * copies, n * copies);
    for j in 0..n * copies {
        s += &format!("{} {} 1\n", j % n + 1, j + 1);
    }
    s
}

fn sparse_columns(n: usize, t: usize, per: usize) -> String {
    let v = 1.0 / (per as f64).sqrt();
    let mut s = format!("%%MatrixMarket matrix coordinate real general\n{n} {t} {}\n", t * per);
    for j in 0..t {
        for k in 0..per {
            let i = (j * 7 + k * 13) % n;
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            s += &format!("{} {} {}\n", i + 1, j + 1, sign * v);
        }
    }
    s
}

#[test]
fn komlos_identity_like_and_empty() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "id.mtx", &identity_like(40, 3));
    let t = tables(&ok(&["komlos", "--matrix", &m, "--trials", "10"]));
    assert!(column(&t[0], "final_sup_norm").iter().all(|x| num(x) <= 3.0));

    let empty = write(&dir, "empty.mtx", "%%MatrixMarket matrix coordinate real general\n6 5 0\n");
    let t = tables(&ok(&["komlos", "--matrix", &empty]));
    assert_eq!(column(&t[0], "final_sup_norm"), vec!["0.0"]);
    assert_eq!(column(&t[0], "touched"), vec!["11"]);
}

#[test]
fn komlos_touched_scales_with_nnz() {
    let dir = TempDir::new().unwrap();
    let (n, t) = (64, 200);
    let a = write(&dir, "a.mtx", &sparse_columns(n, t, 2));
    let b = write(&dir, "b.mtx", &sparse_columns(n, t, 4));
    let touched = |p: &str| {
        let tb = tables(&ok(&["komlos", "--matrix", p]));
        (num(column(&tb[0], "touched")[0]) as usize, num(column(&tb[0], "nnz")[0]) as usize)
    };
    let (ta, nnz_a) = touched(&a);
    let (tb, nnz_b) = touched(&b);
    assert_eq!(nnz_b, 2 * nnz_a);
    assert_eq!(tb - (n + t), 2 * (ta - (n + t)));
}

#[test]
fn komlos_outputs() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.mtx", &sparse_columns(20, 30, 3));
    let signs = dir.path().join("x.txt");
    let plain = ok(&["komlos", "--matrix", &m, "--trials", "3", "--signs", path_str(&signs)]);
    assert_eq!(plain, ok(&["komlos", "--matrix", &m, "--trials", "3", "--threads", "2"]));
    assert!(!plain.contains("wall_time_s"));
    assert_eq!(fs::read_to_string(&signs).unwrap().lines().count(), 30);

    let timed = ok(&["komlos", "--matrix", &m, "--timing"]);
    assert!(tables(&timed)[0][0].contains(&"wall_time_s".to_string()));

    let json = ok(&["komlos", "--matrix", &m, "--trials", "2", "--json"]);
    let lines: Vec<&str> = json.lines().collect();
    assert_eq!(lines.len(), 2);
    for key in ["\"c\":", "\"threshold\":", "\"final_sup_norm\":", "\"failed_midrun\":", "\"exceeded_final\":", "\"nnz\":90", "\"seed\":"] {
        assert!(lines[0].contains(key), "{key} missing from {}", lines[0]);
    }
}

#[test]
fn interval_single_point() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.txt", "1 1\n0.42\n");
    let t = tables(&ok(&["interval", "--points", &p, "--dim", "0", "--lo", "0", "--hi", "1"]));
    assert_eq!(num(column(&t[0], "discrepancy")[0]).abs(), 1.0);
    assert_eq!(column(&t[0], "rescan"), column(&t[0], "discrepancy"));
}

#[test]
fn small_runs_match_rescan() {
    let dir = TempDir::new().unwrap();
    let q1 = write(&dir, "q1.txt", "# k lo hi at\n0 0 1\n0 0.1 0.35\n1 0.5 1 10\n1 0 0.0001\n0 0.25 0.75 3\n");
    let out = ok(&["interval", "--dist", "uniform", "--d", "2", "--t", "40", "--queries", &q1, "--trials", "6"]);
    let t = tables(&out);
    assert_eq!(t[0].len(), 1 + 5 * 6);
    assert_eq!(column(&t[0], "rescan"), column(&t[0], "discrepancy"));

    let q2 = write(&dir, "q2.txt", "0,0 1,1\n0.2,0.1 0.7,0.9\n0.5,0 1,0.5 20\n");
    let out = ok(&["tusnady", "--dist", "power:2,0.5", "--t", "64", "--queries", &q2, "--trials", "4"]);
    let t = tables(&out);
    assert_eq!(t[0].len(), 1 + 3 * 4);
    assert_eq!(column(&t[0], "rescan"), column(&t[0], "discrepancy"));

    // Above the rescan limit the column is left empty.
    let out = ok(&["interval", "--dist", "uniform", "--d", "1", "--t", "100", "--lo", "0", "--hi", "0.5"]);
    assert_eq!(column(&tables(&out)[0], "rescan"), vec![""]);
}

#[test]
fn interval_sweep_rows() {
    let out = ok(&["interval", "--dist", "uniform", "--d", "1", "--sweep", "1024,4096,16384", "--trials", "2"]);
    let t = tables(&out);
    assert_eq!(t.len(), 1);
    assert_eq!(column(&t[0], "t"), vec!["1024", "1024", "4096", "4096", "16384", "16384"]);
}

#[test]
fn interval_export() {
    let dir = TempDir::new().unwrap();
    let e = dir.path().join("sums.csv");
    ok(&["interval", "--dist", "uniform", "--d", "1", "--t", "8", "--export", path_str(&e)]);
    let text = fs::read_to_string(&e).unwrap();
    assert!(text.starts_with("level,index,signed_sum\n"));
}

#[test]
fn geometry_rejections() {
    assert_eq!(vecbal(&["interval", "--dist", "normal", "--d", "1", "--t", "8"]).status.code(), Some(1));
    assert_eq!(vecbal(&["interval", "--dist", "uniform", "--d", "1"]).status.code(), Some(1));
    assert_eq!(
        vecbal(&["interval", "--dist", "uniform", "--d", "1", "--t", "8", "--dim", "1", "--lo", "0", "--hi", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        vecbal(&["tusnady", "--dist", "uniform", "--d", "2", "--t", "8", "--lo", "0", "--hi", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(vecbal(&["tusnady", "--dist", "uniform", "--d", "5", "--t", "2"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.txt", "1 2\n0.5\n1.5\n");
    assert_eq!(vecbal(&["interval", "--points", &p]).status.code(), Some(1));
}

#[test]
fn compare_curves() {
    let out = ok(&["compare", "--kind", "adaptive-orthogonal", "--n", "8", "--t", "400", "--trials", "3"]);
    let t = tables(&out);
    assert_eq!(column(&t[0], "algorithm").iter().filter(|a| **a == "greedy").count(), 20);
    for l2 in column(&t[1], "median_final_l2") {
        assert!((num(l2) - 20.0).abs() < 1e-6);
    }
    let bad = vecbal(&["compare", "--kind", "repeated-basis", "--n", "2", "--t", "5", "--algorithms", "balance,spencer"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn compare_single_algorithm_matches_balance() {
    let src = ["--kind", "iid", "--n", "6", "--t", "500", "--trials", "7", "--seed", "3"];
    let cmp = ok(&[&["compare", "--algorithms", "balance"][..], &src].concat());
    let bal = ok(&[&["balance"][..], &src].concat());
    let cmp_median = column(&tables(&cmp)[1], "median_max_sup_norm")[0].to_string();
    let bal_median = column(&tables(&bal)[1], "median_max_sup_norm")[0].to_string();
    assert_eq!(cmp_median, bal_median);
}

#[test]
fn repeated_basis_separation() {
    let src = ["--kind", "repeated-basis", "--n", "4", "--t", "20000", "--trials", "20", "--algorithms", "balance,random"];
    let t = tables(&ok(&[&["compare"][..], &src].concat()));
    let med = column(&t[1], "median_max_sup_norm");
    assert!(num(med[0]) < num(med[1]), "balance {} vs random {}", med[0], med[1]);
}
