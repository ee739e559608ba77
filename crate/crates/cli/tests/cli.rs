use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fatou(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fatou")).args(args).current_dir(dir).output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn germ(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn formal_on_the_quadratic_germ() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "quad.germ", "x - x^2\n");
    let o = fatou(&["formal", "-i", &g, "-N", "6", "-o", "out.json"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("r0: 2"));
    assert!(s.contains("rho: 0"));
    assert!(s.starts_with("parabolic order: 2\n"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(doc["blocks"][0]["expansion"][0]["coeff"], "1");
    assert_eq!(doc["blocks"][0]["expansion"][0]["g0"], "-1");
}

#[test]
fn formal_on_the_mobius_germ_is_one_block() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "mob.germ", "x/(1+x)\n");
    let o = fatou(&["formal", "-i", &g, "-N", "6", "--format", "text", "-o", "psi.txt"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(d.path().join("psi.txt")).unwrap(), "x^-1\n");
}

#[test]
fn formal_emits_factorial_coefficients() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "ex.germ", "x - x^2*l^-1\n");
    let o = fatou(&["formal", "-i", &g, "-N", "2", "-M", "6", "--format", "text", "-o", "psi.txt"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let s = fs::read_to_string(d.path().join("psi.txt")).unwrap();
    assert!(s.starts_with("x^-1*l + x^-1*l^2 + 2*x^-1*l^3 + 6*x^-1*l^4 + 24*x^-1*l^5 + 120*x^-1*l^6"), "{s}");
}

#[test]
fn malformed_input_exits_2_with_position() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "bad.germ", "x - x^2 +* 3\n");
    let o = fatou(&["formal", "-i", &g], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("column 10"));
    let o = fatou(&["formal", "-i", "missing.germ"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_parabolic_input_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "lin.germ", "2*x - x^2\n");
    assert_eq!(fatou(&["formal", "-i", &g], d.path()).status.code(), Some(2));
    let g = germ(d.path(), "ok.germ", "x - x^3\n");
    // N below the parabolic order
    assert_eq!(fatou(&["formal", "-i", &g, "-N", "2"], d.path()).status.code(), Some(2));
}

#[test]
fn verify_mobius_passes() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "mob.germ", "x/(1+x)\n");
    let o = fatou(
        &["verify", "-i", &g, "--tol", "1e-9", "--grid", "1e-3:1e-1:8:geom", "-o", "r.csv", "--summary", "s.json"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,f_x,psi_x,psi_f_x,residual"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    for r in rows {
        let res: f64 = r.split(',').nth(4).unwrap().parse().unwrap();
        assert!(res.abs() < 1e-9);
    }
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(s["passed"], true);
    assert_eq!(s["monotone"], true);
}

#[test]
fn verify_flow_germ_passes() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "flow.germ", "flow(x^2/log(x))\n");
    let o = fatou(&["verify", "-i", &g, "-N", "4", "--tol", "1e-6", "--grid", "1e-2:1e-1:6:geom"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn verify_fails_with_exit_4_when_the_germ_is_wrong() {
    let d = tempfile::tempdir().unwrap();
    // the expansion is that of x - x^2 but f is x - x^2 - x^3/2 numerically
    let g = germ(d.path(), "off.germ", "x - x^2\n# numeric: x - x^2 - x^3/2\n");
    let o = fatou(&["verify", "-i", &g, "-N", "3", "--tol", "1e-9", "--grid", "1e-2:1e-1:4:geom"], d.path());
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
}

#[test]
fn flow_normal_form_prints_rho() {
    let d = tempfile::tempdir().unwrap();
    let o = fatou(&["flow", "--normal-form", "1,2,0,1", "-N", "5"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("\nrho: 1\n"), "{s}");
    assert!(s.contains("generator psi: -x^-1 - l^-1 + l2^-1"));
    assert!(s.contains("agree up to constant: 0"));
}

#[test]
fn eval_prints_values() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "mob.germ", "x/(1+x)\n");
    let o = fatou(&["eval", "-i", &g, "-x", "0.01", "-x", "0.02", "--digits", "20"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().collect();
    assert_eq!(rows[0], "x,psi_x");
    let v: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    // 1/x - e from the lower end d = 1/e
    assert!((v - (100.0 - std::f64::consts::E)).abs() < 1e-12, "{v}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "quad.germ", "x - x^2\n");
    fs::write(d.path().join("run.toml"), format!("input = \"{g}\"\nN = 2\nformat = \"text\"\noutput = \"a.txt\"\n")).unwrap();
    let o = fatou(&["formal", "--config", "run.toml"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(d.path().join("a.txt")).unwrap(), "x^-1 - l^-1 + 1/2*x + 1/3*x^2\n");
    let o = fatou(&["formal", "--config", "run.toml", "-N", "3"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(d.path().join("a.txt")).unwrap(), "x^-1 - l^-1 + 1/2*x + 1/3*x^2 + 13/36*x^3\n");
    fs::write(d.path().join("bad.toml"), "colour = 3\n").unwrap();
    assert_eq!(fatou(&["formal", "--config", "bad.toml"], d.path()).status.code(), Some(2));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let g = germ(d.path(), "ex.germ", "x - x^2*u + x^3\n");
    let args = ["formal", "-i", &g, "-N", "3", "--format", "machine"];
    let a = fatou(&[&args[..], &["-o", "a.txt"]].concat(), d.path());
    let b = fatou(&[&args[..], &["-o", "b.txt"]].concat(), d.path());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(d.path().join("a.txt")).unwrap(), fs::read(d.path().join("b.txt")).unwrap());
}
