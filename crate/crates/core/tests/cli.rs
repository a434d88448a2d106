use serde_json::Value;
use torus_green::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("torus-green").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn lattice_info_json() {
    let v = json(&["lattice-info", "--tau", "i", "--json"]);
    for key in ["tau", "nome", "eta1", "eta2", "e1", "e2", "e3", "g2", "g3", "legendre_residual"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["eta1"]["re"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn critpoints_json() {
    let v = json(&["critpoints", "--tau", "1+1.7320508075688772i", "--p", "0.25+0.4330127018922193i", "--json"]);
    assert_eq!(v["count"], 10);
    assert_eq!(v["degree_sum"], -2);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 10);
    for key in ["z", "r", "s", "kind", "det", "classification", "local_degree", "residual"] {
        assert!(pts[0].get(key).is_some(), "missing {key}");
    }

    let v = json(&["critpoints", "--json"]);
    assert_eq!(v["count"], 3);
    assert_eq!(v["degree_sum"], -1);
}

#[test]
fn disks_json_classifies_p() {
    let v = json(&["disks", "--tau", "i", "--p", "0.3+0.2i", "--json"]);
    assert_eq!(v["regions"].as_array().unwrap().len(), 4);
    assert!(v["classification"]["m"].is_u64());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(call(&["lattice-info", "--tau", "0.5"]).0, 2);
    assert_eq!(call(&["lattice-info", "--tau", "1 + i"]).0, 2);
    assert_eq!(call(&["lattice-info", "--tau", "nan"]).0, 2);
    assert_eq!(call(&["critpoints", "--p", "0.5"]).0, 2);
    assert_eq!(call(&["critpoints", "--p", "0.5+0.5i"]).0, 2);
    assert_eq!(call(&["hitchin-check", "--r", "0.5", "--s", "0.5"]).0, 2);
    assert_eq!(call(&["no-such-command"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn checks_exit_0_when_consistent() {
    let (code, out, err) = call(&["hitchin-check", "--tau", "i", "--r", "0.3", "--s", "0.3", "--json"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["hessian_cross_check"]["rel_diff"].as_f64().unwrap() < 1e-6);

    let (code, _, err) = call(&["pvi-check", "--r", "0.3", "--s", "0.3"]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn tight_tolerance_reports_inconsistency() {
    let (code, _, _) = call(&["pvi-check", "--r", "0.3", "--s", "0.3", "--tol", "1e-12"]);
    assert_eq!(code, 3);
}

#[test]
fn scan_output_is_deterministic() {
    let base = ["scan", "--tau", "i", "--grid", "5", "--mode", "wp"];
    let (c1, a, _) = call(&[&base[..], &["--workers", "1"]].concat());
    let (c2, b, _) = call(&[&base[..], &["--workers", "3"]].concat());
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("re_wp,im_wp,re_p,im_p,count,m,nondeg"));
    for line in lines {
        let count: usize = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!([4, 6, 8, 10].contains(&count));
    }

    let (code, out, _) = call(&["scan", "--grid", "3", "--mode", "p", "--format", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["summary"]["schema"], 1);
    assert_eq!(v["samples"].as_array().unwrap().len(), 9);
}

#[test]
fn liouville_check_preconditions() {
    let tau = "0.5+0.8660254037844386i";
    assert_eq!(call(&["liouville-check", "--tau", tau, "--p", "0.03", "--grid", "32"]).0, 2);
    assert_eq!(call(&["liouville-check", "--tau", tau, "--p", "0.03", "--grid", "64", "--rho", "0.01"]).0, 2);
    let (code, out, err) = call(&["liouville-check", "--tau", tau, "--p", "0.03", "--grid", "256", "--tol", "0.05", "--json"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["solutions"].as_array().unwrap().len(), 1);
}
