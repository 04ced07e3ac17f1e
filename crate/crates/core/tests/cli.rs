use std::process::Command;

fn hetphase(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hetphase")).args(args).output().expect("spawn");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn density_output() {
    let (code, out, err) = hetphase(&["density", "--lambda", "0", "--grid-points", "3"]);
    assert_eq!(code, 0, "{err}");
    let r = rows(&out);
    assert_eq!(r.len(), 9);
    assert!((num(&r[4][2]) - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    let again = hetphase(&["density", "--lambda", "0", "--grid-points", "3"]).1;
    assert_eq!(out, again);
}

#[test]
fn phase_dist_output() {
    let (code, out, _) = hetphase(&["phase-dist", "--lambda", "0.6", "--grid-points", "4096"]);
    assert_eq!(code, 0);
    for row in rows(&out) {
        assert!((num(&row[1]) - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert_eq!(row[2], "");
    }
    let last = out.lines().last().unwrap();
    let integral = num(last.strip_prefix("# integral=").unwrap());
    assert!((integral - 1.0).abs() <= 1e-6);

    let (_, out, _) = hetphase(&["phase-dist", "--lambda", "0.9", "--w-re", "3", "--w-im", "-4", "--grid-points", "64"]);
    let r = rows(&out);
    let n = r.len();
    for k in 0..n - 1 {
        assert!((num(&r[k][1]) - num(&r[n - 2 - k][1])).abs() <= 1e-12);
    }
    assert!(r.iter().all(|row| !row[2].is_empty()));
}

#[test]
fn sample_is_reproducible() {
    let args = ["sample", "--lambda", "0.5", "--w-re", "1", "--count", "5", "--seed", "7"];
    let (code, a, _) = hetphase(&args);
    assert_eq!(code, 0);
    assert_eq!(a, hetphase(&args).1);
    let meta = a.lines().next().unwrap();
    assert!(meta.contains("seed=7") && meta.contains("lambda=0.5") && meta.contains("w_re=1"));
    assert_eq!(a.lines().nth(1), Some("index,re_z,im_z,arg_z"));
    assert_eq!(rows(&a).len(), 5);
}

#[test]
fn precision_controls_significant_digits() {
    let (_, out, _) = hetphase(&["density", "--lambda", "0.3", "--grid-points", "2", "--precision", "4"]);
    let field = &rows(&out)[0][2];
    let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 4, "{field}");
}

#[test]
fn sensitivity_sweep() {
    let (code, out, err) = hetphase(&["sensitivity", "--nbar-min", "100", "--nbar-max", "10000", "--nbar-points", "5", "--precision", "17"]);
    assert_eq!(code, 0, "{err}");
    let r = rows(&out);
    assert_eq!(r.len(), 5);
    assert!((num(&r[0][0]) - 100.0).abs() < 1e-9);
    assert!((num(&r[0][6]) - 0.995).abs() < 0.005);
    let mut last = 0.0;
    for row in &r {
        let lambda = num(&row[2]);
        let gain = num(&row[3]);
        assert!((gain * (1.0 - lambda * lambda) - 1.0).abs() < 1e-9);
        let product = num(&row[6]);
        assert!(product > last && product <= 1.0);
        last = product;
    }
}

#[test]
fn optimize_single_budget() {
    let (code, out, _) = hetphase(&["optimize", "--nbar", "200"]);
    assert_eq!(code, 0);
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    assert!((num(&r[0][1]) / 200.0 - 0.5).abs() < 0.05);
    assert_eq!(hetphase(&["optimize"]).0, 1);
}

#[test]
fn exit_codes() {
    assert_eq!(hetphase(&["nonsense"]).0, 1);
    assert_eq!(hetphase(&["density", "--lambda", "1.5"]).0, 1);
    assert_eq!(hetphase(&["density", "--lambda", "0.5", "--grid-points", "1"]).0, 1);
    assert_eq!(hetphase(&["sample", "--lambda", "0.5", "--count", "0"]).0, 1);
    let (code, out, err) = hetphase(&["sample", "--lambda", "0.2", "--count", "3", "--seed", "notanumber"]);
    assert_eq!(code, 1);
    assert!(out.is_empty() && !err.is_empty());
}

#[test]
fn writes_to_file() {
    let dir = std::env::temp_dir().join(format!("hetphase-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.csv");
    let (code, out, _) = hetphase(&["sample", "--lambda", "0.1", "--count", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(rows(&text).len(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_passes_and_detects_perturbation() {
    let (code, out, err) = hetphase(&["verify"]);
    assert_eq!(code, 0, "{out}{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    let (code, out, _) = hetphase(&["verify", "--inject-variance-perturbation", "1e-3"]);
    assert_eq!(code, 2);
    assert!(out.lines().any(|l| l.starts_with("FAIL fock-moments")));
}
