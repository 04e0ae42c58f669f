use std::process::{Command, Output};

fn hida(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hida")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn cosets_verify_example() {
    let o = hida(&["cosets", "verify", "--n", "2", "--parts", "1,1", "--r", "1", "--p", "3", "--l", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("flat=2"), "{out}");
    assert!(out.contains("result: pass"), "{out}");
}

#[test]
fn json_report_shape() {
    let o = hida(&["--json", "--no-time", "cosets", "verify", "--n", "3", "--parts", "2,1", "--r", "1", "--p", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "cosets verify");
    assert_eq!(v["inputs_digest"].as_str().unwrap().len(), 64);
    assert_eq!(v["outputs"]["flat"], 2);
    assert_eq!(v["checks"][0]["pass"], true);
    assert!(v.get("wall_time").is_none());
}

#[test]
fn classify_semistable_fixture() {
    let o = hida(&["euler", "classify", "--fixture", "semistable"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("class=SemiStable"));
    let o = hida(&["euler", "classify", "--fixture", "crystalline", "--expect", "SemiStable"]);
    assert_eq!(o.status.code(), Some(1), "a failed check exits 1");
    assert!(stdout(&o).contains("class=Crystalline"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hida(&["frobnicate"]).status.code(), Some(2));
    let o = hida(&["cosets", "verify", "--n", "3", "--parts", "1,1", "--r", "1", "--p", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--parts"));
    let o = hida(&["lseries", "gauss", "--chi", "bogus:3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--chi"));
}

#[test]
fn reports_are_deterministic() {
    let args = ["--json", "--no-time", "--seed", "7", "qexp", "up", "--p", "2", "--r", "1", "--blocks", "1,1", "--final-bound", "5", "--check-flat", "1"];
    let a = hida(&args);
    let b = hida(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = hida(&["--json", "--no-time", "--seed", "8", "qexp", "up", "--p", "2", "--r", "1", "--blocks", "1,1", "--final-bound", "5"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn euler_factorization_check() {
    for seed in ["1", "2", "3"] {
        let o = hida(&["--seed", seed, "euler", "ep", "--parts", "1,2", "--max-c", "2"]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains("check E_p = A_P · E_imp: pass"));
    }
}

#[test]
fn lseries_values() {
    // L(−1, 1) = −1/12 = ζ(−1).
    let o = hida(&["lseries", "lvalue", "--chi", "trivial", "--k", "2"]);
    assert!(stdout(&o).contains("display=-1/12"), "{}", stdout(&o));
    let o = hida(&["lseries", "gauss", "--chi", "legendre:7"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn eisenstein_congruence_and_inputs_from_file() {
    let spec = |k: i64| {
        format!(
            r#"{{"n":1,"N":7,"p":5,"phi":"gen:7:6:1","mode":"full","weight":{{"parabolic":{{"n":1,"parts":[1]}},"t":[23],"eps":["trivial"],"k":{k}}}}}"#
        )
    };
    let dir = std::env::temp_dir().join(format!("hida-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("spec.json");
    std::fs::write(&path, spec(3)).unwrap();
    let inline = hida(&["--json", "--no-time", "eis", "coeff", "--spec", &spec(3), "--beta", "50,1,1,2"]);
    let file = hida(&["--json", "--no-time", "eis", "coeff", "--spec", path.to_str().unwrap(), "--beta", "50,1,1,2"]);
    assert_eq!(inline.status.code(), Some(0));
    let (a, b): (serde_json::Value, serde_json::Value) =
        (serde_json::from_slice(&inline.stdout).unwrap(), serde_json::from_slice(&file.stdout).unwrap());
    assert_eq!(a["outputs"], b["outputs"]);
    assert!(a["outputs"]["cyc"]["coeffs"].is_array());
    assert!(a["outputs"]["arch"].is_object());
    let o = hida(&["eis", "check-congruence", "--spec", &spec(3), "--spec2", &spec(23), "--beta", "50,1,1,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn family_fixtures() {
    let o = hida(&["family", "l-invariant", "--c", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let o = hida(&["--seed", "3", "family", "derivative-check"]);
    assert_eq!(o.status.code(), Some(0));
    let input = r#"{"u":{"p":5,"M":6,"vars":["T"],"D":3,"coeffs":[{"exp":[0],"val":{"v":"0","u":"1"}},{"exp":[1],"val":{"v":"1","u":"1"}}]},
                    "g":{"p":5,"M":6,"vars":["T"],"D":3,"coeffs":[{"exp":[0],"val":{"v":"0","u":"3"}}]},"var":0,"center":[0]}"#;
    let o = hida(&["family", "derivative-check", "--input", input]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
}
