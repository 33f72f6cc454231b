use std::process::{Command, Output};

fn qortho(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qortho")).args(args).output().expect("run qortho")
}

fn stdout(args: &[&str]) -> String {
    let out = qortho(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn data_lines(s: &str) -> Vec<&str> {
    s.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn eval_hermite() {
    let s = stdout(&["eval", "--family", "qhermite", "--q", "0.5", "--n", "3", "--x", "1.0"]);
    assert!(s.starts_with("# qortho v1, eval,"));
    assert_eq!(data_lines(&s).last(), Some(&"3,1,-1.5"));
}

#[test]
fn eval_exact_backend() {
    let s = stdout(&["eval", "--family", "qhermite", "--q", "1/2", "--n", "3", "--x", "1"]);
    assert_eq!(data_lines(&s).last().unwrap().rsplit(',').next(), Some("-3/2"));
}

#[test]
fn connect_rows() {
    let s = stdout(&["connect", "--pair", "t-from-u", "--n", "2"]);
    assert_eq!(data_lines(&s), vec!["n,k,gamma", "2,2,1/2", "2,0,-1/2"]);
}

#[test]
fn json_and_csv_carry_the_same_rows() {
    let args = ["density", "--density", "n", "--q", "0.3", "--x", "0,0.5,1"];
    let csv = stdout(&args);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&json_args)).unwrap();
    assert_eq!(json["meta"]["schema"], "qortho v1");
    assert_eq!(json["meta"]["subcommand"], "density");
    let rows = json["rows"].as_array().unwrap();
    let lines = data_lines(&csv);
    assert_eq!(rows.len() + 1, lines.len());
    for (row, line) in rows.iter().zip(&lines[1..]) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(row["value"].as_f64().unwrap(), value);
    }
}

#[test]
fn output_is_reproducible() {
    let args = ["sample", "--density", "cn", "--y", "0.5", "--rho", "0.4", "--q", "0.3", "--n", "500", "--seed", "9"];
    assert_eq!(stdout(&args), stdout(&args));
    let args = ["expand", "--expansion", "cn-over-n", "--y", "0.5", "--rho", "0.4", "--q", "0.3", "--grid", "7"];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn binary_samples() {
    let out = qortho(&["sample", "--density", "n", "--q", "0.3", "--n", "100", "--binary"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout.len(), 800);
    let a = 2.0 / 0.7f64.sqrt();
    for chunk in out.stdout.chunks_exact(8) {
        let x = f64::from_le_bytes(chunk.try_into().unwrap());
        assert!(x.abs() <= a);
    }
    let text = stdout(&["sample", "--density", "n", "--q", "0.3", "--n", "100"]);
    let first: f64 = data_lines(&text)[0].parse().unwrap();
    assert_eq!(first, f64::from_le_bytes(out.stdout[..8].try_into().unwrap()));
}

#[test]
fn exit_codes() {
    assert_eq!(qortho(&["eval", "--family", "nope", "--n", "1", "--x", "0"]).status.code(), Some(2));
    assert_eq!(qortho(&["eval", "--family", "qhermite", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(qortho(&["eval", "--family", "qhermite", "--q", "1.5", "--n", "2", "--x", "0"]).status.code(), Some(3));
    assert_eq!(qortho(&["connect", "--pair", "t-from-u", "--n", "3", "--oracle", "--q", "0.5"]).status.code(), Some(2));
}

#[test]
fn verify_exit_status() {
    let ok = qortho(&["verify", "--suite", "projection", "--q-grid", "0.3"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert_eq!(data_lines(&text)[0], "check_id,params_json,residual,tolerance,pass");
    assert!(data_lines(&text)[1..].iter().all(|l| l.ends_with(",true")));
    let strict = qortho(&["verify", "--suite", "projection", "--q-grid", "0.3", "--tol", "0"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn out_file() {
    let path = std::env::temp_dir().join(format!("qortho-cli-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let printed = stdout(&["coeffs", "--family", "chebu", "--n", "3"]);
    assert!(stdout(&["coeffs", "--family", "chebu", "--n", "3", "--out", p]).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
    std::fs::remove_file(path).ok();
}
