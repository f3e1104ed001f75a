use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn qtopos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtopos"))
        .args(args)
        .current_dir(root())
        .env_remove("QTOPOS_CAPS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_bundled() {
    let o = qtopos(&["validate", "scenarios/qubit.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dimension 2"));
}

#[test]
fn input_errors_exit_2() {
    for f in [
        "bad_orthogonality",
        "bad_commutant",
        "bad_float",
        "bad_zero_projection",
    ] {
        let o = qtopos(&["check", &format!("crates/core/tests/fixtures/{f}.json")]);
        assert_eq!(o.status.code(), Some(2), "{f}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    assert_eq!(qtopos(&["validate", "nowhere.json"]).status.code(), Some(2));
    assert_eq!(
        qtopos(&["valuate", "scenarios/qubit.json", "--run", "nope"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn check_exit_codes() {
    let o = qtopos(&["check", "scenarios/qubit.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 failed"));
    let o = qtopos(&["check", "crates/core/tests/fixtures/adversarial.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL projective-subobject:split"));
}

#[test]
fn check_json_is_deterministic() {
    let a = qtopos(&["check", "scenarios/qutrit.json", "--json"]);
    let b = qtopos(&["check", "scenarios/qutrit.json", "--json"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["failed"], 0);
    assert_eq!(v["caps"]["sieve_enum"], 4096);
}

#[test]
fn valuate_text_and_json() {
    let o = qtopos(&["valuate", "scenarios/qubit.json", "--run", "up"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let e2 = text
        .lines()
        .find(|l| l.trim_start().starts_with("e2 "))
        .unwrap();
    assert!(
        e2.contains("{p2->") && e2.contains("bottom") && e2.contains("bit 0"),
        "{e2}"
    );

    let o = qtopos(&["valuate", "scenarios/qubit.json", "--run", "up", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let one = v["propositions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "one")
        .unwrap();
    assert_eq!(one["is_top"], true);
    assert_eq!(one["determinate_value"], true);
    assert_eq!(one["extended"]["sharp_matches"], true);
}

#[test]
fn caps_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_qtopos"))
        .args(["check", "scenarios/qubit.json", "--json"])
        .current_dir(root())
        .env("QTOPOS_CAPS", "sieve_enum=2")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["caps"]["sieve_enum"], 2);
    assert!(v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["mode"] == "sampled" || r["status"] == "skipped"));

    let o = Command::new(env!("CARGO_BIN_EXE_qtopos"))
        .args(["validate", "scenarios/qubit.json"])
        .current_dir(root())
        .env("QTOPOS_CAPS", "bogus=1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dump_site_is_json() {
    let o = qtopos(&["dump-site", "scenarios/qutrit.json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}
