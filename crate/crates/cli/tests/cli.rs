use std::path::PathBuf;
use std::process::{Command, Output};

use eikonal_cli::dto::{Envelope, Output as Payload};

fn graphs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../graphs")
}

fn eikonal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eikonal"))
        .args(args)
        .current_dir(graphs())
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_early_time() {
    let o = eikonal(&["classify", "--graph", "star.json", "--sigma", "g1,g2", "--T", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("C0[0,1] ⊕ C0[0,1]"));
}

#[test]
fn json_envelope_on_stdout() {
    let o = eikonal(&["classify", "--graph", "star.json", "--sigma", "g1,g2", "--T", "11/4", "--json", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let env: Envelope = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(env.command, "classify");
    assert_eq!(env.config.horizon, "11/4");
    let Payload::Classify(d) = env.output else { panic!("wrong payload") };
    assert_eq!(d.rendered, "C0[0,9/4] ⊕ C0[0,9/4] ⊕ C([0,1/2];M2)");
}

#[test]
fn eikonal_block_at_a_parameter() {
    let o = eikonal(&[
        "eikonal", "--graph", "star.json", "--sigma", "g1,g2", "--T", "11/4", "--family", "3", "--at", "1/4", "--json", "-",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let env: Envelope = serde_json::from_str(&stdout(&o)).unwrap();
    let Payload::Eikonal(blocks) = env.output else { panic!("wrong payload") };
    let g2 = blocks.iter().find(|b| b.source == "g2").unwrap();
    assert_eq!(
        g2.value.as_deref(),
        Some(&[vec!["5/2".to_string(), "0".into()], vec!["0".into(), "0".into()]][..])
    );
}

#[test]
fn wave_values_and_corner_rejection() {
    let base = ["wave", "--graph", "star.json", "--sigma", "g1", "--T", "9/4", "--controls", "controls.json"];
    let mut args = base.to_vec();
    args.extend(["--point", "e1@1/4", "--point", "e2@5/2"]);
    let o = eikonal(&args);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("e1@1/4  343/64"), "{out}");
    assert!(out.contains("e2@5/2  0"), "{out}");
    let mut args = base.to_vec();
    args.extend(["--point", "v"]);
    assert_eq!(eikonal(&args).status.code(), Some(1));
}

#[test]
fn verify_passes_and_writes_files() {
    let dir = std::env::temp_dir().join(format!("eikonal-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let json = dir.join("verify.json");
    let o = eikonal(&[
        "verify", "--graph", "star.json", "--sigma", "g1,g2", "--T", "4", "--json", json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all invariants hold"));
    let env: Envelope = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let Payload::Verify(checks) = env.output else { panic!("wrong payload") };
    assert!(checks.iter().all(|c| c.passed));

    let svg = dir.join("hydra.svg");
    let o = eikonal(&["hydra", "--graph", "star.json", "--sigma", "g1", "--T", "9/4", "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn input_errors_exit_with_one() {
    let cases: [&[&str]; 6] = [
        &["classify", "--graph", "missing.json", "--sigma", "g1", "--T", "1"],
        &["classify", "--graph", "star.json", "--sigma", "v", "--T", "1"],
        &["classify", "--graph", "star.json", "--sigma", "g1", "--T", "1.5"],
        &["classify", "--graph", "star.json", "--sigma", "g1", "--T", "0"],
        &["eikonal", "--graph", "star.json", "--sigma", "g1", "--T", "1", "--family", "9"],
        &["classify", "--graph", "star.json"],
    ];
    for args in cases {
        let o = eikonal(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn degenerate_star_reports_a_diagnostic() {
    let o = eikonal(&["classify", "--graph", "star_equal.json", "--sigma", "g1,g2", "--T", "3", "--json", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let env: Envelope = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(env.diagnostics.iter().any(|d| d.contains("equal length")));
}
