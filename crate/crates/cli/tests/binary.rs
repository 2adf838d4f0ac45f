use std::path::PathBuf;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cartan-lab"))
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cartan-lab-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn list_names_models_and_experiments() {
    let out = lab().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["isojet-perturbed", "se2-so2", "classical-bridge", "kernel-products"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn exit_code_follows_the_verdict() {
    let pass = write_config("pass.json", r#"{"experiment":"inversion","model":{"name":"pair-R2"},"sample_count":10}"#);
    assert_eq!(lab().args(["run", "--config"]).arg(&pass).output().unwrap().status.code(), Some(0));
    let fail = write_config(
        "fail.json",
        r#"{"experiment":"inversion","model":{"name":"pair-R2"},"sample_count":10,"tolerances":{"jet-inverse":0}}"#,
    );
    assert_eq!(lab().args(["run", "--config"]).arg(&fail).output().unwrap().status.code(), Some(1));
    let bad = write_config("bad.json", r#"{"experiment":"inversion","model":{"name":"pair-R7"}}"#);
    let out = lab().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown model"));
}

#[test]
fn seed_and_out_flags_name_the_report() {
    let cfg = write_config("seeded.json", r#"{"experiment":"riemannian","model":{"name":"isojet-euclidean"},"sample_count":5}"#);
    let dir = cfg.parent().unwrap().join("reports");
    let status = lab()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--format", "csv", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.join("riemannian-isojet-euclidean-5.csv")).unwrap();
    assert!(text.starts_with("experiment,model,seed,check"));
    assert!(text.lines().skip(1).all(|l| l.contains(",5,")));
}
