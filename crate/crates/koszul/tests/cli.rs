//! End-to-end tests of the `koszul` binary: flags, output formats, exit
//! codes, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn koszul(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_koszul"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_is_deterministic_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--model", "prym", "--genus", "6", "--prime", "131", "--seed", "7"];
    let a = koszul(&args, dir.path());
    let b = koszul(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same flags must give byte-identical output");
    let text = stdout(&a);
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["genus"], 6);
    assert_eq!(parsed["a"][0].as_array().unwrap().len(), 5);
    // a different seed changes the curve
    let c = koszul(
        &["gen", "--model", "prym", "--genus", "6", "--prime", "131", "--seed", "8"],
        dir.path(),
    );
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_rejects_unsupported_genus_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(&["gen", "--model", "prym", "--genus", "4"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("genus"));
}

#[test]
fn assemble_headers_match_known_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    for (args, header) in [
        (
            vec!["assemble", "--model", "prym", "--genus", "6", "--ell", "3", "--subspace", "w"],
            "220 30 M",
        ),
        (
            vec!["assemble", "--model", "prym", "--genus", "8", "--ell", "4", "--subspace", "w"],
            "1050 140 M",
        ),
        (
            vec![
                "assemble", "--model", "canonical", "--genus", "5", "--ell", "2", "--subspace",
                "v",
            ],
            "90 40 M",
        ),
    ] {
        let out = koszul(&args, dir.path());
        assert!(out.status.success(), "{:?}: {}", args, stderr(&out));
        let text = stdout(&out);
        assert_eq!(text.lines().next().unwrap(), header);
        assert!(text.trim_end().ends_with("0 0 0"));
    }
}

#[test]
fn assemble_writes_sidecar_and_rank_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(
        &[
            "assemble", "--model", "prym", "--genus", "6", "--np", "0", "--out", "m.sms",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.sms.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["prime"], 131);
    assert_eq!(sidecar["nrows"], 220);
    assert_eq!(sidecar["ncols"], 30);
    assert_eq!(sidecar["sha256_of_sms"].as_str().unwrap().len(), 64);
    // rank picks the prime up from the sidecar
    let out = koszul(&["rank", "m.sms"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("rank 30 kernel_dim 0"));
}

#[test]
fn rank_identity_matrix() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("id.sms"),
        "3 3 M\n1 1 1\n2 2 1\n3 3 1\n0 0 0\n",
    )
    .unwrap();
    let out = koszul(&["rank", "id.sms", "--prime", "131"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("rank 3 kernel_dim 0"));
}

#[test]
fn rank_bad_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.sms"), "2 2 M\n1 1 1\n").unwrap();
    let out = koszul(&["rank", "bad.sms", "--prime", "131"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn verify_prym_green_genus_6() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(
        &["verify", "--model", "prym", "--genus", "6", "--report", "r.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("N_0 HOLDS"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(report["kernel_dim"], 0);
    assert_eq!(report["verdict"], "holds");
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["nrows"], 220);
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_reports_genus_8_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(
        &["verify", "--model", "prym", "--genus", "8", "--np", "1", "--prime", "131"],
        dir.path(),
    );
    // a completed run is exit 0 even when the property fails
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("kernel_dim = 1"));
}

#[test]
fn verify_rejects_np_and_ell_together() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(
        &[
            "verify", "--model", "prym", "--genus", "6", "--np", "0", "--ell", "3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_canonical_default_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(
        &["verify", "--model", "canonical", "--genus", "7", "--prime", "131"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("wedge degree 3 HOLDS"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(&["selftest", "--report", "self.json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("self.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdict"], "all checks passed");
}

#[test]
fn threads_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = koszul(
        &["--threads", "2", "verify", "--model", "prym", "--genus", "6", "--prime", "131"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
}
