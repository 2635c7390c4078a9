//! Compile and run a C program against the generated header and the cdylib.

use std::path::PathBuf;
use std::process::Command;

const HEADER: &str = include_str!("../include/fairaudit.h");

#[test]
fn header_declares_every_export() {
    for name in [
        "fa_last_error_message",
        "fa_version",
        "fa_string_free",
        "fa_dataset_load_csv",
        "fa_dataset_from_csv",
        "fa_dataset_write_csv",
        "fa_dataset_len",
        "fa_dataset_free",
        "fa_scenario_builtin",
        "fa_scenario_load",
        "fa_scenario_from_json",
        "fa_scenario_to_json",
        "fa_scenario_expected",
        "fa_scenario_generate_cohort",
        "fa_scenario_free",
        "fa_audit",
        "fa_audit_expected",
        "fa_report_verdict",
        "fa_report_emit",
        "fa_report_free",
        "fa_parity_check",
    ] {
        let declared =
            HEADER.contains(&format!(" {name}(")) || HEADER.contains(&format!("*{name}("));
        assert!(declared, "header lacks {name}");
    }
    assert!(HEADER.contains("typedef struct FaDataset FaDataset;"));
    assert!(HEADER.contains("FA_STATUS_OK = 0"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_runs_lung_audit() {
    let lib_dir = target_dir();
    assert!(
        lib_dir.join("libfairaudit_ffi.so").exists()
            || lib_dir.join("libfairaudit_ffi.dylib").exists(),
        "cdylib not found in {}",
        lib_dir.display()
    );
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lfairaudit_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success(), "C compile failed");

    let output = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        output.status.success(),
        "smoke failed: {stdout}{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(stdout.contains("verdict=1"), "{stdout}");
    assert!(stdout.contains("bad tau status=6"), "{stdout}");
}
