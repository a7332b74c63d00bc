//! Compiles a small C program against the generated header and the static
//! library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "kse.h"

int main(void) {
    KseSimulation *sim = NULL;
    if (kse_simulation_new_canonical(16, 0.01, &sim) != KSE_STATUS_OK) return 1;
    if (kse_simulation_advance(sim, 0.05) != KSE_STATUS_OK) return 2;
    KseDiagnostics d;
    if (kse_simulation_diagnostics(sim, &d) != KSE_STATUS_OK) return 3;
    double buf[256];
    if (kse_simulation_copy_field(sim, KSE_FIELD_RHO, buf, 8) != KSE_STATUS_BUFFER_TOO_SMALL) return 4;
    if (kse_last_error_message() == NULL) return 5;
    kse_simulation_free(sim);
    if (kse_simulation_new_canonical(10, 0.01, &sim) != KSE_STATUS_CONFIG_ERROR) return 6;
    printf("%s %.3f %.6e\n", kse_version(), d.t, d.c_lq[4]);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler available, skipping");
        return;
    }
    let lib = target_dir().join("libkse_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("0.050"), "{text}");
}
