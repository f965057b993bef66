//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "ehmmse.h"

int main(void) {
    EhSignalModel *sig = NULL;
    EhArrivalModel *arr = NULL;
    if (eh_signal_lowpass_new(256, 4, 256.0, 0.0256, &sig) != EH_STATUS_OK) return 10;
    if (eh_arrival_bernoulli_new(0.4, 1.0, &arr) != EH_STATUS_OK) return 11;
    double eps = 0.0;
    if (eh_offline_benchmark(sig, 102.4, &eps) != EH_STATUS_OK) return 12;
    if (fabs(eps - 256.0 / 1001.0) > 1e-12) return 13;
    EhBoundPoint p;
    if (eh_bound_i(sig, arr, 8, 32.0, EH_TAIL_BT, &p) != EH_STATUS_OK) return 14;
    if (p.family != EH_FAMILY_I || fabs(p.mu - 12.0) > 1e-12) return 15;
    if (eh_bound_i(sig, arr, 8, -1.0, EH_TAIL_BT, &p) != EH_STATUS_INVALID_ARGUMENT) return 16;
    if (eh_last_error_message() == NULL) return 17;
    eh_arrival_free(arr);
    eh_signal_free(sig);
    printf("%s\n", eh_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let lib = target_dir().join("libehmmse_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
