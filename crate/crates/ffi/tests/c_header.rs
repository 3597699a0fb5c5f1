//! Compiles and runs a C program against the generated header and the
//! static library, when a C compiler is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "mterm_lab.h"

int main(void) {
    MtlSpace *space = NULL;
    MtlSystem *sys = NULL;
    MtlTrace *trace = NULL;
    double f[2] = {0.5, 0.5};
    double res[3];
    if (mtl_space_new(2, 2.0, &space) != MTL_STATUS_OK) return 1;
    if (mtl_system_canonical(space, &sys) != MTL_STATUS_OK) return 2;
    if (mtl_wrga_run(sys, f, 2, 1.0, MTL_POLICY_EXACT, 2, NAN, 0, &trace) != MTL_STATUS_OK) return 3;
    if (mtl_trace_residuals(trace, res, 3) != MTL_STATUS_OK) return 4;
    if (fabs(res[2] - sqrt(0.05)) > 1e-9) return 5;
    if (mtl_space_new(2, 0.5, &space) != MTL_STATUS_INVALID_ARGUMENT) return 6;
    if (mtl_last_error()[0] == '\0') return 7;
    printf("%.6f\n", res[2]);
    mtl_trace_free(trace);
    mtl_system_free(sys);
    return 0;
}
"#;

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_staticlib() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let lib = profile_dir().join("libmterm_lab_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("demo.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("demo");
    let out = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "0.223607");
}
