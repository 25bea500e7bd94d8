//! Compiles a C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const SOURCE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "lifeboot.h"

int main(void) {
    LbDataset *ds = NULL;
    if (lb_dataset_from_csv_path("rocket_motor", &ds) != LB_STATUS_OK) return 10;
    LbFit *fit = NULL;
    if (lb_fit(ds, LB_FAMILY_WEIBULL, NULL, 0, &fit) != LB_STATUS_OK) return 11;
    double p[2], se[2];
    if (lb_fit_params(fit, p, se, 2) != LB_STATUS_OK) return 12;
    if (fabs(p[0] - 21.228) > 0.01 || fabs(p[1] - 8.126) > 0.01) return 13;
    LbFit *bad = NULL;
    if (lb_fit(ds, 42, NULL, 0, &bad) != LB_STATUS_INPUT || bad != NULL) return 14;
    printf("%s|%.3f|%.3f\n", lb_last_error_message(), p[0], p[1]);
    lb_fit_free(fit);
    lb_dataset_free(ds);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler ({cc}); skipping");
        return;
    }
    let lib = target_dir().join("liblifeboot_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, SOURCE).unwrap();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), "E_INPUT: invalid input: unknown family code 42|21.229|8.126");
}
