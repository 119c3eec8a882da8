//! Compiles the C smoke program against the generated header and the shared
//! library, then runs it. Skipped when no C compiler is installed.

use std::path::{Path, PathBuf};
use std::process::Command;

fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().expect("test executable path");
    exe.parent().and_then(Path::parent).expect("target profile dir").to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler `{cc}`");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let libdir = artifact_dir();
    assert!(
        libdir.join("libfedcgau_ffi.so").exists() || libdir.join("libfedcgau_ffi.dylib").exists(),
        "shared library missing in {}",
        libdir.display()
    );
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror"])
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-L")
        .arg(&libdir)
        .args(["-lfedcgau_ffi", "-o"])
        .arg(&exe)
        .status()
        .expect("compiler runs");
    assert!(status.success(), "C compilation failed");

    let out = Command::new(&exe)
        .arg(tmp.path().join("blobs.emb1"))
        .env("LD_LIBRARY_PATH", &libdir)
        .env("DYLD_LIBRARY_PATH", &libdir)
        .output()
        .expect("smoke program runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "smoke program failed: {}{}",
        stdout,
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains(" ok"), "{stdout}");
}
