use std::path::{Path, PathBuf};
use std::process::Command;

fn deps_dir() -> PathBuf {
    let exe = std::env::current_exe().expect("test executable path");
    exe.parent().expect("deps directory").to_path_buf()
}

fn static_lib() -> PathBuf {
    let deps = deps_dir();
    let name = "libzeno_gate_ffi.a";
    [deps.join(name), deps.parent().map(Path::to_path_buf).unwrap_or_default().join(name)]
        .into_iter()
        .find(|p| p.exists())
        .unwrap_or_else(|| panic!("{name} not found next to {}", deps.display()))
}

#[test]
fn c_program_links_against_the_generated_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = static_lib();
    let exe = deps_dir().join("zeno_gate_c_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests").join("smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().expect("smoke program runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("version 0."));
}
