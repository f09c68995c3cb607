use std::path::Path;
use std::process::Command;

fn main() {
    println!("cargo:rerun-if-env-changed=NBPROC_COMMIT");
    for head in ["../../.git/HEAD", "../../.git/index"] {
        if Path::new(head).exists() {
            println!("cargo:rerun-if-changed={head}");
        }
    }
    let commit = std::env::var("NBPROC_COMMIT").ok().or_else(|| {
        Command::new("git")
            .args(["rev-parse", "--short=12", "HEAD"])
            .output()
            .ok()
            .filter(|o| o.status.success())
            .and_then(|o| String::from_utf8(o.stdout).ok())
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
    });
    println!("cargo:rustc-env=NBPROC_COMMIT={}", commit.unwrap_or_else(|| "unknown".into()));
}
