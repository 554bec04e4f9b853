use std::env;
use std::fs;
use std::path::PathBuf;

/// The netlib backend links `-lcblas`. Several distros ship the CBLAS ABI
/// only inside OpenBLAS without a separate `libcblas.so`; when that is the
/// case, expose OpenBLAS under the expected name from OUT_DIR.
fn main() {
    if !cfg!(unix) {
        return;
    }
    let dirs = [
        "/usr/lib/x86_64-linux-gnu",
        "/usr/lib/x86_64-linux-gnu/openblas-pthread",
        "/usr/lib64",
        "/usr/lib",
        "/usr/local/lib",
    ];
    if dirs
        .iter()
        .any(|d| PathBuf::from(d).join("libcblas.so").exists())
    {
        return;
    }
    for d in dirs {
        for name in ["libopenblas.so", "libopenblas.so.0"] {
            let target = PathBuf::from(d).join(name);
            if target.exists() {
                let out = PathBuf::from(env::var("OUT_DIR").expect("OUT_DIR set")).join("cblas-shim");
                fs::create_dir_all(&out).expect("create shim dir");
                let link = out.join("libcblas.so");
                let _ = fs::remove_file(&link);
                #[cfg(unix)]
                std::os::unix::fs::symlink(&target, &link).expect("create cblas shim symlink");
                println!("cargo:rustc-link-search=native={}", out.display());
                return;
            }
        }
    }
}
