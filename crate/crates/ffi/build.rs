use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("could not read cbindgen.toml");
    cbindgen::generate_with_config(&crate_dir, config)
        .expect("could not generate C header")
        .write_to_file(crate_dir.join("include/hymmsbm.h"));
}
