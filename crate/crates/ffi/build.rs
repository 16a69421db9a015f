use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("reading cbindgen.toml");
    let bindings =
        cbindgen::Builder::new().with_crate(&dir).with_config(config).generate().expect("generating C header");
    let header = dir.join("include").join("tempoq.h");
    std::fs::create_dir_all(header.parent().unwrap()).unwrap();
    let mut text = Vec::new();
    bindings.write(&mut text);
    if std::fs::read(&header).ok().as_deref() != Some(&text[..]) {
        std::fs::write(&header, text).unwrap();
    }
}
