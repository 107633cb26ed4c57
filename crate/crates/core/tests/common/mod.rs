#![allow(dead_code)]

pub mod corridor;
pub mod grid;
pub mod strips;

use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
