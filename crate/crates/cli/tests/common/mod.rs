#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const ACTIVE: &str = "7,4,1,0\n11,5,2,2\n13,23,3,1\n9,17,13,8\n";
pub const PLACEBO: &str = "7,4,2,1\n14,5,1,0\n6,9,18,2\n4,11,14,22\n";
pub const ACTIVE_TRANSPOSED: &str = "7,11,13,9\n4,5,23,17\n1,2,3,13\n0,2,1,8\n";
/// All mass in the last row, no mass in the last column.
pub const EXTREME_LEFT: &str = "0,0,0\n0,0,0\n40,60,0\n";

pub fn dtmh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtmh"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
