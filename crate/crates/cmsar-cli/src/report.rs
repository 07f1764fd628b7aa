//! Tiny CSV emission helpers. Values are written with Rust's shortest
//! round-trip float formatting, so reports are deterministic and exact.

use anyhow::{Context, Result};
use std::path::Path;

pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.buf).with_context(|| format!("writing {path:?}"))
    }
}

pub fn f(v: f64) -> String {
    format!("{v}")
}

/// One pass/fail summary line; returns the flag for exit-code folding.
pub fn check_line(name: &str, pass: bool, detail: &str) -> bool {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
