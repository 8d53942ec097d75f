//! Check records, run summaries and the artifact writer.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Version of the `summary.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const SUMMARY_FILE: &str = "summary.json";

/// Assertion checks decide the exit status. Trend checks measure the rate of
/// convergence at the chosen truncation and are reported without failing the run
/// unless `--strict` is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckClass {
    Assertion,
    Trend,
}

/// One verified property with its measured value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Label of the identity or statement the check tests.
    pub anchor: String,
    pub class: CheckClass,
    /// Measured quantity; absent for purely boolean checks or non-finite values.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Check {
    /// Passes when `value <= tol`; NaN fails.
    pub fn at_most(name: &str, anchor: &str, class: CheckClass, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            class,
            value: finite(value),
            tolerance: Some(tol),
            pass: value <= tol,
            detail: String::new(),
        }
    }

    pub fn holds(name: &str, anchor: &str, class: CheckClass, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            class,
            value: None,
            tolerance: None,
            pass,
            detail,
        }
    }

    pub fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

/// Pressure with its error bar, carried into every summary that built one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureLine {
    pub delta: f64,
    pub err: f64,
}

/// The machine-readable result of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub experiment: String,
    pub seed: u64,
    pub max_len: usize,
    pub potential: String,
    pub pressure: Option<PressureLine>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

impl Summary {
    pub fn assertions_pass(&self) -> bool {
        self.checks.iter().filter(|c| c.class == CheckClass::Assertion).all(|c| c.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Files of one run, kept in memory and written in name order once the run completes.
#[derive(Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), bytes.into());
    }

    pub fn names(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(|v| v.as_slice())
    }

    pub fn write_all(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Minimal CSV builder. Floats use a fixed exponent format so output bytes depend
/// only on the values.
pub struct Csv {
    out: String,
    width: usize,
}

pub enum Cell<'a> {
    S(&'a str),
    I(i64),
    F(f64),
    B(bool),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            out: header.join(",") + "\n",
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.width, "csv row width");
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                self.out.push(',');
            }
            match c {
                Cell::S(s) => {
                    if s.contains([',', '"', '\n']) {
                        let _ = write!(self.out, "\"{}\"", s.replace('"', "\"\""));
                    } else {
                        self.out.push_str(s);
                    }
                }
                Cell::I(i) => {
                    let _ = write!(self.out, "{i}");
                }
                Cell::F(x) => self.out.push_str(&fmt_float(*x)),
                Cell::B(b) => self.out.push_str(if *b { "true" } else { "false" }),
            }
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        "nan".into()
    }
}
