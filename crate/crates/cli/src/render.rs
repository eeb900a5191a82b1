//! Number formatting and the three output formats.

use serde::Serialize;

use crate::config::Format;

/// Human-readable number: rounded to 12 significant digits, trailing
/// zeros dropped, so 1.9999999999999998 prints as `2`.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e12).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn nums(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

/// 17 significant digits, enough to round-trip an f64.
pub fn csv_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

/// Header cells `prefix_1 .. prefix_n`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

pub trait Report: Serialize {
    fn table(&self) -> String;
    fn csv(&self) -> String;
    /// Whether every numerical contract the command checks held.
    fn passed(&self) -> bool;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::Structured => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
        }
    }
}
