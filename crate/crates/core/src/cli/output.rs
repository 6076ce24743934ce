//! CSV and manifest writers with fixed numeric formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::engine::TraceSample;

/// Formats a real with 9 significant digits, trailing zeros trimmed,
/// switching to exponent notation outside `[1e-4, 1e9)`.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Whether a levels CSV is indexed by item count or by simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    Items,
    Time,
}

/// Header and rows of a levels CSV.
pub fn levels_csv(samples: &[TraceSample], capacity: u32, clock: Clock) -> String {
    let mut out = String::new();
    match clock {
        Clock::Items => out.push_str("item_index,bins,gap_waste,true_waste"),
        Clock::Time => out.push_str("time,items,bins,gap_waste,true_waste"),
    }
    for h in 1..capacity {
        let _ = write!(out, ",N_{h}");
    }
    out.push('\n');
    for s in samples {
        match clock {
            Clock::Items => {
                let _ = write!(out, "{},{},{},{}", s.arrivals, s.bin_count, s.gap_waste, s.true_waste);
            }
            Clock::Time => {
                let _ = write!(
                    out,
                    "{},{},{},{},{}",
                    fmt_real(s.time),
                    s.item_count,
                    s.bin_count,
                    s.gap_waste,
                    s.true_waste
                );
            }
        }
        for n in &s.levels {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
    }
    out
}

/// Long-format configuration counts: `time,config_key,count`.
pub fn configs_csv(samples: &[TraceSample]) -> String {
    let mut out = String::from("time,config_key,count\n");
    for s in samples {
        for (key, count) in &s.top_configs {
            let _ = writeln!(out, "{},{key},{count}", fmt_real(s.time));
        }
    }
    out
}

/// Everything needed to regenerate a command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String], parameters: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.into(),
            args: args.to_vec(),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}
