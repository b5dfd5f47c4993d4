//! Text formats: ruler bank files, complex-vector CSV, and sample streams.
//!
//! A bank serializes as a header line `Z=<int> M=<int> N=<int>` followed by
//! one pattern per line, `N=<int>; marks=<comma-separated ints>`. Files may
//! hold several banks separated by blank lines; `#` starts a comment line.
//!
//! Numeric vectors serialize as CSV with a `index,lag_or_bin,real,imag`
//! header; sample streams as `sensor_id,sample_index,real,imag`.

use crate::ruler::{CosetPattern, RulerBank};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Renders one bank in the exchange format.
pub fn format_bank(bank: &RulerBank) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "Z={} M={} N={}",
        bank.num_patterns(),
        bank.marks_per_pattern(),
        bank.period_n()
    )
    .unwrap();
    for p in bank.patterns() {
        writeln!(out, "{}", format_pattern(p)).unwrap();
    }
    out
}

/// Renders one pattern line.
pub fn format_pattern(pattern: &CosetPattern) -> String {
    let marks: Vec<String> = pattern.marks().iter().map(|m| m.to_string()).collect();
    format!("N={}; marks={}", pattern.period_n(), marks.join(","))
}

/// Parses a file holding exactly one bank.
pub fn parse_bank(text: &str) -> Result<RulerBank> {
    let banks = parse_banks(text)?;
    match banks.len() {
        1 => Ok(banks.into_iter().next().unwrap()),
        n => Err(Error::Parse {
            line: 0,
            message: format!("expected one bank, found {n}"),
        }),
    }
}

/// Parses a file holding one or more banks separated by blank lines.
pub fn parse_banks(text: &str) -> Result<Vec<RulerBank>> {
    let mut banks = Vec::new();
    let mut header: Option<(usize, usize, usize, usize)> = None; // line, z, m, n
    let mut patterns: Vec<CosetPattern> = Vec::new();

    let mut flush = |header: &mut Option<(usize, usize, usize, usize)>,
                     patterns: &mut Vec<CosetPattern>|
     -> Result<()> {
        if let Some((line, z, m, n)) = header.take() {
            if patterns.len() != z {
                return Err(Error::Parse {
                    line,
                    message: format!("header says Z={z} but found {} patterns", patterns.len()),
                });
            }
            let bank = RulerBank::new(std::mem::take(patterns))
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?;
            if bank.marks_per_pattern() != m || bank.period_n() != n {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "header M={m} N={n} does not match patterns (M={} N={})",
                        bank.marks_per_pattern(),
                        bank.period_n()
                    ),
                });
            }
            banks.push(bank);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut header, &mut patterns)?;
            continue;
        }
        if line.starts_with("Z=") {
            flush(&mut header, &mut patterns)?;
            let fields = parse_kv_line(line, line_no, &["Z", "M", "N"])?;
            header = Some((line_no, fields[0], fields[1], fields[2]));
        } else if line.starts_with("N=") {
            if header.is_none() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "pattern line before bank header".into(),
                });
            }
            patterns.push(parse_pattern(line, line_no)?);
        } else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unrecognized line: {line}"),
            });
        }
    }
    flush(&mut header, &mut patterns)?;
    if banks.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no banks found".into(),
        });
    }
    Ok(banks)
}

/// Parses one `N=<int>; marks=<ints>` line.
pub fn parse_pattern(line: &str, line_no: usize) -> Result<CosetPattern> {
    let (n_part, marks_part) = line.split_once(';').ok_or_else(|| Error::Parse {
        line: line_no,
        message: "expected `N=<int>; marks=<ints>`".into(),
    })?;
    let n = parse_int(n_part.trim().strip_prefix("N=").ok_or_else(|| Error::Parse {
        line: line_no,
        message: "missing N=".into(),
    })?, line_no)?;
    let marks_str = marks_part
        .trim()
        .strip_prefix("marks=")
        .ok_or_else(|| Error::Parse {
            line: line_no,
            message: "missing marks=".into(),
        })?;
    let marks = marks_str
        .split(',')
        .map(|s| parse_int(s.trim(), line_no))
        .collect::<Result<Vec<_>>>()?;
    CosetPattern::new(n, marks).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })
}

fn parse_kv_line(line: &str, line_no: usize, keys: &[&str]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(keys.len());
    let mut parts = line.split_whitespace();
    for key in keys {
        let part = parts.next().ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("missing field {key}="),
        })?;
        let value = part.strip_prefix(&format!("{key}=")).ok_or_else(|| {
            Error::Parse {
                line: line_no,
                message: format!("expected {key}=<int>, got `{part}`"),
            }
        })?;
        out.push(parse_int(value, line_no)?);
    }
    Ok(out)
}

fn parse_int(s: &str, line_no: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("not an integer: `{s}`"),
    })
}

/// CSV for a complex vector indexed by lag or DFT bin.
pub fn format_complex_csv(label: &str, values: &[Complex64]) -> String {
    let mut out = String::from("index,lag_or_bin,real,imag\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{label}{i},{},{}", v.re, v.im).unwrap();
    }
    out
}

/// Parses the complex-vector CSV written by [`format_complex_csv`].
pub fn parse_complex_csv(text: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if idx == 0 || line.is_empty() {
            continue; // header
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 4 columns, got {}", cols.len()),
            });
        }
        let re: f64 = cols[2].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("bad real value `{}`", cols[2]),
        })?;
        let im: f64 = cols[3].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("bad imag value `{}`", cols[3]),
        })?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

/// Parses a `sensor_id,sample_index,real,imag` stream into per-sensor
/// sample sequences ordered by sample index. Sensors are keyed by id.
pub fn parse_samples_csv(text: &str) -> Result<BTreeMap<usize, Vec<Complex64>>> {
    let mut per_sensor: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.starts_with("sensor_id") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 4 columns, got {}", cols.len()),
            });
        }
        let parse_err = |what: &str, v: &str| Error::Parse {
            line: idx + 1,
            message: format!("bad {what} `{v}`"),
        };
        let sensor: usize = cols[0].parse().map_err(|_| parse_err("sensor_id", cols[0]))?;
        let sample: usize = cols[1]
            .parse()
            .map_err(|_| parse_err("sample_index", cols[1]))?;
        let re: f64 = cols[2].parse().map_err(|_| parse_err("real", cols[2]))?;
        let im: f64 = cols[3].parse().map_err(|_| parse_err("imag", cols[3]))?;
        per_sensor
            .entry(sensor)
            .or_default()
            .push((sample, Complex64::new(re, im)));
    }
    let mut out = BTreeMap::new();
    for (sensor, mut samples) in per_sensor {
        samples.sort_by_key(|&(i, _)| i);
        out.insert(sensor, samples.into_iter().map(|(_, v)| v).collect());
    }
    Ok(out)
}

/// Renders a sample stream in the `sensor_id,sample_index,real,imag` format.
pub fn format_samples_csv(sensors: &BTreeMap<usize, Vec<Complex64>>) -> String {
    let mut out = String::from("sensor_id,sample_index,real,imag\n");
    for (sensor, samples) in sensors {
        for (i, v) in samples.iter().enumerate() {
            writeln!(out, "{sensor},{i},{},{}", v.re, v.im).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_round_trip() {
        let bank = RulerBank::new(vec![
            CosetPattern::new(43, vec![0, 1, 17]).unwrap(),
            CosetPattern::new(43, vec![0, 2, 12]).unwrap(),
        ])
        .unwrap();
        let text = format_bank(&bank);
        assert!(text.starts_with("Z=2 M=3 N=43\n"));
        assert_eq!(parse_bank(&text).unwrap(), bank);
    }

    #[test]
    fn multi_bank_file() {
        let text = "# comment\nZ=1 M=2 N=5\nN=5; marks=0,1\n\nZ=1 M=2 N=7\nN=7; marks=0,3\n";
        let banks = parse_banks(text).unwrap();
        assert_eq!(banks.len(), 2);
        assert_eq!(banks[1].period_n(), 7);
    }

    #[test]
    fn header_pattern_count_mismatch_rejected() {
        let text = "Z=2 M=2 N=5\nN=5; marks=0,1\n";
        assert!(parse_banks(text).is_err());
    }

    #[test]
    fn bad_lines_rejected() {
        assert!(parse_banks("garbage\n").is_err());
        assert!(parse_banks("N=5; marks=0,1\n").is_err()); // pattern before header
        assert!(parse_banks("Z=1 M=2 N=5\nN=5; marks=0,9\n").is_err());
    }

    #[test]
    fn complex_csv_round_trip() {
        let values = vec![Complex64::new(1.0, -2.5), Complex64::new(0.0, 3.25)];
        let text = format_complex_csv("bin", &values);
        assert_eq!(parse_complex_csv(&text).unwrap(), values);
    }

    #[test]
    fn samples_csv_orders_by_index() {
        let text = "sensor_id,sample_index,real,imag\n0,1,2,0\n0,0,1,0\n3,0,5,-1\n";
        let sensors = parse_samples_csv(text).unwrap();
        assert_eq!(sensors[&0], vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]);
        assert_eq!(sensors[&3], vec![Complex64::new(5.0, -1.0)]);
    }
}
