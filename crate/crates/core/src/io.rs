//! Text formats: observation series, spectra and key=value record blocks.
//!
//! Series files are UTF-8 text. Header lines read `# key: value`; data lines
//! read `MJD value` separated by a single space. Numbers are printed with 17
//! significant digits so a write/read cycle is lossless for `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::TimeSeries;
use crate::spectral::{Periodogram, SpectrumMethod};

/// Ordered `key = value` pairs of one record.
pub type KeyValueBlock = Vec<(String, String)>;

/// Fixed-point rendering with 17 significant digits.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (16 - exponent).clamp(0, 350) as usize;
    let s = format!("{v:.decimals$}");
    // log10 can land one short of an exact power of ten
    let digits = s.bytes().filter(u8::is_ascii_digit).skip_while(|&b| b == b'0').count();
    if digits > 17 && decimals > 0 {
        let decimals = decimals - 1;
        format!("{v:.decimals$}")
    } else {
        s
    }
}

fn header_line(key: &str, value: &str) -> String {
    format!("# {}: {}\n", key.trim(), value.replace(['\n', '\r'], " "))
}

/// Header lines for the given pairs.
pub fn format_header<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    pairs.into_iter().map(|(k, v)| header_line(k, v)).collect()
}

pub fn format_series<T: Real>(ts: &TimeSeries<T>) -> String {
    let mut out = format_header(ts.metadata.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    for (&t, &v) in ts.epochs().iter().zip(ts.values()) {
        out.push_str(&format_number(t.as_f64()));
        out.push(' ');
        out.push_str(&format_number(v.as_f64()));
        out.push('\n');
    }
    out
}

/// Splits `# key: value`; other comment lines give `None`.
pub fn parse_header_line(line: &str) -> Option<(String, String)> {
    let body = line.strip_prefix('#')?.trim();
    let (k, v) = body.split_once(':')?;
    let k = k.trim();
    if k.is_empty() || k.contains(char::is_whitespace) {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

fn parse_number(token: &str, line: usize) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("'{token}' is not a number"),
    })
}

pub fn parse_series<T: Real>(text: &str) -> Result<TimeSeries<T>> {
    let mut metadata = BTreeMap::new();
    let mut epochs: Vec<T> = Vec::new();
    let mut values: Vec<T> = Vec::new();
    let mut last: Option<f64> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((k, v)) = parse_header_line(line) {
                metadata.insert(k, v);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let t = parse_number(fields[0], line_no)?;
        let v = parse_number(fields[1], line_no)?;
        if !t.is_finite() || !v.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: "non-finite number".into(),
            });
        }
        if last.is_some_and(|p| t <= p) {
            return Err(Error::Ordering { line: line_no });
        }
        last = Some(t);
        epochs.push(T::lit(t));
        values.push(T::lit(v));
    }
    let mut ts = TimeSeries::new(epochs, values)?;
    ts.metadata = metadata;
    Ok(ts)
}

pub fn read_series<T: Real>(path: &Path) -> Result<TimeSeries<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text)
}

pub fn write_series<T: Real>(path: &Path, ts: &TimeSeries<T>) -> Result<()> {
    write_atomic(path, format_series(ts).as_bytes())
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("'{}' is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Two-column spectrum with header lines for `fs`, method and window;
/// `extra` header pairs come first.
pub fn format_periodogram<T: Real>(pg: &Periodogram<T>, extra: &[(String, String)]) -> String {
    let mut header: Vec<(String, String)> = extra.to_vec();
    header.push(("fs".into(), format_number(pg.fs.as_f64())));
    header.push(("method".into(), pg.method.to_string()));
    match pg.method {
        SpectrumMethod::Raw => header.push(("window".into(), "rectangular".into())),
        SpectrumMethod::Welch {
            segments,
            segment_length,
            overlap,
            window,
        } => {
            header.push(("window".into(), window.to_string()));
            header.push(("segments".into(), segments.to_string()));
            header.push(("segment_length".into(), segment_length.to_string()));
            header.push(("overlap".into(), overlap.to_string()));
        }
    }
    let mut out = format_header(header.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    for (&f, &p) in pg.freqs.iter().zip(&pg.power) {
        out.push_str(&format_number(f.as_f64()));
        out.push(' ');
        out.push_str(&format_number(p.as_f64()));
        out.push('\n');
    }
    out
}

pub fn write_periodogram<T: Real>(path: &Path, pg: &Periodogram<T>, extra: &[(String, String)]) -> Result<()> {
    write_atomic(path, format_periodogram(pg, extra).as_bytes())
}

/// Reads the two data columns of a spectrum file back.
pub fn parse_columns(text: &str) -> Result<(BTreeMap<String, String>, Vec<(f64, f64)>)> {
    let mut header = BTreeMap::new();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((k, v)) = parse_header_line(line) {
                header.insert(k, v);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        rows.push((parse_number(fields[0], i + 1)?, parse_number(fields[1], i + 1)?));
    }
    Ok((header, rows))
}

/// Blank-line separated records of `key = value` lines.
pub fn format_blocks(blocks: &[KeyValueBlock]) -> String {
    let mut out = String::new();
    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (k, v) in block {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
    }
    out
}

pub fn parse_blocks(text: &str) -> Result<Vec<KeyValueBlock>> {
    let mut blocks = Vec::new();
    let mut current = KeyValueBlock::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected 'key = value'".into(),
        })?;
        current.push((k.trim().to_string(), v.trim().to_string()));
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    Ok(blocks)
}
