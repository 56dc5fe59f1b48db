//! FCIDUMP reader and writer.
//!
//! Indices are 1-based on disk and 0-based in memory. Body lines are
//! `value i j k l`:
//!
//! * `i j k l` all positive: two-body integral `(ij|kl)`
//! * `i j 0 0`: one-body integral `h[i][j]`
//! * `i 0 0 0`: orbital energy (accepted and ignored)
//! * `0 0 0 0`: constant energy `E0`

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::hamiltonian::{canonical_eri_index, ClusterHamiltonian};
use super::HamIoError;
use crate::scalar::Real;

/// Two values for the same canonical integral may differ by at most this.
const DUPLICATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FcidumpHeader {
    pub norb: usize,
    pub nelec: usize,
    pub ms2: i64,
}

fn parse_header(text: &str, first_line: usize) -> Result<FcidumpHeader, HamIoError> {
    let perr = |msg: String| HamIoError::Parse {
        line: first_line,
        msg,
    };
    let upper = text.to_ascii_uppercase();
    let start = upper
        .find("&FCI")
        .ok_or_else(|| perr("header must start with &FCI".into()))?;
    let mut body = upper[start + 4..].to_string();
    for end in ["&END", "/"] {
        if let Some(i) = body.find(end) {
            body.truncate(i);
        }
    }
    // Normalise `KEY = v1, v2,` into whitespace separated `KEY=v1 v2` tokens.
    let body = body.replace(',', " ");
    let mut tokens: Vec<String> = Vec::new();
    for tok in body.split_whitespace() {
        if tok == "=" || tok.starts_with('=') {
            if let Some(last) = tokens.last_mut() {
                last.push_str(tok);
                continue;
            }
        }
        if tokens.last().is_some_and(|t| t.ends_with('=')) {
            tokens.last_mut().unwrap().push_str(tok);
        } else {
            tokens.push(tok.to_string());
        }
    }
    let mut fields: HashMap<String, String> = HashMap::new();
    for tok in &tokens {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let get = |key: &str| -> Result<Option<i64>, HamIoError> {
        match fields.get(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse::<i64>()
                .map(Some)
                .map_err(|_| perr(format!("{key} has non-integer value '{v}'"))),
        }
    };
    let norb = get("NORB")?.ok_or_else(|| perr("missing NORB".into()))?;
    let nelec = get("NELEC")?.ok_or_else(|| perr("missing NELEC".into()))?;
    let ms2 = get("MS2")?.unwrap_or(0);
    if norb < 0 || nelec < 0 {
        return Err(perr("NORB and NELEC must be non-negative".into()));
    }
    if (nelec + ms2) % 2 != 0 || ms2.abs() > nelec {
        return Err(perr(format!(
            "NELEC={nelec} and MS2={ms2} do not give integral spin populations"
        )));
    }
    Ok(FcidumpHeader {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2,
    })
}

/// Parses an FCIDUMP stream into a Hamiltonian with all symmetry images filled.
pub fn parse_fcidump<T: Real, R: BufRead>(reader: R) -> Result<ClusterHamiltonian<T>, HamIoError> {
    let mut lines = reader.lines().enumerate();
    let mut header_text = String::new();
    let mut header_line = 0;
    let mut closed = false;
    for (i, line) in lines.by_ref() {
        let line = line?;
        if header_text.is_empty() {
            if line.trim().is_empty() {
                continue;
            }
            header_line = i + 1;
        }
        header_text.push_str(&line);
        header_text.push('\n');
        let up = line.trim().to_ascii_uppercase();
        if up.contains("&END") || up == "/" || up.ends_with('/') {
            closed = true;
            break;
        }
    }
    if !closed {
        return Err(HamIoError::Parse {
            line: header_line.max(1),
            msg: "unterminated namelist header (expected &END or /)".into(),
        });
    }
    let header = parse_header(&header_text, header_line)?;
    let n_alpha = ((header.nelec as i64 + header.ms2) / 2) as usize;
    let n_beta = ((header.nelec as i64 - header.ms2) / 2) as usize;
    let norb = header.norb;
    let mut ham = ClusterHamiltonian::<T>::zeros(norb, n_alpha, n_beta).map_err(|e| {
        HamIoError::Parse {
            line: header_line,
            msg: e.to_string(),
        }
    })?;

    let mut seen: HashMap<(usize, usize, usize, usize), (f64, usize)> = HashMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(HamIoError::Parse {
                line: lineno,
                msg: format!("expected 'value i j k l', got {} fields", toks.len()),
            });
        }
        let value: f64 = toks[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|_| HamIoError::Parse {
                line: lineno,
                msg: format!("bad value '{}'", toks[0]),
            })?;
        let mut idx = [0usize; 4];
        for (k, t) in toks[1..].iter().enumerate() {
            let v: i64 = t.parse().map_err(|_| HamIoError::Parse {
                line: lineno,
                msg: format!("bad index '{t}'"),
            })?;
            if v < 0 || v as usize > norb {
                return Err(HamIoError::Index {
                    line: lineno,
                    index: v,
                    norb,
                });
            }
            idx[k] = v as usize;
        }
        let [a, b, c, d] = idx;
        // Canonical key with 0 marking absent indices.
        let key = match (a, b, c, d) {
            (0, 0, 0, 0) => (0, 0, 0, 0),
            (a, b, 0, 0) if a > 0 && b > 0 => (a.max(b), a.min(b), 0, 0),
            (a, 0, 0, 0) if a > 0 => (a, 0, 0, 0),
            (a, b, c, d) if a > 0 && b > 0 && c > 0 && d > 0 => {
                let (p, r, q, s) = canonical_eri_index(a, b, c, d);
                (p, r, q, s)
            }
            _ => {
                return Err(HamIoError::Index {
                    line: lineno,
                    index: 0,
                    norb,
                })
            }
        };
        if let Some(&(old, old_line)) = seen.get(&key) {
            if (old - value).abs() > DUPLICATE_TOL {
                return Err(HamIoError::Inconsistent {
                    line: lineno,
                    first_line: old_line,
                    indices: [a, b, c, d],
                    first: old,
                    second: value,
                });
            }
            continue;
        }
        seen.insert(key, (value, lineno));
        let v = T::lit(value);
        match key {
            (0, 0, 0, 0) => ham.set_e0(v),
            (p, r, 0, 0) if r > 0 => ham.set_h(p - 1, r - 1, v),
            (_, 0, 0, 0) => {}
            (p, r, q, s) => ham.set_eri(p - 1, r - 1, q - 1, s - 1, v),
        }
    }
    Ok(ham)
}

/// Parses FCIDUMP text held in memory.
pub fn parse_fcidump_str<T: Real>(text: &str) -> Result<ClusterHamiltonian<T>, HamIoError> {
    parse_fcidump(text.as_bytes())
}

fn fmt_value(out: &mut String, v: f64, idx: [usize; 4]) {
    let _ = writeln!(
        out,
        "{:>25.16e} {:>4} {:>4} {:>4} {:>4}",
        v, idx[0], idx[1], idx[2], idx[3]
    );
}

/// Renders the Hamiltonian as FCIDUMP text, emitting only canonical nonzero
/// representatives and always the `E0` line.
pub fn fcidump_string<T: Real>(ham: &ClusterHamiltonian<T>) -> String {
    let n = ham.norb();
    let mut out = String::new();
    let ms2 = ham.n_alpha() as i64 - ham.n_beta() as i64;
    let _ = writeln!(
        out,
        " &FCI NORB={},NELEC={},MS2={},",
        n,
        ham.n_elec(),
        ms2
    );
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(out, "  ORBSYM={orbsym},");
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for p in 0..n {
        for r in 0..=p {
            for q in 0..n {
                for s in 0..=q {
                    if (q, s) > (p, r) {
                        continue;
                    }
                    let v = ham.eri(p, r, q, s).to_f64_lossy();
                    if v != 0.0 {
                        fmt_value(&mut out, v, [p + 1, r + 1, q + 1, s + 1]);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for r in 0..=p {
            let v = ham.h_elem(p, r).to_f64_lossy();
            if v != 0.0 {
                fmt_value(&mut out, v, [p + 1, r + 1, 0, 0]);
            }
        }
    }
    fmt_value(&mut out, ham.e0().to_f64_lossy(), [0, 0, 0, 0]);
    out
}

pub fn write_fcidump<T: Real, W: Write>(
    ham: &ClusterHamiltonian<T>,
    mut writer: W,
) -> Result<(), HamIoError> {
    writer.write_all(fcidump_string(ham).as_bytes())?;
    Ok(())
}

pub fn read_fcidump_file<T: Real>(
    path: impl AsRef<std::path::Path>,
) -> Result<ClusterHamiltonian<T>, HamIoError> {
    let f = std::fs::File::open(path)?;
    parse_fcidump(std::io::BufReader::new(f))
}

pub fn write_fcidump_file<T: Real>(
    ham: &ClusterHamiltonian<T>,
    path: impl AsRef<std::path::Path>,
) -> Result<(), HamIoError> {
    std::fs::write(path, fcidump_string(ham))?;
    Ok(())
}
