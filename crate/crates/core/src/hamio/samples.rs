//! Measurement sample files.
//!
//! One `bitstring count` pair per line. Character `i` of the bitstring is
//! qubit `i`: qubits `0..M` are the alpha spin-orbitals and `M..2M` the beta
//! spin-orbitals. Blank lines and lines starting with `#` are skipped.
//! Repeated bitstrings are merged by summing their counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use super::HamIoError;

/// Widest supported register; two 64-orbital spin sectors.
pub const MAX_QUBITS: usize = 128;

/// Multiset of measured bitstrings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    n_qubits: usize,
    counts: BTreeMap<u128, u64>,
}

impl SampleSet {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        Self {
            n_qubits,
            counts: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Adds `count` shots of `bits`.
    pub fn add(&mut self, bits: u128, count: u64) {
        debug_assert!(self.n_qubits == 128 || bits >> self.n_qubits == 0);
        if count > 0 {
            *self.counts.entry(bits).or_insert(0) += count;
        }
    }

    pub fn total_shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn n_unique(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Distinct bitstrings with their counts, in ascending bit order.
    pub fn iter(&self) -> impl Iterator<Item = (u128, u64)> + '_ {
        self.counts.iter().map(|(&b, &c)| (b, c))
    }

    pub fn count_of(&self, bits: u128) -> u64 {
        self.counts.get(&bits).copied().unwrap_or(0)
    }
}

impl FromIterator<(usize, u128, u64)> for SampleSet {
    fn from_iter<I: IntoIterator<Item = (usize, u128, u64)>>(iter: I) -> Self {
        let mut set: Option<SampleSet> = None;
        for (n, bits, c) in iter {
            set.get_or_insert_with(|| SampleSet::new(n)).add(bits, c);
        }
        set.unwrap_or_else(|| SampleSet::new(0))
    }
}

/// Formats a bitstring with qubit 0 as the first character.
pub fn format_bitstring(bits: u128, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|i| if (bits >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bitstring(s: &str) -> Option<u128> {
    if s.len() > MAX_QUBITS {
        return None;
    }
    let mut bits = 0u128;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => bits |= 1u128 << i,
            _ => return None,
        }
    }
    Some(bits)
}

pub fn parse_samples<R: BufRead>(reader: R) -> Result<SampleSet, HamIoError> {
    let mut set: Option<SampleSet> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let ferr = |msg: String| HamIoError::Format { line: lineno, msg };
        let mut it = t.split_whitespace();
        let (Some(bs), Some(cs), None) = (it.next(), it.next(), it.next()) else {
            return Err(ferr("expected 'bitstring count'".into()));
        };
        let bits = parse_bitstring(bs)
            .ok_or_else(|| ferr(format!("invalid bitstring '{bs}'")))?;
        let count: i64 = cs
            .parse()
            .map_err(|_| ferr(format!("invalid count '{cs}'")))?;
        if count <= 0 {
            return Err(ferr(format!("count must be positive, got {count}")));
        }
        let set = set.get_or_insert_with(|| SampleSet::new(bs.len()));
        if bs.len() != set.n_qubits {
            return Err(ferr(format!(
                "bitstring length {} differs from {}",
                bs.len(),
                set.n_qubits
            )));
        }
        set.add(bits, count as u64);
    }
    set.ok_or(HamIoError::Format {
        line: 0,
        msg: "sample file contains no shots".into(),
    })
}

pub fn samples_string(set: &SampleSet) -> String {
    let mut out = String::with_capacity(set.n_unique() * (set.n_qubits + 8));
    for (bits, count) in set.iter() {
        let _ = writeln!(out, "{} {}", format_bitstring(bits, set.n_qubits), count);
    }
    out
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<SampleSet, HamIoError> {
    let f = std::fs::File::open(path)?;
    parse_samples(std::io::BufReader::new(f))
}

pub fn save_samples(set: &SampleSet, path: impl AsRef<Path>) -> Result<(), HamIoError> {
    std::fs::write(path, samples_string(set))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_counts() {
        let set = parse_samples("0011 5\n0101 3\n".as_bytes()).unwrap();
        assert_eq!(set.total_shots(), 8);
        assert_eq!(set.n_qubits(), 4);
        // first character is qubit 0
        assert_eq!(set.count_of(0b1100), 5);
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(parse_samples("".as_bytes()).is_err());
        assert!(parse_samples("# only a comment\n\n".as_bytes()).is_err());
    }

    #[test]
    fn ragged_lengths_rejected() {
        let err = parse_samples("0011 1\n011 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, HamIoError::Format { line: 2, .. }));
    }

    #[test]
    fn non_positive_counts_rejected() {
        assert!(parse_samples("0011 0\n".as_bytes()).is_err());
        assert!(parse_samples("0011 -4\n".as_bytes()).is_err());
    }

    #[test]
    fn duplicates_merge() {
        let set = parse_samples("01 2\n01 3\n10 1\n".as_bytes()).unwrap();
        assert_eq!(set.n_unique(), 2);
        assert_eq!(set.total_shots(), 6);
    }
}
