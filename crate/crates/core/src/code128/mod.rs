//! Code 128 with a minimal-length code set plan.
//!
//! ```
//! use idbsynth_core::code128;
//!
//! let symbol = code128::encode_c128("123456").unwrap();
//! assert_eq!(symbol.values, [105, 12, 34, 56, 44, 106]);
//! assert_eq!(code128::decode_c128(&symbol.runs).unwrap(), "123456");
//! ```

mod tables;

use alloc::string::String;
use alloc::vec::Vec;

pub const SHIFT: u8 = 98;
pub const CODE_C: u8 = 99;
pub const CODE_B: u8 = 100;
pub const CODE_A: u8 = 101;
pub const FNC1: u8 = 102;
pub const FNC2: u8 = 97;
pub const FNC3: u8 = 96;
pub const START_A: u8 = 103;
pub const START_B: u8 = 104;
pub const START_C: u8 = 105;
pub const STOP: u8 = 106;

/// Modules in every symbol except the stop symbol.
pub const SYMBOL_MODULES: usize = 11;
/// Modules in the stop symbol, termination bar included.
pub const STOP_MODULES: usize = 13;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum CodeSet {
    A,
    B,
    C,
}

impl CodeSet {
    const ALL: [CodeSet; 3] = [CodeSet::A, CodeSet::B, CodeSet::C];

    fn start(self) -> u8 {
        match self {
            CodeSet::A => START_A,
            CodeSet::B => START_B,
            CodeSet::C => START_C,
        }
    }

    fn latch(self) -> u8 {
        match self {
            CodeSet::A => CODE_A,
            CodeSet::B => CODE_B,
            CodeSet::C => CODE_C,
        }
    }

    /// Value of a single ASCII byte in set A or B.
    fn value_of(self, c: u8) -> Option<u8> {
        match (self, c) {
            (CodeSet::A, 32..=95) => Some(c - 32),
            (CodeSet::A, 0..=31) => Some(c + 64),
            (CodeSet::B, 32..=127) => Some(c - 32),
            _ => None,
        }
    }

    fn char_of(self, v: u8) -> Option<u8> {
        match (self, v) {
            (CodeSet::A, 0..=63) => Some(v + 32),
            (CodeSet::A, 64..=95) => Some(v - 64),
            (CodeSet::B, 0..=95) => Some(v + 32),
            _ => None,
        }
    }

    fn other(self) -> CodeSet {
        match self {
            CodeSet::A => CodeSet::B,
            _ => CodeSet::A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Code128Error {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("character {ch:?} at offset {offset} is outside ASCII 0-127")]
    UnencodableCharacter { offset: usize, ch: char },
    #[error("runs at symbol {symbol} match no Code 128 pattern")]
    PatternMismatch { symbol: usize },
    #[error("checksum is {found}, expected {expected}")]
    ChecksumMismatch { expected: u8, found: u8 },
    #[error("run sequence does not end with the stop pattern")]
    BadStop,
    #[error("value {value} at symbol {symbol} is not valid in code set {set:?}")]
    InvalidValue { symbol: usize, value: u8, set: CodeSet },
}

/// An encoded Code 128 symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Code128Symbol {
    /// Start code, data symbols, checksum and stop.
    pub values: Vec<u8>,
    /// Module run lengths, alternating bar and space, bar first.
    pub runs: Vec<u8>,
    pub modules_total: usize,
}

/// `(start + sum of i * value_i) mod 103` over the data values.
pub fn checksum(start: u8, data: &[u8]) -> u8 {
    let sum = data.iter().enumerate().fold(start as u32, |acc, (i, &v)| acc + (i as u32 + 1) * v as u32);
    (sum % 103) as u8
}

pub fn pattern_widths(value: u8) -> &'static [u8] {
    if value == STOP {
        &tables::STOP_WIDTHS
    } else {
        &tables::PATTERNS[value as usize]
    }
}

// Moves from a state in the plan, in tie-break order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Step {
    Emit,
    Latch(CodeSet),
    Shift,
}

/// Start code followed by the data values of a minimal plan for `text`.
///
/// The plan minimizes the number of symbols. On ties it takes Start B,
/// then C, then A, and prefers a latch to a shift.
pub fn plan(text: &str) -> Result<Vec<u8>, Code128Error> {
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(Code128Error::EmptyPayload);
    }
    if let Some((offset, ch)) = text.char_indices().find(|(_, c)| !c.is_ascii()) {
        return Err(Code128Error::UnencodableCharacter { offset, ch });
    }
    let n = bytes.len();
    const INF: u32 = u32::MAX / 2;
    // cost[i][s]: symbols needed for bytes[i..] when the active set is s.
    let mut cost = alloc::vec![[INF; 3]; n + 1];
    let mut choice = alloc::vec![[Step::Emit; 3]; n + 1];
    cost[n] = [0; 3];

    let emit = |set: CodeSet, i: usize| -> Option<usize> {
        match set {
            CodeSet::C => (i + 1 < n && bytes[i].is_ascii_digit() && bytes[i + 1].is_ascii_digit()).then_some(i + 2),
            _ => set.value_of(bytes[i]).map(|_| i + 1),
        }
    };

    for i in (0..n).rev() {
        for set in CodeSet::ALL {
            let mut best = (INF, Step::Emit);
            let mut consider = |c: u32, step: Step| {
                if c < best.0 {
                    best = (c, step);
                }
            };
            if let Some(next) = emit(set, i) {
                consider(1 + cost[next][set as usize], Step::Emit);
            }
            for target in [CodeSet::B, CodeSet::C, CodeSet::A] {
                if target == set {
                    continue;
                }
                if let Some(next) = emit(target, i) {
                    consider(2 + cost[next][target as usize], Step::Latch(target));
                }
            }
            if set != CodeSet::C && set.other().value_of(bytes[i]).is_some() {
                consider(2 + cost[i + 1][set as usize], Step::Shift);
            }
            cost[i][set as usize] = best.0;
            choice[i][set as usize] = best.1;
        }
    }

    let mut start = CodeSet::B;
    for set in [CodeSet::C, CodeSet::A] {
        if cost[0][set as usize] < cost[0][start as usize] {
            start = set;
        }
    }

    let mut out = alloc::vec![start.start()];
    let mut set = start;
    let mut i = 0;
    while i < n {
        match choice[i][set as usize] {
            Step::Emit => {}
            Step::Latch(target) => {
                out.push(target.latch());
                set = target;
            }
            Step::Shift => {
                out.push(SHIFT);
                out.push(set.other().value_of(bytes[i]).expect("shift chosen for encodable byte"));
                i += 1;
                continue;
            }
        }
        match set {
            CodeSet::C => {
                out.push((bytes[i] - b'0') * 10 + (bytes[i + 1] - b'0'));
                i += 2;
            }
            _ => {
                out.push(set.value_of(bytes[i]).expect("plan emits encodable bytes"));
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Encodes ASCII text as a Code 128 symbol.
pub fn encode_c128(text: &str) -> Result<Code128Symbol, Code128Error> {
    let mut values = plan(text)?;
    let check = checksum(values[0], &values[1..]);
    values.push(check);
    values.push(STOP);
    let mut runs = Vec::with_capacity(6 * values.len() + 1);
    for &v in &values {
        runs.extend_from_slice(pattern_widths(v));
    }
    let modules_total = SYMBOL_MODULES * (values.len() - 1) + STOP_MODULES;
    debug_assert_eq!(runs.iter().map(|&r| r as usize).sum::<usize>(), modules_total);
    Ok(Code128Symbol { values, runs, modules_total })
}

fn lookup(widths: &[u8]) -> Option<u8> {
    tables::PATTERNS.iter().position(|p| p == widths).map(|v| v as u8)
}

/// Symbol values from run lengths at any uniform integer module width.
pub fn read_values(runs: &[u32]) -> Result<Vec<u8>, Code128Error> {
    if runs.len() < 7 + 6 * 2 || !(runs.len() - 7).is_multiple_of(6) {
        return Err(Code128Error::BadStop);
    }
    let symbols = (runs.len() - 7) / 6;
    let modules = SYMBOL_MODULES * symbols + STOP_MODULES;
    let total: u64 = runs.iter().map(|&r| r as u64).sum();
    if total == 0 || !total.is_multiple_of(modules as u64) {
        return Err(Code128Error::PatternMismatch { symbol: 0 });
    }
    let unit = total / modules as u64;
    let normalize = |r: u32| -> Option<u8> {
        if !(r as u64).is_multiple_of(unit) {
            return None;
        }
        u8::try_from(r as u64 / unit).ok()
    };
    let stop: Option<Vec<u8>> = runs[runs.len() - 7..].iter().map(|&r| normalize(r)).collect();
    if stop.as_deref() != Some(&tables::STOP_WIDTHS[..]) {
        return Err(Code128Error::BadStop);
    }
    let mut values = Vec::with_capacity(symbols + 1);
    for s in 0..symbols {
        let mut w = [0u8; 6];
        for (j, slot) in w.iter_mut().enumerate() {
            *slot = normalize(runs[6 * s + j]).ok_or(Code128Error::PatternMismatch { symbol: s })?;
        }
        values.push(lookup(&w).ok_or(Code128Error::PatternMismatch { symbol: s })?);
    }
    values.push(STOP);
    Ok(values)
}

/// Decodes run lengths (bar first, any uniform integer module width) to text.
///
/// FNC1 to FNC3 carry no text and are skipped; FNC4 is rejected.
pub fn decode_c128(runs: &[u8]) -> Result<String, Code128Error> {
    let wide: Vec<u32> = runs.iter().map(|&r| r as u32).collect();
    decode_runs(&wide)
}

pub fn decode_runs(runs: &[u32]) -> Result<String, Code128Error> {
    decode_values(&read_values(runs)?)
}

/// Interprets a full value sequence: start, data, checksum, stop.
pub fn decode_values(values: &[u8]) -> Result<String, Code128Error> {
    if values.len() < 3 || *values.last().unwrap() != STOP {
        return Err(Code128Error::BadStop);
    }
    let mut set = match values[0] {
        START_A => CodeSet::A,
        START_B => CodeSet::B,
        START_C => CodeSet::C,
        _ => return Err(Code128Error::PatternMismatch { symbol: 0 }),
    };
    let body = &values[1..values.len() - 2];
    let found = values[values.len() - 2];
    let expected = checksum(values[0], body);
    if found != expected {
        return Err(Code128Error::ChecksumMismatch { expected, found });
    }

    let mut out = String::new();
    let mut shifted = false;
    for (idx, &v) in body.iter().enumerate() {
        let symbol = idx + 1;
        let active = if shifted { set.other() } else { set };
        let was_shifted = core::mem::take(&mut shifted);
        let invalid = Code128Error::InvalidValue { symbol, value: v, set: active };
        if v > FNC1 {
            return Err(invalid);
        }
        match active {
            CodeSet::C => match v {
                0..=99 => {
                    out.push((b'0' + v / 10) as char);
                    out.push((b'0' + v % 10) as char);
                }
                CODE_B => set = CodeSet::B,
                CODE_A => set = CodeSet::A,
                FNC1 => {}
                _ => return Err(invalid),
            },
            _ => {
                if let Some(c) = active.char_of(v) {
                    out.push(c as char);
                    continue;
                }
                if was_shifted {
                    return Err(invalid);
                }
                match (active, v) {
                    (_, FNC1 | FNC2 | FNC3) => {}
                    (_, SHIFT) => shifted = true,
                    (_, CODE_C) => set = CodeSet::C,
                    (CodeSet::A, CODE_B) | (CodeSet::B, CODE_A) => set = active.other(),
                    _ => return Err(invalid),
                }
            }
        }
    }
    if shifted {
        return Err(Code128Error::InvalidValue { symbol: body.len(), value: SHIFT, set });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_use_set_c() {
        let s = encode_c128("123456").unwrap();
        assert_eq!(s.values, [START_C, 12, 34, 56, checksum(START_C, &[12, 34, 56]), STOP]);
        assert_eq!(s.values.len(), 6);
        assert_eq!(s.modules_total, 11 * 5 + 13);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(encode_c128(""), Err(Code128Error::EmptyPayload));
        assert!(matches!(encode_c128("é"), Err(Code128Error::UnencodableCharacter { offset: 0, .. })));
    }

    #[test]
    fn symbol_patterns_are_eleven_modules() {
        for v in 0..106u8 {
            let w = pattern_widths(v);
            assert_eq!(w.len(), 6);
            assert_eq!(w.iter().map(|&x| x as usize).sum::<usize>(), 11);
        }
        assert_eq!(pattern_widths(STOP).iter().map(|&x| x as usize).sum::<usize>(), 13);
    }

    #[test]
    fn policy_round_trip() {
        let s = encode_c128("POLICY-7781").unwrap();
        assert_eq!(decode_c128(&s.runs).unwrap(), "POLICY-7781");
    }

    #[test]
    fn control_characters_need_set_a() {
        let s = encode_c128("a\tb").unwrap();
        assert_eq!(s.values[..4], [START_B, 65, SHIFT, 73]);
        assert_eq!(decode_c128(&s.runs).unwrap(), "a\tb");
    }

    #[test]
    fn scaled_runs_decode_alike() {
        let s = encode_c128("Scale 3x").unwrap();
        let wide: Vec<u32> = s.runs.iter().map(|&r| 3 * r as u32).collect();
        assert_eq!(decode_runs(&wide).unwrap(), "Scale 3x");
    }

    #[test]
    fn substitution_breaks_checksum() {
        let s = encode_c128("ABC").unwrap();
        let mut runs = s.runs.clone();
        runs[6..12].copy_from_slice(pattern_widths(s.values[1] + 1));
        assert!(matches!(decode_c128(&runs), Err(Code128Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn truncated_stop_rejected() {
        let s = encode_c128("ABC").unwrap();
        assert_eq!(decode_c128(&s.runs[..s.runs.len() - 1]), Err(Code128Error::BadStop));
    }
}
