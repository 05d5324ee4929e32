//! High-level encoding: payload bytes to data codewords and back.
//!
//! Three compaction modes are used. Text compaction packs two values from
//! one of four sub-alphabets into each codeword, byte compaction packs six
//! bytes into five codewords, and numeric compaction treats groups of up to
//! 44 digits as one base-900 number. Text is the mode in effect at the start
//! of the symbol.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    Codeword, Pdf417Error, BYTE_LATCH, BYTE_LATCH_FULL, BYTE_SHIFT, MAX_DATA_CODEWORDS, NUMERIC_LATCH,
    TEXT_LATCH,
};

/// Which compaction modes [`compact`] may use.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ModePolicy {
    #[default]
    Auto,
    TextOnly,
    ByteOnly,
    NumericOnly,
}

/// Digit runs at least this long switch to numeric compaction.
const NUMERIC_MIN_RUN: usize = 13;
/// Text runs shorter than this next to binary data stay in byte mode.
const TEXT_MIN_RUN: usize = 5;
const NUMERIC_GROUP: usize = 44;

const MIXED: &[u8; 25] = b"0123456789&\r\t,:#-.$/+%*=^";
const PUNCT: &[u8; 29] = b";<>@[\\]_`~!\r\t,:\n-.$/\"|*()?{}'";

const LL: u8 = 27;
const AS: u8 = 27;
const ML: u8 = 28;
const AL: u8 = 28;
const PS: u8 = 29;
const PL: u8 = 25;
const PUNCT_AL: u8 = 29;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Submode {
    Alpha,
    Lower,
    Mixed,
    Punct,
}

fn alpha_value(c: u8) -> Option<u8> {
    match c {
        b'A'..=b'Z' => Some(c - b'A'),
        b' ' => Some(26),
        _ => None,
    }
}

fn lower_value(c: u8) -> Option<u8> {
    match c {
        b'a'..=b'z' => Some(c - b'a'),
        b' ' => Some(26),
        _ => None,
    }
}

fn mixed_value(c: u8) -> Option<u8> {
    if c == b' ' {
        return Some(26);
    }
    MIXED.iter().position(|&m| m == c).map(|p| p as u8)
}

fn punct_value(c: u8) -> Option<u8> {
    PUNCT.iter().position(|&m| m == c).map(|p| p as u8)
}

fn is_text(c: u8) -> bool {
    alpha_value(c).is_some() || lower_value(c).is_some() || mixed_value(c).is_some() || punct_value(c).is_some()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mode {
    Text,
    Byte,
    Numeric,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    mode: Mode,
    start: usize,
    end: usize,
}

impl Segment {
    fn len(&self) -> usize {
        self.end - self.start
    }
}

fn segments(payload: &[u8], policy: ModePolicy) -> Result<Vec<Segment>, Pdf417Error> {
    let whole = |mode| vec![Segment { mode, start: 0, end: payload.len() }];
    match policy {
        ModePolicy::ByteOnly => return Ok(whole(Mode::Byte)),
        ModePolicy::TextOnly => {
            if let Some(offset) = payload.iter().position(|&c| !is_text(c)) {
                return Err(Pdf417Error::IncompatibleMode { mode: policy, offset });
            }
            return Ok(whole(Mode::Text));
        }
        ModePolicy::NumericOnly => {
            if let Some(offset) = payload.iter().position(|c| !c.is_ascii_digit()) {
                return Err(Pdf417Error::IncompatibleMode { mode: policy, offset });
            }
            return Ok(whole(Mode::Numeric));
        }
        ModePolicy::Auto => {}
    }

    let mut raw: Vec<Segment> = Vec::new();
    let mut push = |mode, start, end| match raw.last_mut() {
        Some(last) if last.mode == mode && last.end == start => last.end = end,
        _ => raw.push(Segment { mode, start, end }),
    };
    let mut i = 0;
    while i < payload.len() {
        let c = payload[i];
        if c.is_ascii_digit() {
            let run = payload[i..].iter().take_while(|c| c.is_ascii_digit()).count();
            let mode = if run >= NUMERIC_MIN_RUN { Mode::Numeric } else { Mode::Text };
            push(mode, i, i + run);
            i += run;
        } else if is_text(c) {
            push(Mode::Text, i, i + 1);
            i += 1;
        } else {
            push(Mode::Byte, i, i + 1);
            i += 1;
        }
    }

    // Short text runs next to binary data are cheaper inside the byte run.
    for idx in 0..raw.len() {
        let seg = raw[idx];
        if seg.mode != Mode::Text || seg.len() >= TEXT_MIN_RUN {
            continue;
        }
        let prev_byte = idx > 0 && raw[idx - 1].mode == Mode::Byte;
        let next_byte = raw.get(idx + 1).is_some_and(|s| s.mode == Mode::Byte);
        if prev_byte || next_byte {
            raw[idx].mode = Mode::Byte;
        }
    }
    let mut merged: Vec<Segment> = Vec::with_capacity(raw.len());
    for seg in raw {
        match merged.last_mut() {
            Some(last) if last.mode == seg.mode => last.end = seg.end,
            _ => merged.push(seg),
        }
    }
    Ok(merged)
}

/// Compacts `payload` into data codewords, without the length descriptor.
pub fn compact(payload: &[u8], policy: ModePolicy) -> Result<Vec<Codeword>, Pdf417Error> {
    if payload.is_empty() {
        return Err(Pdf417Error::EmptyPayload);
    }
    let mut out: Vec<u16> = Vec::new();
    for (idx, seg) in segments(payload, policy)?.iter().enumerate() {
        let bytes = &payload[seg.start..seg.end];
        match seg.mode {
            Mode::Text => {
                if idx > 0 {
                    out.push(TEXT_LATCH);
                }
                compact_text(bytes, &mut out);
            }
            Mode::Byte => {
                out.push(if bytes.len().is_multiple_of(6) { BYTE_LATCH_FULL } else { BYTE_LATCH });
                compact_bytes(bytes, &mut out);
            }
            Mode::Numeric => {
                out.push(NUMERIC_LATCH);
                compact_numeric(bytes, &mut out);
            }
        }
        if out.len() > MAX_DATA_CODEWORDS {
            return Err(Pdf417Error::CapacityExceeded { needed: out.len(), limit: MAX_DATA_CODEWORDS });
        }
    }
    Ok(out.into_iter().map(Codeword).collect())
}

fn compact_text(bytes: &[u8], out: &mut Vec<u16>) {
    let mut values: Vec<u8> = Vec::with_capacity(bytes.len() * 2);
    let mut sub = Submode::Alpha;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let next = bytes.get(i + 1).copied();
        match sub {
            Submode::Alpha => {
                if let Some(v) = alpha_value(c) {
                    values.push(v);
                } else if lower_value(c).is_some() {
                    values.push(LL);
                    sub = Submode::Lower;
                    continue;
                } else if mixed_value(c).is_some() {
                    values.push(ML);
                    sub = Submode::Mixed;
                    continue;
                } else {
                    values.push(PS);
                    values.push(punct_value(c).unwrap());
                }
            }
            Submode::Lower => {
                if let Some(v) = lower_value(c) {
                    values.push(v);
                } else if let Some(v) = alpha_value(c) {
                    if next.is_some_and(|n| n.is_ascii_uppercase()) {
                        values.push(ML);
                        values.push(AL);
                        sub = Submode::Alpha;
                        continue;
                    }
                    values.push(AS);
                    values.push(v);
                } else if mixed_value(c).is_some() {
                    values.push(ML);
                    sub = Submode::Mixed;
                    continue;
                } else {
                    values.push(PS);
                    values.push(punct_value(c).unwrap());
                }
            }
            Submode::Mixed => {
                if let Some(v) = mixed_value(c) {
                    values.push(v);
                } else if alpha_value(c).is_some() {
                    values.push(AL);
                    sub = Submode::Alpha;
                    continue;
                } else if lower_value(c).is_some() {
                    values.push(LL);
                    sub = Submode::Lower;
                    continue;
                } else if next.is_some_and(|n| punct_value(n).is_some() && mixed_value(n).is_none()) {
                    values.push(PL);
                    sub = Submode::Punct;
                    continue;
                } else {
                    values.push(PS);
                    values.push(punct_value(c).unwrap());
                }
            }
            Submode::Punct => {
                if let Some(v) = punct_value(c) {
                    values.push(v);
                } else {
                    values.push(PUNCT_AL);
                    sub = Submode::Alpha;
                    continue;
                }
            }
        }
        i += 1;
    }
    if values.len() % 2 == 1 {
        values.push(PS);
    }
    out.extend(values.chunks(2).map(|p| p[0] as u16 * 30 + p[1] as u16));
}

fn compact_bytes(bytes: &[u8], out: &mut Vec<u16>) {
    let mut chunks = bytes.chunks_exact(6);
    for chunk in &mut chunks {
        let mut n: u64 = chunk.iter().fold(0, |acc, &b| (acc << 8) | b as u64);
        let mut digits = [0u16; 5];
        for d in digits.iter_mut().rev() {
            *d = (n % 900) as u16;
            n /= 900;
        }
        out.extend_from_slice(&digits);
    }
    out.extend(chunks.remainder().iter().map(|&b| b as u16));
}

fn compact_numeric(digits: &[u8], out: &mut Vec<u16>) {
    for group in digits.chunks(NUMERIC_GROUP) {
        // Decimal digits of "1" followed by the group, repeatedly divided by 900.
        let mut num: Vec<u8> = Vec::with_capacity(group.len() + 1);
        num.push(1);
        num.extend(group.iter().map(|d| d - b'0'));
        let mut base900: Vec<u16> = Vec::new();
        while !(num.is_empty() || num.len() == 1 && num[0] == 0) {
            let mut rem: u32 = 0;
            let mut quotient = Vec::with_capacity(num.len());
            for &d in &num {
                let cur = rem * 10 + d as u32;
                let q = cur / 900;
                rem = cur % 900;
                if !(quotient.is_empty() && q == 0) {
                    quotient.push(q as u8);
                }
            }
            base900.push(rem as u16);
            num = quotient;
        }
        out.extend(base900.iter().rev());
    }
}

/// Inverse of [`compact`]: data codewords (after the length descriptor) to bytes.
pub fn decompact(codewords: &[Codeword]) -> Result<Vec<u8>, Pdf417Error> {
    let cw: Vec<u16> = codewords.iter().map(|c| c.value()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut mode = TEXT_LATCH;
    while i < cw.len() {
        let end = cw[i..].iter().position(|&c| c >= 900 && c != BYTE_SHIFT).map_or(cw.len(), |p| i + p);
        let body = &cw[i..end];
        match mode {
            TEXT_LATCH => decode_text(body, &mut out)?,
            BYTE_LATCH => decode_bytes(body, false, &mut out)?,
            BYTE_LATCH_FULL => decode_bytes(body, true, &mut out)?,
            NUMERIC_LATCH => decode_numeric(body, &mut out)?,
            _ => return Err(Pdf417Error::MalformedData("unsupported mode codeword")),
        }
        if end == cw.len() {
            break;
        }
        mode = cw[end];
        i = end + 1;
    }
    Ok(out)
}

fn decode_text(body: &[u16], out: &mut Vec<u8>) -> Result<(), Pdf417Error> {
    let mut sub = Submode::Alpha;
    let mut shift: Option<Submode> = None;
    let mut i = 0;
    while i < body.len() {
        let cw = body[i];
        i += 1;
        if cw == BYTE_SHIFT {
            let b = *body.get(i).ok_or(Pdf417Error::MalformedData("byte shift at end of data"))?;
            if b > 255 {
                return Err(Pdf417Error::MalformedData("byte shift value above 255"));
            }
            out.push(b as u8);
            i += 1;
            continue;
        }
        for v in [(cw / 30) as u8, (cw % 30) as u8] {
            let active = shift.take().unwrap_or(sub);
            let shifted = active != sub;
            match active {
                Submode::Alpha => match v {
                    0..=25 => out.push(b'A' + v),
                    26 => out.push(b' '),
                    LL if !shifted => sub = Submode::Lower,
                    ML if !shifted => sub = Submode::Mixed,
                    PS if !shifted => shift = Some(Submode::Punct),
                    _ => {}
                },
                Submode::Lower => match v {
                    0..=25 => out.push(b'a' + v),
                    26 => out.push(b' '),
                    AS => shift = Some(Submode::Alpha),
                    ML => sub = Submode::Mixed,
                    PS => shift = Some(Submode::Punct),
                    _ => unreachable!(),
                },
                Submode::Mixed => match v {
                    0..=24 => out.push(MIXED[v as usize]),
                    PL => sub = Submode::Punct,
                    26 => out.push(b' '),
                    LL => sub = Submode::Lower,
                    AL => sub = Submode::Alpha,
                    PS => shift = Some(Submode::Punct),
                    _ => unreachable!(),
                },
                Submode::Punct => match v {
                    0..=28 => out.push(PUNCT[v as usize]),
                    PUNCT_AL if !shifted => sub = Submode::Alpha,
                    _ => {}
                },
            }
        }
    }
    Ok(())
}

fn decode_bytes(body: &[u16], full_groups: bool, out: &mut Vec<u8>) -> Result<(), Pdf417Error> {
    if body.iter().any(|&c| c >= 900 || c == BYTE_SHIFT) {
        return Err(Pdf417Error::MalformedData("control codeword inside byte compaction"));
    }
    let groups = if full_groups || body.is_empty() { body.len() / 5 } else { (body.len() - 1) / 5 };
    for g in body[..groups * 5].chunks(5) {
        let n = g.iter().fold(0u64, |acc, &c| acc * 900 + c as u64);
        if n >= 1 << 48 {
            return Err(Pdf417Error::MalformedData("byte group exceeds 48 bits"));
        }
        out.extend_from_slice(&n.to_be_bytes()[2..]);
    }
    let tail = &body[groups * 5..];
    if tail.iter().any(|&c| c > 255) {
        return Err(Pdf417Error::MalformedData("byte value above 255"));
    }
    out.extend(tail.iter().map(|&c| c as u8));
    Ok(())
}

fn decode_numeric(body: &[u16], out: &mut Vec<u8>) -> Result<(), Pdf417Error> {
    if body.iter().any(|&c| c >= 900) {
        return Err(Pdf417Error::MalformedData("control codeword inside numeric compaction"));
    }
    for group in body.chunks(15) {
        // Little-endian decimal digits of the base-900 number.
        let mut dec: Vec<u8> = vec![0];
        for &c in group {
            let mut carry = c as u32;
            for d in dec.iter_mut() {
                let cur = *d as u32 * 900 + carry;
                *d = (cur % 10) as u8;
                carry = cur / 10;
            }
            while carry > 0 {
                dec.push((carry % 10) as u8);
                carry /= 10;
            }
        }
        while dec.len() > 1 && dec.last() == Some(&0) {
            dec.pop();
        }
        if dec.last() != Some(&1) || dec.len() < 2 {
            return Err(Pdf417Error::MalformedData("numeric group without leading 1"));
        }
        out.extend(dec[..dec.len() - 1].iter().rev().map(|d| b'0' + d));
    }
    Ok(())
}
