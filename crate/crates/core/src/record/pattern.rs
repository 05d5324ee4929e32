//! A small pattern language for identifier formats.
//!
//! | token      | matches                          |
//! |------------|----------------------------------|
//! | `A`        | uppercase letter                 |
//! | `a`        | lowercase letter                 |
//! | `9`        | digit                            |
//! | `X`        | uppercase letter or digit        |
//! | `[...]`    | one of the listed chars/ranges   |
//! | `(...)`    | group                            |
//! | `\c`       | the literal `c`                  |
//! | `{n}`, `{m,n}`, `?` | repetition of the previous atom |
//!
//! Every other character stands for itself. Patterns match whole strings.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

#[derive(Clone, PartialEq, Eq, Debug)]
enum Atom {
    Class(Vec<(u8, u8)>),
    Group(Vec<Piece>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
struct Piece {
    atom: Atom,
    min: usize,
    max: usize,
}

/// A parsed identifier pattern.
#[derive(Clone, PartialEq, Eq)]
pub struct Pattern {
    source: String,
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad pattern {pattern:?} at offset {offset}: {reason}")]
pub struct PatternError {
    pub pattern: String,
    pub offset: usize,
    pub reason: &'static str,
}

const UPPER: (u8, u8) = (b'A', b'Z');
const LOWER: (u8, u8) = (b'a', b'z');
const DIGIT: (u8, u8) = (b'0', b'9');
const MAX_REPEAT: usize = 64;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn fail(&self, reason: &'static str) -> PatternError {
        PatternError { pattern: self.text.into(), offset: self.pos, reason }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn sequence(&mut self, in_group: bool) -> Result<Vec<Piece>, PatternError> {
        let mut pieces = Vec::new();
        while let Some(c) = self.peek() {
            let atom = match c {
                b')' if in_group => break,
                b')' | b'{' | b'}' | b'?' | b']' => return Err(self.fail("unexpected metacharacter")),
                b'(' => {
                    self.pos += 1;
                    let inner = self.sequence(true)?;
                    if self.peek() != Some(b')') {
                        return Err(self.fail("unclosed group"));
                    }
                    self.pos += 1;
                    Atom::Group(inner)
                }
                b'[' => {
                    self.pos += 1;
                    self.class()?
                }
                b'\\' => {
                    self.pos += 1;
                    let lit = self.peek().ok_or_else(|| self.fail("dangling escape"))?;
                    self.pos += 1;
                    Atom::Class(alloc::vec![(lit, lit)])
                }
                _ => {
                    self.pos += 1;
                    Atom::Class(match c {
                        b'A' => alloc::vec![UPPER],
                        b'a' => alloc::vec![LOWER],
                        b'9' => alloc::vec![DIGIT],
                        b'X' => alloc::vec![UPPER, DIGIT],
                        _ if c.is_ascii() => alloc::vec![(c, c)],
                        _ => return Err(self.fail("non-ASCII character")),
                    })
                }
            };
            let (min, max) = self.quantifier()?;
            pieces.push(Piece { atom, min, max });
        }
        Ok(pieces)
    }

    fn class(&mut self) -> Result<Atom, PatternError> {
        let mut ranges = Vec::new();
        loop {
            let c = self.peek().ok_or_else(|| self.fail("unclosed class"))?;
            self.pos += 1;
            let c = match c {
                b']' if !ranges.is_empty() => return Ok(Atom::Class(ranges)),
                b'\\' => {
                    let lit = self.peek().ok_or_else(|| self.fail("dangling escape"))?;
                    self.pos += 1;
                    lit
                }
                _ => c,
            };
            if self.peek() == Some(b'-') && self.src.get(self.pos + 1).is_some_and(|&n| n != b']') {
                let hi = self.src[self.pos + 1];
                if hi < c {
                    return Err(self.fail("reversed range"));
                }
                self.pos += 2;
                ranges.push((c, hi));
            } else {
                ranges.push((c, c));
            }
        }
    }

    fn number(&mut self) -> Result<usize, PatternError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        core::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.fail("expected a count"))
    }

    fn quantifier(&mut self) -> Result<(usize, usize), PatternError> {
        match self.peek() {
            Some(b'?') => {
                self.pos += 1;
                Ok((0, 1))
            }
            Some(b'{') => {
                self.pos += 1;
                let min = self.number()?;
                let max = if self.peek() == Some(b',') {
                    self.pos += 1;
                    self.number()?
                } else {
                    min
                };
                if self.peek() != Some(b'}') {
                    return Err(self.fail("unclosed repetition"));
                }
                self.pos += 1;
                if max < min || max > MAX_REPEAT {
                    return Err(self.fail("repetition bounds"));
                }
                Ok((min, max))
            }
            _ => Ok((1, 1)),
        }
    }
}

impl Pattern {
    pub fn parse(text: &str) -> Result<Pattern, PatternError> {
        let mut p = Parser { src: text.as_bytes(), pos: 0, text };
        let pieces = p.sequence(false)?;
        if pieces.is_empty() {
            return Err(p.fail("empty pattern"));
        }
        Ok(Pattern { source: text.into(), pieces })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    /// Whole-string match.
    pub fn matches(&self, s: &str) -> bool {
        let bytes = s.as_bytes();
        let mut ends = Vec::new();
        match_seq(&self.pieces, bytes, 0, &mut ends);
        ends.contains(&bytes.len())
    }

    /// A random string the pattern matches. Each repetition count and each
    /// class member is drawn uniformly.
    pub fn expand<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let mut out = String::new();
        expand_seq(&self.pieces, rng, &mut out);
        out
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({:?})", self.source)
    }
}

fn in_class(ranges: &[(u8, u8)], c: u8) -> bool {
    ranges.iter().any(|&(lo, hi)| (lo..=hi).contains(&c))
}

// Collects every end offset reachable after matching `pieces` from `at`.
fn match_seq(pieces: &[Piece], s: &[u8], at: usize, ends: &mut Vec<usize>) {
    let Some((first, rest)) = pieces.split_first() else {
        if !ends.contains(&at) {
            ends.push(at);
        }
        return;
    };
    let mut frontier = alloc::vec![at];
    for count in 0..=first.max {
        if count >= first.min {
            for &p in &frontier {
                match_seq(rest, s, p, ends);
            }
        }
        if count == first.max {
            break;
        }
        let mut next = Vec::new();
        for &p in &frontier {
            match_atom(&first.atom, s, p, &mut next);
        }
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
}

fn match_atom(atom: &Atom, s: &[u8], at: usize, ends: &mut Vec<usize>) {
    match atom {
        Atom::Class(r) => {
            if at < s.len() && in_class(r, s[at]) {
                ends.push(at + 1);
            }
        }
        Atom::Group(inner) => match_seq(inner, s, at, ends),
    }
}

fn expand_seq<R: Rng + ?Sized>(pieces: &[Piece], rng: &mut R, out: &mut String) {
    for piece in pieces {
        let n = rng.random_range(piece.min..=piece.max);
        for _ in 0..n {
            match &piece.atom {
                Atom::Class(ranges) => {
                    let total: u32 = ranges.iter().map(|&(lo, hi)| (hi - lo) as u32 + 1).sum();
                    let mut k = rng.random_range(0..total);
                    for &(lo, hi) in ranges {
                        let span = (hi - lo) as u32 + 1;
                        if k < span {
                            out.push((lo + k as u8) as char);
                            break;
                        }
                        k -= span;
                    }
                }
                Atom::Group(inner) => expand_seq(inner, rng, out),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn california_style() {
        let p = Pattern::parse("A9{7}").unwrap();
        assert!(p.matches("B1234567"));
        assert!(!p.matches("B123456"));
        assert!(!p.matches("11234567"));
    }

    #[test]
    fn optional_group_and_class() {
        let p = Pattern::parse("9{5}(-9{4})?").unwrap();
        assert!(p.matches("90210"));
        assert!(p.matches("90210-1234"));
        assert!(!p.matches("90210-12"));
        let q = Pattern::parse("[A-F0-9]{2}\\-X").unwrap();
        assert!(q.matches("0F-Z"));
        assert!(!q.matches("0G-Z"));
    }

    #[test]
    fn expansion_matches() {
        let mut r = rng(3);
        for src in ["A9{7}", "9{5}(-9{4})?", "XXX-9{2,6}", "[BCD]a{3}\\9"] {
            let p = Pattern::parse(src).unwrap();
            for _ in 0..50 {
                let s = p.expand(&mut r);
                assert!(p.matches(&s), "{src} {s}");
            }
        }
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "A{", "(A", "A{3,1}", "[", "\\", "A)"] {
            assert!(Pattern::parse(bad).is_err(), "{bad}");
        }
    }
}
