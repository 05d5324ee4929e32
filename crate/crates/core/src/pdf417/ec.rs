//! Reed-Solomon coding over GF(929).
//!
//! The generator polynomial for `k` error-correction codewords is
//! `(x - 3)(x - 3^2)...(x - 3^k)`. A codeword sequence is read as a
//! polynomial whose first element is the highest-degree coefficient; a valid
//! sequence vanishes at every root of the generator.
//!
//! Decoding is the textbook syndrome decoder: Berlekamp-Massey for the error
//! locator, a Chien search for its roots and Forney's formula for the error
//! values. At most `(k - 1) / 2` errors are corrected, which leaves level 0
//! with detection only.

use alloc::vec;
use alloc::vec::Vec;

use super::{Codeword, EcLevel, Pdf417Error};
use crate::gf929::{eval_asc, eval_desc, Gf};

const FIELD_ORDER: usize = 928;

/// Generator coefficients for `k` codewords, highest degree first (monic).
pub fn generator_polynomial(k: usize) -> Vec<u16> {
    let mut g = vec![Gf::ONE];
    for i in 1..=k {
        let root = Gf::exp(i);
        let mut next = vec![Gf::ZERO; g.len() + 1];
        for (j, &c) in g.iter().enumerate() {
            next[j] = next[j] + c;
            next[j + 1] = next[j + 1] - c * root;
        }
        g = next;
    }
    g.into_iter().map(Gf::value).collect()
}

/// Error-correction codewords for `data` at `ec_level`.
pub fn rs_generate(data: &[Codeword], ec_level: EcLevel) -> Vec<Codeword> {
    let k = ec_level.ec_count();
    let g: Vec<Gf> = generator_polynomial(k).into_iter().map(|v| Gf::new(v as u32)).collect();
    let mut rem = vec![Gf::ZERO; k];
    for d in data {
        let feedback = Gf::new(d.value() as u32) + rem[0];
        rem.rotate_left(1);
        rem[k - 1] = Gf::ZERO;
        for i in 0..k {
            rem[i] = rem[i] - feedback * g[i + 1];
        }
    }
    rem.into_iter().map(|r| Codeword((-r).value())).collect()
}

/// `S_i = r(3^i)` for `i` in `1..=ec_count`.
pub fn syndromes(received: &[Codeword], ec_count: usize) -> Vec<u16> {
    let poly: Vec<Gf> = received.iter().map(|c| Gf::new(c.value() as u32)).collect();
    (1..=ec_count).map(|i| eval_desc(&poly, Gf::exp(i)).value()).collect()
}

/// Corrects codeword errors at unknown positions.
///
/// Returns the corrected sequence and the number of codewords changed.
pub fn rs_correct(received: &[Codeword], ec_count: usize) -> Result<(Vec<Codeword>, usize), Pdf417Error> {
    if ec_count == 0 || received.len() <= ec_count {
        return Err(Pdf417Error::MalformedData("sequence not longer than its error correction"));
    }
    let n = received.len();
    let mut word: Vec<Gf> = received.iter().map(|c| Gf::new(c.value() as u32)).collect();
    let synd: Vec<Gf> = (1..=ec_count).map(|i| eval_desc(&word, Gf::exp(i))).collect();
    if synd.iter().all(|s| s.is_zero()) {
        return Ok((received.to_vec(), 0));
    }

    let locator = berlekamp_massey(&synd);
    let errors = locator.len() - 1;
    if errors == 0 || errors > (ec_count - 1) / 2 {
        return Err(Pdf417Error::UncorrectableSymbol);
    }

    // Chien search over the distinct field elements. For sequences longer
    // than the field order a root matches several positions; those cases
    // cannot be resolved and are reported as uncorrectable.
    let mut positions = Vec::with_capacity(errors);
    for e in 0..FIELD_ORDER {
        let x_inv = Gf::exp(FIELD_ORDER - e);
        if !eval_asc(&locator, x_inv).is_zero() {
            continue;
        }
        if e >= n {
            return Err(Pdf417Error::UncorrectableSymbol);
        }
        if e + FIELD_ORDER < n {
            return Err(Pdf417Error::UncorrectableSymbol);
        }
        positions.push((n - 1 - e, Gf::exp(e)));
    }
    if positions.len() != errors {
        return Err(Pdf417Error::UncorrectableSymbol);
    }

    // Omega = S(x) * Lambda(x) mod x^k, S(x) = sum S_{i+1} x^i.
    let mut omega = vec![Gf::ZERO; ec_count];
    for (i, &s) in synd.iter().enumerate() {
        for (j, &l) in locator.iter().enumerate() {
            if i + j < ec_count {
                omega[i + j] = omega[i + j] + s * l;
            }
        }
    }
    // Formal derivative.
    let derivative: Vec<Gf> = locator
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * Gf::new(i as u32))
        .collect();

    for &(pos, x) in &positions {
        let x_inv = x.inv();
        let denom = eval_asc(&derivative, x_inv);
        if denom.is_zero() {
            return Err(Pdf417Error::UncorrectableSymbol);
        }
        let magnitude = -(eval_asc(&omega, x_inv) / denom);
        word[pos] = word[pos] - magnitude;
    }

    if (1..=ec_count).any(|i| !eval_desc(&word, Gf::exp(i)).is_zero()) {
        return Err(Pdf417Error::UncorrectableSymbol);
    }
    let corrected = word.into_iter().map(|g| Codeword(g.value())).collect();
    Ok((corrected, errors))
}

/// Error locator polynomial, lowest degree first, trimmed to its degree.
fn berlekamp_massey(synd: &[Gf]) -> Vec<Gf> {
    let mut c = vec![Gf::ONE];
    let mut b = vec![Gf::ONE];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut last = Gf::ONE;
    for n in 0..synd.len() {
        let mut d = synd[n];
        for i in 1..=l.min(c.len() - 1) {
            d = d + c[i] * synd[n - i];
        }
        if d.is_zero() {
            m += 1;
            continue;
        }
        let coef = d / last;
        let mut next = c.clone();
        if next.len() < b.len() + m {
            next.resize(b.len() + m, Gf::ZERO);
        }
        for (i, &bi) in b.iter().enumerate() {
            next[i + m] = next[i + m] - coef * bi;
        }
        if 2 * l <= n {
            b = c;
            l = n + 1 - l;
            last = d;
            m = 1;
        } else {
            m += 1;
        }
        c = next;
    }
    c.truncate(l + 1);
    c.resize(l + 1, Gf::ZERO);
    c
}
