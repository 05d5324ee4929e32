use idbsynth_core::gf929::Gf;
use idbsynth_core::pdf417::{
    cluster_pattern, compact, decode_matrix, encode, rs_correct, rs_generate, symbol_width, syndromes, Codeword,
    Columns, EcLevel, ModePolicy, Pdf417Error, ROW_HEIGHT, START_PATTERN, STOP_PATTERN,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: u64 = 929;

fn modpow(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    b %= P;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % P;
        }
        b = b * b % P;
        e >>= 1;
    }
    r
}

/// Schoolbook: remainder of data * x^k by prod (x - 3^i), negated.
fn oracle_ec(data: &[u16], k: usize) -> Vec<u16> {
    let mut g = vec![1u64];
    for i in 1..=k as u64 {
        let root = modpow(3, i);
        let mut next = vec![0u64; g.len() + 1];
        for (j, &c) in g.iter().enumerate() {
            next[j] = (next[j] + c) % P;
            next[j + 1] = (next[j + 1] + P - c * root % P) % P;
        }
        g = next;
    }
    let mut num: Vec<u64> = data.iter().map(|&d| d as u64).collect();
    num.extend(std::iter::repeat_n(0, k));
    for i in 0..data.len() {
        let q = num[i];
        if q == 0 {
            continue;
        }
        for (j, &c) in g.iter().enumerate() {
            num[i + j] = (num[i + j] + P - q * c % P) % P;
        }
    }
    num[data.len()..].iter().map(|&r| ((P - r) % P) as u16).collect()
}

fn oracle_syndromes(seq: &[u16], k: usize) -> Vec<u64> {
    (1..=k as u64)
        .map(|i| {
            let x = modpow(3, i);
            seq.iter().fold(0, |acc, &c| (acc * x + c as u64) % P)
        })
        .collect()
}

fn level(l: u8) -> EcLevel {
    EcLevel::new(l).unwrap()
}

#[test]
fn field_laws_exhaustive() {
    for a in 0..929u32 {
        for b in 0..929u32 {
            let (x, y) = (Gf::new(a), Gf::new(b));
            assert_eq!((x * y).value() as u32, a * b % 929);
            assert_eq!((x + y).value() as u32, (a + b) % 929);
            let c = Gf::new((a + b) % 929);
            assert_eq!(x * (y + c), x * y + x * c);
        }
    }
    for a in 1..929u32 {
        assert_eq!(Gf::new(a).inv().value() as u32 * a % 929, 1);
    }
}

#[test]
fn ec_matches_schoolbook_division() {
    assert_eq!(Codeword::values(&rs_generate(&Codeword::list(&[2, 0]), level(0))), oracle_ec(&[2, 0], 2));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for l in 0..=8u8 {
        let k = 2usize << l;
        let n = rng.random_range(1..=(928 - k).min(300));
        let data: Vec<u16> = (0..n).map(|_| rng.random_range(0..929)).collect();
        let ec = Codeword::values(&rs_generate(&Codeword::list(&data), level(l)));
        assert_eq!(ec.len(), k);
        assert_eq!(ec, oracle_ec(&data, k), "level {l}");
        let mut all = data.clone();
        all.extend(&ec);
        assert!(oracle_syndromes(&all, k).iter().all(|&s| s == 0));
        assert!(syndromes(&Codeword::list(&all), k).iter().all(|&s| s == 0));
    }
}

#[test]
fn level_zero_example() {
    let data = Codeword::list(&[2, 100]);
    let ec = rs_generate(&data, level(0));
    assert_eq!(ec.len(), 2);
    let mut all = Codeword::values(&data);
    all.extend(Codeword::values(&ec));
    assert_eq!(oracle_syndromes(&all, 2), [0, 0]);
}

#[test]
fn numeric_compaction_big_integer_oracle() {
    let cw = Codeword::values(&compact(b"000000000000000", ModePolicy::NumericOnly).unwrap());
    // "1" followed by fifteen zeros, written in base 900.
    let mut n: u128 = 10u128.pow(15);
    let mut digits = Vec::new();
    while n > 0 {
        digits.push((n % 900) as u16);
        n /= 900;
    }
    digits.reverse();
    let mut expected = vec![902];
    expected.extend(digits);
    assert_eq!(cw, expected);
}

#[test]
fn byte_and_empty() {
    assert_eq!(Codeword::values(&compact(&[0xff], ModePolicy::ByteOnly).unwrap()), [901, 255]);
    assert_eq!(compact(b"", ModePolicy::Auto), Err(Pdf417Error::EmptyPayload));
}

#[test]
fn hello_and_minimum_rows() {
    let s = encode(b"HELLO", level(2), Columns::Fixed(3)).unwrap();
    assert_eq!(decode_matrix(&s.matrix).unwrap(), b"HELLO");
    let one = encode(&[0xff], level(0), Columns::Auto).unwrap();
    assert_eq!(one.rows, 3);
    // A text byte packs into one codeword; the aspect rule then takes one
    // column of four rows.
    assert_eq!(encode(b"x", level(0), Columns::Auto).unwrap().rows, 4);
    assert_eq!(one.data_codewords[0].value() as usize, one.data_codewords.len());
}

#[test]
fn oversized_payload() {
    let big: Vec<u8> = (0..2000u32).map(|i| (i * 37 % 256) as u8).collect();
    assert!(matches!(
        encode(&big, level(0), Columns::Auto),
        Err(Pdf417Error::CapacityExceeded { .. } | Pdf417Error::RowLimitExceeded { .. })
    ));
}

fn corrupt(seq: &mut [Codeword], count: usize, rng: &mut ChaCha8Rng) {
    let mut positions: Vec<usize> = (0..seq.len()).collect();
    for i in 0..count {
        let j = rng.random_range(i..positions.len());
        positions.swap(i, j);
        let p = positions[i];
        let old = seq[p].value();
        let new = (old + rng.random_range(1..929)) % 929;
        seq[p] = Codeword::new(new).unwrap();
    }
}

#[test]
fn correction_capability_level_three() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..300 {
        let n = rng.random_range(5..200);
        let data: Vec<u16> = (0..n).map(|_| rng.random_range(0..900)).collect();
        let mut clean = Codeword::list(&data);
        clean.extend(rs_generate(&clean.clone(), level(3)));
        let mut bad = clean.clone();
        corrupt(&mut bad, 7, &mut rng);
        let (fixed, count) = rs_correct(&bad, 16).unwrap();
        assert_eq!((fixed, count), (clean.clone(), 7), "trial {trial}");
        let mut worse = clean.clone();
        corrupt(&mut worse, 9, &mut rng);
        if let Ok((out, _)) = rs_correct(&worse, 16) {
            assert_ne!(out, clean, "nine errors cannot be corrected");
            assert!(syndromes(&out, 16).iter().all(|&s| s == 0));
        }
    }
}

#[test]
fn matrix_cells_corrupted_within_capability() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let payload = b"DAQA1234567\nDCSNGUYEN\nDACLINH\nDBB07041990\n".repeat(3);
    let s = encode(&payload, level(4), Columns::Fixed(6)).unwrap();
    let t = (level(4).ec_count() - 1) / 2;
    let mut m = s.matrix.clone();
    let mut cells: Vec<(usize, usize)> = (0..s.rows).flat_map(|r| (0..s.columns).map(move |c| (r, c))).collect();
    for i in 0..t {
        let j = rng.random_range(i..cells.len());
        cells.swap(i, j);
        let (r, c) = cells[i];
        let bits = cluster_pattern(r % 3, rng.random_range(0..929));
        for line in 0..ROW_HEIGHT {
            for b in 0..17 {
                m.set(34 + 17 * c + b, r * ROW_HEIGHT + line, (bits >> (16 - b)) & 1 == 1);
            }
        }
    }
    assert_eq!(decode_matrix(&m).unwrap(), payload);
}

#[test]
fn all_zero_matrix() {
    let m = idbsynth_core::bits::BitGrid::new(symbol_width(3), 9);
    assert!(matches!(decode_matrix(&m), Err(Pdf417Error::UnknownPattern { .. })));
}

fn bits_at(row: &[bool], x: usize, n: usize) -> u32 {
    row[x..x + n].iter().fold(0, |a, &b| (a << 1) | b as u32)
}

proptest! {
    #[test]
    fn round_trip_all_levels(payload in prop::collection::vec(any::<u8>(), 1..300), l in 0u8..=8) {
        let s = encode(&payload, level(l), Columns::Auto);
        prop_assume!(s.is_ok());
        let s = s.unwrap();
        prop_assert_eq!(decode_matrix(&s.matrix).unwrap(), payload);
        prop_assert_eq!(s.ec_codewords.len(), 2usize << l);
        prop_assert!(s.rows * s.columns >= s.data_codewords.len() + s.ec_codewords.len());
        prop_assert_eq!(s.matrix.width(), 17 * (s.columns + 2) + 17 + 18);
        prop_assert_eq!(s.matrix.height(), ROW_HEIGHT * s.rows);
        for y in 0..s.matrix.height() {
            let row = s.matrix.row(y);
            prop_assert_eq!(bits_at(row, 0, 17), START_PATTERN);
            prop_assert_eq!(bits_at(row, row.len() - 18, 18), STOP_PATTERN);
        }
    }

    #[test]
    fn text_round_trip(text in "[ -~]{1,400}") {
        let s = encode(text.as_bytes(), level(5), Columns::Auto).unwrap();
        prop_assert_eq!(decode_matrix(&s.matrix).unwrap(), text.as_bytes());
    }
}
