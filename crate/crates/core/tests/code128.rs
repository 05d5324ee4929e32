use idbsynth_core::code128::{self, Code128Error, STOP};
use proptest::prelude::*;

// Independent plan search: every sequence of emits, shifts and latches,
// no memoization. Returns the fewest data symbols.
pub fn exhaustive_min(text: &[u8]) -> u32 {
    fn in_a(c: u8) -> bool {
        c < 96
    }
    fn in_b(c: u8) -> bool {
        (32..128).contains(&c)
    }
    fn go(t: &[u8], i: usize, set: u8, just_latched: bool) -> u32 {
        if i == t.len() {
            return 0;
        }
        let mut best = u32::MAX / 2;
        let c = t[i];
        match set {
            b'C' => {
                if i + 1 < t.len() && c.is_ascii_digit() && t[i + 1].is_ascii_digit() {
                    best = best.min(1 + go(t, i + 2, set, false));
                }
            }
            _ => {
                let (here, there) = if set == b'A' { (in_a(c), in_b(c)) } else { (in_b(c), in_a(c)) };
                if here {
                    best = best.min(1 + go(t, i + 1, set, false));
                }
                if there {
                    best = best.min(2 + go(t, i + 1, set, false));
                }
            }
        }
        if !just_latched {
            for other in *b"ABC" {
                if other != set {
                    best = best.min(1 + go(t, i, other, true));
                }
            }
        }
        best
    }
    b"ABC".iter().map(|&s| go(text, 0, s, false)).min().unwrap()
}

fn all_strings(alphabet: &[u8], max_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c as char);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[test]
fn example_plans_match_oracle() {
    assert_eq!(code128::plan("123456").unwrap().len() - 1, 3);
    assert_eq!(exhaustive_min(b"123456"), 3);
    assert_eq!(code128::plan("A1B2C3").unwrap().len() - 1, exhaustive_min(b"A1B2C3") as usize);
}

#[test]
fn dp_is_optimal_exhaustively_over_small_alphabet() {
    for s in all_strings(b"01Aa-", 5) {
        let dp = code128::plan(&s).unwrap().len() - 1;
        assert_eq!(dp as u32, exhaustive_min(s.as_bytes()), "{s:?}");
    }
}

#[test]
fn tie_breaks_are_deterministic() {
    // One letter: B, A and a latch-free plan all cost 1; Start B wins.
    assert_eq!(code128::plan("A").unwrap()[0], code128::START_B);
    // Control code only encodable in A.
    assert_eq!(code128::plan("\n").unwrap()[0], code128::START_A);
    assert_eq!(code128::plan("12").unwrap()[0], code128::START_C);
}

fn mixed_char() -> impl Strategy<Value = char> {
    prop_oneof![
        (b'0'..=b'9').prop_map(char::from),
        (b'A'..=b'Z').prop_map(char::from),
        (b'a'..=b'z').prop_map(char::from),
        prop::sample::select(vec!['-', ' ', '/', '.', '\t', '\n', '~', '\x7f']),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn dp_optimal_up_to_eight(s in prop::collection::vec(mixed_char(), 1..=8)) {
        let s: String = s.into_iter().collect();
        let dp = code128::plan(&s).unwrap().len() - 1;
        prop_assert_eq!(dp as u32, exhaustive_min(s.as_bytes()));
    }

    #[test]
    fn round_trip_printable(s in "[ -~]{1,64}") {
        let sym = code128::encode_c128(&s).unwrap();
        prop_assert_eq!(code128::decode_c128(&sym.runs).unwrap(), s);
        prop_assert_eq!(sym.runs.iter().map(|&r| r as usize).sum::<usize>(), sym.modules_total);
        prop_assert_eq!(sym.modules_total, 11 * (sym.values.len() - 1) + 13);
        let n = sym.values.len();
        prop_assert_eq!(sym.values[n - 2], code128::checksum(sym.values[0], &sym.values[1..n - 2]));
        prop_assert_eq!(sym.values[n - 1], STOP);
    }

    #[test]
    fn single_substitution_detected(s in "[ -~]{1,32}", pick in any::<prop::sample::Index>(), delta in 1u8..103) {
        let sym = code128::encode_c128(&s).unwrap();
        let n = sym.values.len();
        // Any data or checksum symbol replaced by a different data value.
        let at = 1 + pick.index(n - 2);
        let mut values = sym.values.clone();
        values[at] = (values[at] + delta) % 103;
        let mut runs = Vec::new();
        for &v in &values {
            runs.extend_from_slice(code128::pattern_widths(v));
        }
        let detected = matches!(code128::decode_c128(&runs), Err(Code128Error::ChecksumMismatch { .. }));
        prop_assert!(detected, "substitution at {} not detected", at);
    }
}
