//! Codeword patterns for the three PDF417 clusters.
//!
//! Patterns are stored as 17-bit integers, most significant bit first,
//! generated at build time from `data/pdf417_clusters.txt`.

include!(concat!(env!("OUT_DIR"), "/pdf417_clusters.rs"));

/// Start pattern, widths 8 1 1 1 1 1 1 3.
pub const START_PATTERN: u32 = 0x1fea8;
pub const START_WIDTH: usize = 17;
/// Stop pattern, widths 7 1 1 3 1 1 1 2 1.
pub const STOP_PATTERN: u32 = 0x3fa29;
pub const STOP_WIDTH: usize = 18;

/// The 17-bit pattern of `value` in cluster table `table` (0, 1 or 2 for
/// clusters 0, 3 and 6).
pub fn cluster_pattern(table: usize, value: u16) -> u32 {
    PATTERNS[table][value as usize]
}

/// Looks up a 17-bit pattern, returning `(table, value)`.
pub fn lookup_pattern(bits: u32) -> Option<(usize, u16)> {
    REVERSE
        .binary_search_by_key(&bits, |e| e.0)
        .ok()
        .map(|i| (REVERSE[i].1 as usize, REVERSE[i].2))
}

/// Bar/space widths for a pattern of `len` modules, starting with a bar.
pub fn widths(bits: u32, len: usize) -> impl Iterator<Item = u8> {
    let mut runs = [0u8; 9];
    let mut n = 0;
    let mut prev = None;
    for i in (0..len).rev() {
        let b = (bits >> i) & 1 == 1;
        if prev == Some(b) {
            runs[n - 1] += 1;
        } else {
            runs[n] = 1;
            n += 1;
            prev = Some(b);
        }
    }
    runs.into_iter().take(n)
}
