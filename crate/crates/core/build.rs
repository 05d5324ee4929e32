use std::env;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn main() {
    let src = "data/pdf417_clusters.txt";
    println!("cargo:rerun-if-changed={src}");
    let text = fs::read_to_string(src).expect("read cluster table");

    let mut table = vec![vec![0u32; 929]; 3];
    let mut filled = vec![vec![false; 929]; 3];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let cluster: usize = it.next().unwrap().parse().unwrap();
        let value: usize = it.next().unwrap().parse().unwrap();
        let widths = it.next().unwrap();
        assert_eq!(widths.len(), 8, "{line}");
        let mut bits = 0u32;
        let mut dark = true;
        let mut total = 0;
        for w in widths.bytes() {
            let w = (w - b'0') as u32;
            assert!((1..=6).contains(&w), "{line}");
            for _ in 0..w {
                bits = (bits << 1) | dark as u32;
            }
            total += w;
            dark = !dark;
        }
        assert_eq!(total, 17, "{line}");
        assert!(!filled[cluster][value], "duplicate entry {line}");
        filled[cluster][value] = true;
        table[cluster][value] = bits;
    }
    assert!(filled.iter().flatten().all(|f| *f), "cluster table incomplete");

    let mut reverse: Vec<(u32, u8, u16)> = Vec::with_capacity(3 * 929);
    for (c, row) in table.iter().enumerate() {
        for (v, &bits) in row.iter().enumerate() {
            reverse.push((bits, c as u8, v as u16));
        }
    }
    reverse.sort();
    for pair in reverse.windows(2) {
        assert_ne!(pair[0].0, pair[1].0, "pattern shared between codewords");
    }

    let mut out = String::new();
    out.push_str("pub(crate) static PATTERNS: [[u32; 929]; 3] = [\n");
    for row in &table {
        out.push_str("    [");
        for bits in row {
            write!(out, "0x{bits:05x},").unwrap();
        }
        out.push_str("],\n");
    }
    out.push_str("];\n");
    writeln!(out, "pub(crate) static REVERSE: [(u32, u8, u16); {}] = [", reverse.len()).unwrap();
    for (bits, c, v) in &reverse {
        write!(out, "(0x{bits:05x},{c},{v}),").unwrap();
    }
    out.push_str("];\n");

    let dest = Path::new(&env::var("OUT_DIR").unwrap()).join("pdf417_clusters.rs");
    fs::write(dest, out).unwrap();
}
