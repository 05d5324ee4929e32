//! File formats: bilevel module images, Code 128 run lists and record
//! corpora.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use idbsynth_core::bits::BitGrid;
use idbsynth_core::record::{parse_record_line, DocumentKind, IdentityRecord, Source};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("bilevel image: {0}")]
    Pbm(String),
    #[error("run list: {0}")]
    Runs(String),
    #[error("{path}:{line}: {message}")]
    Corpus { path: PathBuf, line: usize, message: String },
}

fn io_err(path: &Path, e: std::io::Error) -> FormatError {
    FormatError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Binary PBM (`P4`), each module drawn as `module_px` square pixels.
pub fn write_pbm(grid: &BitGrid, module_px: usize) -> Vec<u8> {
    let n = module_px.max(1);
    let (w, h) = (grid.width() * n, grid.height() * n);
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    let stride = w.div_ceil(8);
    for y in 0..h {
        let row = grid.row(y / n);
        let mut packed = vec![0u8; stride];
        for x in 0..w {
            if row[x / n] {
                packed[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    out
}

struct Header<'a> {
    magic: &'a [u8],
    width: usize,
    height: usize,
    body: &'a [u8],
}

fn pbm_header(bytes: &[u8]) -> Result<Header<'_>, FormatError> {
    let bad = |m: &str| FormatError::Pbm(m.to_string());
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(&bytes[start..pos]);
    }
    let num = |t: &[u8]| std::str::from_utf8(t).ok().and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad("bad size"));
    let (width, height) = (num(tokens[1])?, num(tokens[2])?);
    // Exactly one whitespace byte separates the header from a binary body.
    Ok(Header { magic: tokens[0], width, height, body: bytes.get(pos + 1..).unwrap_or(&[]) })
}

/// Reads `P4` or plain `P1` and collapses `module_px` blocks back to
/// modules. Every block must be uniform.
pub fn read_pbm(bytes: &[u8], module_px: usize) -> Result<BitGrid, FormatError> {
    let h = pbm_header(bytes)?;
    let n = module_px.max(1);
    if h.width == 0 || h.height == 0 || h.width % n != 0 || h.height % n != 0 {
        return Err(FormatError::Pbm(format!("{}x{} is not a whole number of {n}px modules", h.width, h.height)));
    }
    let pixel: Box<dyn Fn(usize, usize) -> bool> = match h.magic {
        b"P4" => {
            let stride = h.width.div_ceil(8);
            if h.body.len() < stride * h.height {
                return Err(FormatError::Pbm("truncated raster".into()));
            }
            let body = h.body;
            Box::new(move |x, y| body[y * stride + x / 8] & (0x80 >> (x % 8)) != 0)
        }
        b"P1" => {
            let bits: Vec<bool> = h.body.iter().filter(|b| matches!(b, b'0' | b'1')).map(|&b| b == b'1').collect();
            if bits.len() < h.width * h.height {
                return Err(FormatError::Pbm("truncated raster".into()));
            }
            let w = h.width;
            Box::new(move |x, y| bits[y * w + x])
        }
        _ => return Err(FormatError::Pbm("not a PBM file".into())),
    };
    let mut grid = BitGrid::new(h.width / n, h.height / n);
    for my in 0..grid.height() {
        for mx in 0..grid.width() {
            let dark = pixel(mx * n, my * n);
            for dy in 0..n {
                for dx in 0..n {
                    if pixel(mx * n + dx, my * n + dy) != dark {
                        return Err(FormatError::Pbm(format!("module ({mx}, {my}) is not uniform")));
                    }
                }
            }
            grid.set(mx, my, dark);
        }
    }
    Ok(grid)
}

/// `3,1,2,...` followed by a newline.
pub fn runs_to_text(runs: &[u32]) -> String {
    let mut s = String::new();
    for (i, r) in runs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{r}");
    }
    s.push('\n');
    s
}

pub fn runs_from_text(text: &str) -> Result<Vec<u32>, FormatError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(FormatError::Runs("empty".into()));
    }
    text.split(',')
        .enumerate()
        .map(|(i, t)| match t.trim().parse::<u32>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(FormatError::Runs(format!("item {} is not a positive integer: {t:?}", i + 1))),
        })
        .collect()
}

/// A record corpus file: one header line, then one record per line.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub kind: DocumentKind,
    pub source: Source,
    pub records: Vec<IdentityRecord>,
}

const HEADER_PREFIX: &str = "# idbsynth corpus";

impl Corpus {
    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER_PREFIX} kind={} source={}\n", self.kind, self.source.as_str());
        for r in &self.records {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Corpus, FormatError> {
        let err = |line: usize, message: String| FormatError::Corpus { path: path.to_path_buf(), line, message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let rest = header
            .strip_prefix(HEADER_PREFIX)
            .ok_or_else(|| err(1, format!("expected a `{HEADER_PREFIX} kind=.. source=..` header")))?;
        let (mut kind, mut source) = (None, None);
        for tok in rest.split_whitespace() {
            match tok.split_once('=') {
                Some(("kind", v)) => kind = DocumentKind::parse(v),
                Some(("source", "llm")) => source = Some(Source::Llm),
                Some(("source", "template")) => source = Some(Source::Template),
                _ => return Err(err(1, format!("unknown header item {tok:?}"))),
            }
        }
        let kind = kind.ok_or_else(|| err(1, "header lacks a valid kind".into()))?;
        let source = source.ok_or_else(|| err(1, "header lacks a valid source".into()))?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            records.push(parse_record_line(line, kind, source).map_err(|e| err(i + 2, e.to_string()))?);
        }
        Ok(Corpus { kind, source, records })
    }

    pub fn read(path: &Path) -> Result<Corpus, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Corpus::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        std::fs::write(path, self.to_text()).map_err(|e| io_err(path, e))
    }
}

/// `{dir}/{kind}.{source}.txt`
pub fn corpus_path(dir: &Path, kind: DocumentKind, source: Source) -> PathBuf {
    dir.join(format!("{kind}.{}.txt", source.as_str()))
}
