use alloc::vec;
use alloc::vec::Vec;

use super::tables::{lookup_pattern, START_PATTERN, START_WIDTH};
use super::{decompact, rs_correct, symbol_width, Codeword, EcLevel, Pdf417Error, MAX_COLUMNS};
use crate::bits::BitGrid;

/// Codewords recovered from a module matrix, before error correction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadSymbol {
    pub rows: usize,
    pub columns: usize,
    pub ec_level: EcLevel,
    /// Row-major codewords; unreadable cells are 0.
    pub codewords: Vec<Codeword>,
    /// Number of cells no line could read.
    pub unreadable: usize,
}

#[derive(Default)]
struct Tally {
    votes: Vec<(u16, u32)>,
}

impl Tally {
    fn add(&mut self, v: u16) {
        match self.votes.iter_mut().find(|e| e.0 == v) {
            Some(e) => e.1 += 1,
            None => self.votes.push((v, 1)),
        }
    }

    /// Majority value; `Err` on a tie for first place.
    fn winner(&self) -> Option<Result<u16, ()>> {
        let best = self.votes.iter().map(|e| e.1).max()?;
        let mut top = self.votes.iter().filter(|e| e.1 == best);
        let first = top.next()?.0;
        if top.next().is_some() {
            Some(Err(()))
        } else {
            Some(Ok(first))
        }
    }
}

fn pattern_at(row: &[bool], x: usize) -> u32 {
    row[x..x + 17].iter().fold(0, |acc, &b| (acc << 1) | b as u32)
}

/// Reads rows, columns, level and the codeword grid from a module matrix
/// (one element per module, any number of module rows per codeword row).
///
/// Lines with a damaged start pattern or inconsistent indicators are
/// skipped; each cell takes the majority over the lines that read it.
pub fn read_codewords(matrix: &BitGrid) -> Result<ReadSymbol, Pdf417Error> {
    let width = matrix.width();
    if width < symbol_width(1) || matrix.height() == 0 {
        return Err(Pdf417Error::UnknownPattern { row: 0, column: 0 });
    }
    let columns = (width - symbol_width(0)) / 17;
    if symbol_width(columns) != width || columns > MAX_COLUMNS {
        return Err(Pdf417Error::GeometryMismatch("matrix width is not a symbol width"));
    }

    // Quantities carried by the indicators: (rows-1)/3, level*3+(rows-1)%3,
    // columns-1.
    let mut geometry: [Tally; 3] = Default::default();
    let mut lines: Vec<(usize, usize)> = Vec::new();
    let mut first_bad = None;
    for y in 0..matrix.height() {
        let row = matrix.row(y);
        if pattern_at(row, 0) != START_PATTERN {
            first_bad.get_or_insert((y, 0));
            continue;
        }
        let left = lookup_pattern(pattern_at(row, START_WIDTH));
        let right = lookup_pattern(pattern_at(row, START_WIDTH + 17 * (columns + 1)));
        let row_of = |(table, v): (usize, u16)| 3 * (v as usize / 30) + table;
        // A line whose indicators disagree is misread somewhere; skip it.
        let row_index = match (left, right) {
            (Some(l), Some(r)) if row_of(l) != row_of(r) => None,
            (l, r) => l.or(r).map(row_of),
        };
        if row_index.is_some() {
            if let Some((table, v)) = left {
                geometry[table].add(v % 30);
            }
            if let Some((table, v)) = right {
                geometry[(table + 2) % 3].add(v % 30);
            }
        }
        match row_index {
            Some(r) => lines.push((y, r)),
            None => {
                first_bad.get_or_insert((y, 1));
            }
        }
    }
    if lines.is_empty() {
        let (row, column) = first_bad.unwrap_or((0, 0));
        return Err(Pdf417Error::UnknownPattern { row, column });
    }

    let mut values = [0u16; 3];
    for (slot, tally) in values.iter_mut().zip(&geometry) {
        *slot = match tally.winner() {
            Some(Ok(v)) => v,
            Some(Err(())) => return Err(Pdf417Error::GeometryMismatch("row indicators disagree")),
            None => return Err(Pdf417Error::GeometryMismatch("row indicator missing")),
        };
    }
    let rows = 3 * values[0] as usize + (values[1] % 3) as usize + 1;
    let ec_level = EcLevel::new((values[1] / 3) as u8).ok_or(Pdf417Error::GeometryMismatch("level out of range"))?;
    if values[2] as usize + 1 != columns {
        return Err(Pdf417Error::GeometryMismatch("column indicator disagrees with matrix width"));
    }
    if rows * columns <= ec_level.ec_count() {
        return Err(Pdf417Error::GeometryMismatch("symbol smaller than its error correction"));
    }

    let mut cells: Vec<Tally> = (0..rows * columns).map(|_| Tally::default()).collect();
    for &(y, r) in &lines {
        if r >= rows {
            continue;
        }
        let row = matrix.row(y);
        for c in 0..columns {
            if let Some((table, v)) = lookup_pattern(pattern_at(row, START_WIDTH + 17 * (c + 1))) {
                if table == r % 3 {
                    cells[r * columns + c].add(v);
                }
            }
        }
    }

    let mut unreadable = 0;
    let mut codewords = vec![Codeword(0); rows * columns];
    for (cw, tally) in codewords.iter_mut().zip(&cells) {
        match tally.winner() {
            Some(Ok(v)) => *cw = Codeword(v),
            // A tied cell is as good as unread; error correction decides.
            _ => unreadable += 1,
        }
    }
    Ok(ReadSymbol { rows, columns, ec_level, codewords, unreadable })
}

/// Decodes a module matrix produced by [`super::encode`] or an equivalent
/// encoder, correcting codeword errors.
pub fn decode_matrix(matrix: &BitGrid) -> Result<Vec<u8>, Pdf417Error> {
    let read = read_codewords(matrix)?;
    let k = read.ec_level.ec_count();
    let (corrected, _) = rs_correct(&read.codewords, k)?;
    let data_len = corrected.len() - k;
    if corrected[0].value() as usize != data_len {
        return Err(Pdf417Error::GeometryMismatch("length descriptor disagrees with symbol size"));
    }
    decompact(&corrected[1..data_len])
}
