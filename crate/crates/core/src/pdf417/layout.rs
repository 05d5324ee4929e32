use alloc::vec::Vec;

use super::tables::{cluster_pattern, START_PATTERN, START_WIDTH, STOP_PATTERN, STOP_WIDTH};
use super::{
    rs_generate, Codeword, EcLevel, Pdf417Error, Pdf417Symbol, MAX_COLUMNS, MAX_DESCRIPTOR, MAX_ROWS, MIN_ROWS,
    PAD, ROW_HEIGHT,
};
use crate::bits::BitGrid;

/// Module width of a symbol with `columns` data columns.
pub const fn symbol_width(columns: usize) -> usize {
    START_WIDTH + 17 * (columns + 2) + STOP_WIDTH
}

pub(crate) fn rows_for(total: usize, columns: usize) -> usize {
    total.div_ceil(columns).max(MIN_ROWS)
}

/// Left row indicator value.
pub(crate) fn left_indicator(row: usize, rows: usize, columns: usize, level: EcLevel) -> u16 {
    let x = match row % 3 {
        0 => (rows - 1) / 3,
        1 => level.level() as usize * 3 + (rows - 1) % 3,
        _ => columns - 1,
    };
    (30 * (row / 3) + x) as u16
}

/// Right row indicator value.
pub(crate) fn right_indicator(row: usize, rows: usize, columns: usize, level: EcLevel) -> u16 {
    let x = match row % 3 {
        0 => columns - 1,
        1 => (rows - 1) / 3,
        _ => level.level() as usize * 3 + (rows - 1) % 3,
    };
    (30 * (row / 3) + x) as u16
}

/// Column count whose symbol aspect (3 modules per row high, 17 per
/// column wide) is nearest a 1:2 height to width ratio. Ties go to fewer
/// columns.
///
/// `data_len` counts the length descriptor and data codewords before
/// padding.
pub fn auto_columns(data_len: usize, ec_level: EcLevel) -> Result<usize, Pdf417Error> {
    let k = ec_level.ec_count();
    let total = data_len + k;
    let mut best: Option<(usize, usize, usize)> = None;
    let mut smallest_rows = usize::MAX;
    for c in 1..=MAX_COLUMNS {
        let rows = rows_for(total, c);
        smallest_rows = smallest_rows.min(rows);
        if rows > MAX_ROWS || rows * c - k > MAX_DESCRIPTOR {
            continue;
        }
        // |3 rows / 17 c - 1/2| = |6 rows - 17 c| / 34 c
        let num = (6 * rows).abs_diff(17 * c);
        let den = 34 * c;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd < bn * den,
        };
        if better {
            best = Some((c, num, den));
        }
    }
    match best {
        Some((c, _, _)) => Ok(c),
        None if smallest_rows > MAX_ROWS => Err(Pdf417Error::RowLimitExceeded { rows: smallest_rows }),
        None => Err(Pdf417Error::CapacityExceeded { needed: data_len, limit: MAX_DESCRIPTOR }),
    }
}

/// Arranges codewords into rows and renders the module matrix.
///
/// `data_plus_ec` is the length descriptor, data and error correction in
/// symbol order. If the grid has empty cells, padding codewords are
/// inserted before the error correction and the descriptor and error
/// correction are recomputed.
pub fn layout(data_plus_ec: &[Codeword], columns: usize, ec_level: EcLevel) -> Result<Pdf417Symbol, Pdf417Error> {
    if columns == 0 || columns > MAX_COLUMNS {
        return Err(Pdf417Error::InvalidColumns(columns));
    }
    let k = ec_level.ec_count();
    if data_plus_ec.len() <= k {
        return Err(Pdf417Error::MalformedData("no data codewords before error correction"));
    }
    let rows = rows_for(data_plus_ec.len(), columns);
    if rows > MAX_ROWS {
        return Err(Pdf417Error::RowLimitExceeded { rows });
    }
    let data_len = rows * columns - k;
    if data_len > MAX_DESCRIPTOR {
        return Err(Pdf417Error::CapacityExceeded { needed: data_len, limit: MAX_DESCRIPTOR });
    }

    let given = &data_plus_ec[..data_plus_ec.len() - k];
    let (data, ec) = if given.len() == data_len && given[0].value() as usize == data_len {
        (given.to_vec(), data_plus_ec[given.len()..].to_vec())
    } else {
        let mut data = given.to_vec();
        data.resize(data_len, Codeword(PAD));
        data[0] = Codeword(data_len as u16);
        let ec = rs_generate(&data, ec_level);
        (data, ec)
    };

    let width = symbol_width(columns);
    let mut matrix = BitGrid::new(width, rows * ROW_HEIGHT);
    let mut cells = data.iter().chain(ec.iter());
    for r in 0..rows {
        let table = r % 3;
        let mut line: Vec<(u32, usize)> = Vec::with_capacity(columns + 4);
        line.push((START_PATTERN, START_WIDTH));
        line.push((cluster_pattern(table, left_indicator(r, rows, columns, ec_level)), 17));
        for _ in 0..columns {
            let cw = cells.next().expect("grid sized to codeword count");
            line.push((cluster_pattern(table, cw.value()), 17));
        }
        line.push((cluster_pattern(table, right_indicator(r, rows, columns, ec_level)), 17));
        line.push((STOP_PATTERN, STOP_WIDTH));

        let y0 = r * ROW_HEIGHT;
        let mut x = 0;
        for (bits, len) in line {
            for i in (0..len).rev() {
                if (bits >> i) & 1 == 1 {
                    for dy in 0..ROW_HEIGHT {
                        matrix.set(x, y0 + dy, true);
                    }
                }
                x += 1;
            }
        }
        debug_assert_eq!(x, width);
    }

    Ok(Pdf417Symbol { data_codewords: data, ec_level, ec_codewords: ec, columns, rows, matrix })
}
