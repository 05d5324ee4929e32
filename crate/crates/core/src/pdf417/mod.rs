//! PDF417 encoding and decoding.
//!
//! The pipeline is the usual one: the payload is compacted into base-929
//! codewords, prefixed with a symbol length descriptor, protected by
//! Reed-Solomon codewords over GF(929) and finally laid out in rows of
//! 17-module patterns taken from the three cluster tables.
//!
//! ```
//! use idbsynth_core::pdf417::{self, Columns, EcLevel};
//!
//! let symbol = pdf417::encode(b"HELLO", EcLevel::new(2).unwrap(), Columns::Fixed(3)).unwrap();
//! assert_eq!(pdf417::decode_matrix(&symbol.matrix).unwrap(), b"HELLO");
//! ```

mod compaction;
mod decode;
mod ec;
mod layout;
pub(crate) mod tables;

use alloc::vec::Vec;
use core::fmt;

use crate::bits::BitGrid;

pub use compaction::{compact, decompact, ModePolicy};
pub use decode::{decode_matrix, read_codewords, ReadSymbol};
pub use ec::{generator_polynomial, rs_correct, rs_generate, syndromes};
pub use layout::{auto_columns, layout, symbol_width};
pub use tables::{cluster_pattern, lookup_pattern, widths as pattern_widths, START_PATTERN, STOP_PATTERN};

/// Latch to text compaction.
pub const TEXT_LATCH: u16 = 900;
/// Latch to byte compaction, length not a multiple of 6.
pub const BYTE_LATCH: u16 = 901;
/// Latch to numeric compaction.
pub const NUMERIC_LATCH: u16 = 902;
/// Single-byte shift from text compaction.
pub const BYTE_SHIFT: u16 = 913;
/// Latch to byte compaction, length a multiple of 6.
pub const BYTE_LATCH_FULL: u16 = 924;
/// Padding codeword.
pub const PAD: u16 = 900;

/// Highest number of data codewords the symbol length descriptor can
/// account for alongside the minimum error correction.
pub const MAX_DATA_CODEWORDS: usize = 925;
/// Largest value a length descriptor may hold.
pub const MAX_DESCRIPTOR: usize = 928;
pub const MIN_ROWS: usize = 3;
pub const MAX_ROWS: usize = 90;
pub const MAX_COLUMNS: usize = 30;
/// Module rows per codeword row in the rendered matrix.
pub const ROW_HEIGHT: usize = 3;

/// A PDF417 codeword, an integer in `0..=928`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword(u16);

impl Codeword {
    pub const fn new(value: u16) -> Option<Codeword> {
        if value <= 928 {
            Some(Codeword(value))
        } else {
            None
        }
    }

    pub const fn value(self) -> u16 {
        self.0
    }

    /// Builds a codeword list from raw values. Panics on values above 928.
    pub fn list(values: &[u16]) -> Vec<Codeword> {
        values.iter().map(|&v| Codeword::new(v).expect("codeword out of range")).collect()
    }

    pub fn values(list: &[Codeword]) -> Vec<u16> {
        list.iter().map(|c| c.0).collect()
    }
}

impl fmt::Debug for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u16> for Codeword {
    type Error = Pdf417Error;
    fn try_from(v: u16) -> Result<Self, Self::Error> {
        Codeword::new(v).ok_or(Pdf417Error::InvalidCodeword(v))
    }
}

/// Error-correction level, selecting `2^(level+1)` Reed-Solomon codewords.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct EcLevel(u8);

impl EcLevel {
    pub const fn new(level: u8) -> Option<EcLevel> {
        if level <= 8 {
            Some(EcLevel(level))
        } else {
            None
        }
    }

    pub const fn level(self) -> u8 {
        self.0
    }

    pub const fn ec_count(self) -> usize {
        1 << (self.0 as usize + 1)
    }

    /// The level whose codeword count is `count`, if any.
    pub fn from_ec_count(count: usize) -> Option<EcLevel> {
        (0..=8u8).map(EcLevel).find(|l| l.ec_count() == count)
    }
}

impl Default for EcLevel {
    fn default() -> Self {
        EcLevel(5)
    }
}

/// Column count selection for [`encode`].
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Columns {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Pdf417Error {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("payload needs {needed} data codewords, limit is {limit}")]
    CapacityExceeded { needed: usize, limit: usize },
    #[error("byte at offset {offset} cannot be represented in {mode:?} compaction")]
    IncompatibleMode { mode: ModePolicy, offset: usize },
    #[error("error correction level {0} outside 0..=8")]
    InvalidEcLevel(u8),
    #[error("column count {0} outside 1..=30")]
    InvalidColumns(usize),
    #[error("symbol would need {rows} rows, maximum is 90")]
    RowLimitExceeded { rows: usize },
    #[error("codeword value {0} outside 0..=928")]
    InvalidCodeword(u16),
    #[error("no cluster pattern matches the modules at row {row}, column {column}")]
    UnknownPattern { row: usize, column: usize },
    #[error("symbol geometry inconsistent: {0}")]
    GeometryMismatch(&'static str),
    #[error("too many codeword errors to correct")]
    UncorrectableSymbol,
    #[error("malformed codeword stream: {0}")]
    MalformedData(&'static str),
}

/// An encoded PDF417 symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pdf417Symbol {
    /// Length descriptor, data and padding codewords.
    pub data_codewords: Vec<Codeword>,
    pub ec_level: EcLevel,
    pub ec_codewords: Vec<Codeword>,
    pub columns: usize,
    pub rows: usize,
    /// Module grid, `ROW_HEIGHT` module rows per codeword row.
    pub matrix: BitGrid,
}

impl Pdf417Symbol {
    /// All codewords in symbol order.
    pub fn codewords(&self) -> Vec<Codeword> {
        let mut all = self.data_codewords.clone();
        all.extend_from_slice(&self.ec_codewords);
        all
    }
}

/// Compacts, protects and lays out `payload` as a PDF417 symbol.
pub fn encode(payload: &[u8], ec_level: EcLevel, columns: Columns) -> Result<Pdf417Symbol, Pdf417Error> {
    encode_with(payload, ModePolicy::Auto, ec_level, columns)
}

pub fn encode_with(
    payload: &[u8],
    policy: ModePolicy,
    ec_level: EcLevel,
    columns: Columns,
) -> Result<Pdf417Symbol, Pdf417Error> {
    let compacted = compact(payload, policy)?;
    let k = ec_level.ec_count();
    let unpadded = compacted.len() + 1;
    let columns = match columns {
        Columns::Auto => auto_columns(unpadded, ec_level)?,
        Columns::Fixed(c) => {
            if c == 0 || c > MAX_COLUMNS {
                return Err(Pdf417Error::InvalidColumns(c));
            }
            c
        }
    };
    let rows = layout::rows_for(unpadded + k, columns);
    if rows > MAX_ROWS {
        return Err(Pdf417Error::RowLimitExceeded { rows });
    }
    let padded = rows * columns - k;
    if padded > MAX_DESCRIPTOR {
        return Err(Pdf417Error::CapacityExceeded { needed: padded, limit: MAX_DESCRIPTOR });
    }

    let mut data = Vec::with_capacity(padded + k);
    data.push(Codeword(padded as u16));
    data.extend_from_slice(&compacted);
    data.resize(padded, Codeword(PAD));
    let ec = rs_generate(&data, ec_level);
    data.extend_from_slice(&ec);
    layout(&data, columns, ec_level)
}
