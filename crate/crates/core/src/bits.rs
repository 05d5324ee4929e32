use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// A rectangular grid of modules, `true` meaning dark.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitGrid {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridParseError {
    #[error("grid is empty")]
    Empty,
    #[error("line {line} has width {found}, expected {expected}")]
    RaggedLine { line: usize, found: usize, expected: usize },
    #[error("unexpected character {ch:?} on line {line}")]
    BadChar { line: usize, ch: char },
}

impl BitGrid {
    pub fn new(width: usize, height: usize) -> Self {
        BitGrid { width, height, bits: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, dark: bool) {
        self.bits[y * self.width + x] = dark;
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.bits[y * self.width..(y + 1) * self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [bool] {
        &mut self.bits[y * self.width..(y + 1) * self.width]
    }

    pub fn count_dark(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Plain-text form: one line per row, `#` dark and `.` light.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for &b in self.row(y) {
                s.push(if b { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GridParseError> {
        let lines: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        let first = lines.first().ok_or(GridParseError::Empty)?;
        let width = first.chars().count();
        let mut grid = BitGrid::new(width, lines.len());
        for (y, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(GridParseError::RaggedLine { line: y + 1, found, expected: width });
            }
            for (x, ch) in line.chars().enumerate() {
                match ch {
                    '#' | '1' => grid.set(x, y, true),
                    '.' | '0' => {}
                    ch => return Err(GridParseError::BadChar { line: y + 1, ch }),
                }
            }
        }
        Ok(grid)
    }
}

impl fmt::Debug for BitGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitGrid({}x{})", self.width, self.height)
    }
}
