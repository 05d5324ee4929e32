//! Calendar dates for record fields.

use alloc::format;
use alloc::string::String;
use core::fmt;

/// A proleptic Gregorian date.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Date {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

pub const fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub const fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

fn digits(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl Date {
    pub fn new(year: i32, month: u8, day: u8) -> Option<Date> {
        ((1..=9999).contains(&year) && day >= 1 && day <= days_in_month(year, month))
            .then_some(Date { year, month, day })
    }

    /// `YYYY-MM-DD`.
    pub fn parse_iso(s: &str) -> Option<Date> {
        let b = s.as_bytes();
        if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
            return None;
        }
        Date::new(digits(&s[..4])? as i32, digits(&s[5..7])? as u8, digits(&s[8..])? as u8)
    }

    /// `MMDDCCYY`, as used in AAMVA payloads.
    pub fn parse_mmddccyy(s: &str) -> Option<Date> {
        if s.len() != 8 || !s.is_ascii() {
            return None;
        }
        Date::new(digits(&s[4..])? as i32, digits(&s[..2])? as u8, digits(&s[2..4])? as u8)
    }

    /// Lenient reading of the date spellings seen in model output: ISO,
    /// `MM/DD/YYYY`, `MM-DD-YYYY` and `YYYY/MM/DD`.
    pub fn parse_loose(s: &str) -> Option<Date> {
        if let Some(d) = Date::parse_iso(s) {
            return Some(d);
        }
        let parts: alloc::vec::Vec<&str> = s.split(['/', '-', '.']).collect();
        if parts.len() != 3 {
            return None;
        }
        let [a, b, c] = [digits(parts[0])?, digits(parts[1])?, digits(parts[2])?];
        if parts[0].len() == 4 {
            Date::new(a as i32, b as u8, c as u8)
        } else if parts[2].len() == 4 {
            Date::new(c as i32, a as u8, b as u8)
        } else {
            None
        }
    }

    pub fn iso(self) -> String {
        format!("{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }

    pub fn mmddccyy(self) -> String {
        format!("{:02}{:02}{:04}", self.month, self.day, self.year)
    }

    /// Days since 1970-01-01.
    pub fn to_days(self) -> i64 {
        // Howard Hinnant's days_from_civil.
        let y = self.year as i64 - (self.month <= 2) as i64;
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let m = self.month as i64;
        let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + self.day as i64 - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146_097 + doe - 719_468
    }

    pub fn from_days(z: i64) -> Date {
        let z = z + 719_468;
        let era = z.div_euclid(146_097);
        let doe = z - era * 146_097;
        let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let day = (doy - (153 * mp + 2) / 5 + 1) as u8;
        let month = if mp < 10 { mp + 3 } else { mp - 9 } as u8;
        let year = (yoe + era * 400 + (month <= 2) as i64) as i32;
        Date { year, month, day }
    }

    pub fn add_days(self, n: i64) -> Date {
        Date::from_days(self.to_days() + n)
    }

    /// Same month and day `n` years later; February 29 becomes March 1 in
    /// non-leap years.
    pub fn add_years(self, n: i32) -> Date {
        let year = self.year + n;
        Date::new(year, self.month, self.day).unwrap_or(Date { year, month: 3, day: 1 })
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}
