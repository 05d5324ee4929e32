//! Arithmetic in the prime field GF(929).
//!
//! PDF417 error correction works over the integers modulo 929 with 3 as the
//! primitive element. Every nonzero element is a power of 3, so
//! multiplication and inversion go through log/antilog tables built at
//! compile time.

use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// Field order.
pub const MODULUS: u16 = 929;

/// Primitive element used to build the generator polynomials.
pub const GENERATOR: u16 = 3;

const ORDER: usize = MODULUS as usize - 1;

const fn build_tables() -> ([u16; ORDER], [u16; MODULUS as usize]) {
    let mut exp = [0u16; ORDER];
    let mut log = [0u16; MODULUS as usize];
    let mut x: u32 = 1;
    let mut i = 0;
    while i < ORDER {
        exp[i] = x as u16;
        log[x as usize] = i as u16;
        x = (x * GENERATOR as u32) % MODULUS as u32;
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u16; ORDER], [u16; MODULUS as usize]) = build_tables();
static EXP: [u16; ORDER] = TABLES.0;
static LOG: [u16; MODULUS as usize] = TABLES.1;

/// An element of GF(929).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Gf(u16);

impl Gf {
    pub const ZERO: Gf = Gf(0);
    pub const ONE: Gf = Gf(1);

    /// Reduces `v` modulo 929.
    pub const fn new(v: u32) -> Gf {
        Gf((v % MODULUS as u32) as u16)
    }

    pub const fn value(self) -> u16 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `3^e`, with the exponent taken modulo 928.
    pub fn exp(e: usize) -> Gf {
        Gf(EXP[e % ORDER])
    }

    /// Discrete logarithm base 3. Panics on zero.
    pub fn log(self) -> usize {
        assert!(self.0 != 0, "log of zero in GF(929)");
        LOG[self.0 as usize] as usize
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(self) -> Gf {
        let l = self.log();
        Gf(EXP[(ORDER - l) % ORDER])
    }

    pub fn pow(self, e: usize) -> Gf {
        if self.0 == 0 {
            return if e == 0 { Gf::ONE } else { Gf::ZERO };
        }
        Gf(EXP[(self.log() * (e % ORDER)) % ORDER])
    }
}

impl fmt::Debug for Gf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Gf {
    type Output = Gf;
    fn add(self, rhs: Gf) -> Gf {
        Gf::new(self.0 as u32 + rhs.0 as u32)
    }
}

impl Sub for Gf {
    type Output = Gf;
    fn sub(self, rhs: Gf) -> Gf {
        Gf::new(self.0 as u32 + MODULUS as u32 - rhs.0 as u32)
    }
}

impl Neg for Gf {
    type Output = Gf;
    fn neg(self) -> Gf {
        Gf::new(MODULUS as u32 - self.0 as u32)
    }
}

impl Mul for Gf {
    type Output = Gf;
    fn mul(self, rhs: Gf) -> Gf {
        if self.0 == 0 || rhs.0 == 0 {
            return Gf::ZERO;
        }
        Gf(EXP[(LOG[self.0 as usize] as usize + LOG[rhs.0 as usize] as usize) % ORDER])
    }
}

impl Div for Gf {
    type Output = Gf;
    fn div(self, rhs: Gf) -> Gf {
        self * rhs.inv()
    }
}

/// Evaluates a polynomial given highest-degree coefficient first.
pub fn eval_desc(coeffs: &[Gf], x: Gf) -> Gf {
    coeffs.iter().fold(Gf::ZERO, |acc, &c| acc * x + c)
}

/// Evaluates a polynomial given lowest-degree coefficient first.
pub fn eval_asc(coeffs: &[Gf], x: Gf) -> Gf {
    coeffs.iter().rev().fold(Gf::ZERO, |acc, &c| acc * x + c)
}
