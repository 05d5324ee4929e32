//! Core of the identity-document barcode synthesizer.
//!
//! Everything in this crate is pure and allocation-only: record generation
//! and parsing, the AAMVA payload format, PDF417 and Code 128 codecs, and
//! the diversity statistics. File formats, networking, imaging and the
//! command line live in the `idbsynth` crate.

#![no_std]

extern crate alloc;

pub mod aamva;
pub mod bits;
pub mod code128;
pub mod diversity;
pub mod gf929;
pub mod pdf417;
pub mod record;
pub mod seed;
