//! Sharp-threshold analysis of binary linear codes under block-MAP decoding
//! on the binary erasure and binary symmetric channels.

pub mod bounds;
pub mod channel;
pub mod codes;
pub mod error;
pub mod exit_blowup;
pub mod gf2;
pub mod mc;
pub mod pattern_sets;
pub mod poly;
pub mod special;
pub mod verify;

pub use channel::Channel;
pub use codes::{CodeSpec, LinearCode, WeightSpectrum};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVector, Echelon, Pattern};
pub use poly::CountPoly;
