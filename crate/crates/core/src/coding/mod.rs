//! Constellations and the transmission schemes built on them.

mod constellation;
mod lpc;
mod pcsc;
mod pctw;
mod scheme;

pub use constellation::{ml_detect, qam16, qam16_map, qpsk, qpsk_map, Constellation};
pub use lpc::{coherent_superpose, lpc_alphabet, lpc_encode, lut_decode, LPC_RATIO};
pub use pcsc::{pcsc_decode, pcsc_encode};
pub use pctw::pctw_encode;
pub use scheme::{CodingScheme, LpcPcts, Pcsc, Pctw16Qam, Pdm4Qam, PolSymbols, SchemeKind};
