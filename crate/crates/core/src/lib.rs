//! Simulation laboratory for affine frequency division multiplexing (AFDM)
//! over doubly selective channels.

pub mod baselines;
pub mod beliefs;
pub mod channel;
pub mod daft;
pub mod detect;
pub mod error;
pub mod fec;
pub mod pep;
pub mod rng;
pub mod sim;

pub use beliefs::SymbolBeliefs;
pub use channel::{ChannelRealization, EffectiveChannel, PathSpec, PathTaps};
pub use daft::{AfdmConfig, CMatrix, DaftFrame, DaftTransform, TimeFrame};
pub use error::{Error, Result};
pub use fec::{ConvCode, Interleaver, LlrBlock, Modulation, ModulationAlphabet};
