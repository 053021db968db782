//! Progressive image storage on simulated DNA oligo pools.
//!
//! Images are split into resolution layers by a reversible wavelet codec
//! ([`codec`]), each layer is cut into CRC-protected data blocks and written
//! as homopolymer-free nucleotide strings ([`transcoder`]), and every block
//! is wrapped in a layer primer pair and an image primer pair ([`primers`],
//! [`pool`]). Layers can then be selected by simulated PCR, read through a
//! noisy sequencing channel ([`channel`]) and decoded progressively
//! ([`reconstruct`]), while [`costs`] tallies the sequencing effort.
//!
//! Oligo layout, outermost primers first:
//!
//! ```text
//! | layer left | image left | data block (192 nt) | image right | layer right |
//! |   20 nt    |   20 nt    |                     |    20 nt    |    20 nt    |
//! ```

pub mod channel;
pub mod codec;
pub mod costs;
pub mod dna;
pub mod edit;
pub mod pool;
pub mod primers;
pub mod reconstruct;
pub mod transcoder;

pub use channel::{ErrorRates, ReadSet, SamplingMode};
pub use codec::{Image, LayerContainer, LayeredStream};
pub use costs::{CostInputs, CostReport};
pub use pool::{Oligo, OligoPool};
pub use primers::{Primer, PrimerPair, PrimerRegistry};
pub use transcoder::DataBlock;
