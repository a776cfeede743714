//! Bayes-optimal joint channel-and-data estimation for massive MIMO uplinks
//! with low-resolution ADCs.
//!
//! The crate has two halves that check each other: a bilinear message-passing
//! receiver ([`gamp`]) and the large-system replica prediction of its
//! performance ([`replica`]). [`sim`] drives Monte-Carlo experiments.

pub mod denoise;
pub mod error;
pub mod gamp;
pub mod quadrature;
pub mod quantizer;
pub mod replica;
pub mod scalar_channel;
pub mod sim;
pub mod special;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// How the receiver obtains the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverMode {
    /// Joint channel-and-data estimation over pilot and data columns.
    #[default]
    Jcd,
    /// The channel is known exactly.
    PerfectCsir,
    /// Channel from pilots alone, then detection with the frozen estimate.
    PilotOnly,
}
