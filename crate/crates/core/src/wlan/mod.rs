//! 802.11a-shaped frames with a scheduled-BCF PSDU, the legitimate receiver
//! and both eavesdropper pipelines.

pub mod frame;
pub mod preamble;
pub mod receiver;

pub use frame::{build_frame, map_symbol, ModemBank, WdsFrame, WlanConfig};
pub use receiver::{
    ber, bit_errors, eve_scenario1_receive, eve_scenario2_receive, legit_receive, read_iq,
    receive_psdu, synchronize, write_iq, FixedClassifier, ModelClassifier, OracleClassifier,
    RandomClassifier, ReceiverOptions, SymbolClassifier, SymbolDetector, SyncResult,
};
