//! Reading case directories, bulk row files and adapter snapshots.
//!
//! A case directory looks like:
//!
//! ```text
//! case.json  flows.json  routes.json  sources.json  denominators.json
//! rows/btc_blocks.csv       (optional)
//! rows/eth_rewards.csv      (optional)
//! rows/protocol_fees.csv    (optional)
//! snapshots/*.json          (optional adapter captures, replayed on load)
//! ```

pub mod adapters;
pub mod case_files;
pub mod rows;
pub mod snapshot;

pub use case_files::{load_case, parse_file_set, read_file_set, to_file_set};
