//! Command-line tool and HTTP service over the `picdna-core` pipeline.
//!
//! The service keeps one pool in memory. Thumbnails are extracted once per
//! process and each image has its own decode cache, so a request for a
//! deeper level only sequences the layers not yet recovered.

pub mod cli;
pub mod error;
pub mod http;
pub mod session;

pub use error::GatewayError;
pub use session::Session;
