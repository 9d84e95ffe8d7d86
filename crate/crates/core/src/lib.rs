pub mod quadrature;
pub mod special;
pub mod relaxation;
pub mod protocol;
pub mod statistics;
pub mod oracle;

/// Library version, stamped into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
