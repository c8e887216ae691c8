pub mod dsl;
pub mod harness;
pub mod optimize;
pub mod oracle;
pub mod raster;
pub mod retrieval;
pub mod seed;
pub mod verify;
