pub mod error;
pub mod exec;
pub mod fixtures;
pub mod hinf;
pub mod linalg;
pub mod lti;
pub mod quadsim;
pub mod sysid;
pub mod uncertainty;

pub use error::{Error, Result};
pub use exec::Execution;
