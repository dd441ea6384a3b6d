pub mod autograd;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod linalg;
pub mod model;
pub mod odeint;
pub mod pruning;
pub mod simulator;
pub mod training;

pub use error::{DashError, Result};
