pub mod cli;
pub mod debug;
pub mod harness;
pub mod qasm;
pub mod service;
pub mod sim;
pub mod state;
