pub mod auction;
pub mod cli;
pub mod domain;
pub mod hungarian;
pub mod money;
pub mod oracle;
pub mod pricing;
pub mod scenario;
pub mod simulator;
pub mod trip_matching;
pub mod verify;
