pub mod error;
pub mod ggiw;
pub mod rfs;
pub mod assignment;
pub mod likelihood;
pub mod partitioning;
pub mod glmb;
pub mod lmb;
pub mod simulation;
pub mod io;
pub mod metrics;
pub mod cli;
