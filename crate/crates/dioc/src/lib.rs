//! Dynamically-updatable choreographies.
//!
//! A choreography (DIOC) describes a distributed protocol from a global
//! viewpoint. This crate parses choreographies, checks that they are
//! connected, projects them to one endpoint process (DPOC) per role, runs
//! both levels as labelled transition systems with run-time scope updates,
//! and checks by bounded exploration that the two levels agree.

pub mod ast;
pub mod cli;
pub mod connectedness;
pub mod dioc_sem;
pub mod dpoc_sem;
pub mod events;
pub mod gen;
pub mod parser;
pub mod projection;
mod term;
pub mod verify;
