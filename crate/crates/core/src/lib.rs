//! Speedup learning workbench: control rules over context-free grammars,
//! macro tables, and the domains and experiments built on them.

pub mod control_rules;
pub mod framework;
pub mod grammar;
pub mod integration;
pub mod eight_puzzle;
pub mod macro_table;
pub mod harness;
