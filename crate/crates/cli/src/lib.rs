//! Command-line front end: argument and config resolution, dispatch into
//! `bsl-core`, output rendering and the self-test suite.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;
