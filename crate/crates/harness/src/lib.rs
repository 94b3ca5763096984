// SPDX-License-Identifier: Apache-2.0

//! Workloads, reference evaluators and the benchmark runner behind the
//! `docjoin` command.

pub mod bench;
pub mod cdr;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod finbench;
pub mod graphs;
pub mod investigation;
pub mod oracle;
