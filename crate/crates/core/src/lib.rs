// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Static and behavioral verification of bytecode patches.
//!
//! * [`bytecode`]: methods, their text format and an interpreter.
//! * [`patch`]: the update language and patch application with jump
//!   retargeting.
//! * [`verifier`]: type verification, incremental re-verification of patched
//!   methods and comparison with a reference version.
//! * [`predicate`]: formulas, weakest preconditions, strongest
//!   postconditions and bounded validity checking.
//! * [`triple`]: carrying a pre/post specification through an insertion
//!   patch, proof obligations and SMT-LIB export.
//! * [`cli`]: the `patchverify` command line.

pub mod bytecode;
pub mod cli;
pub mod patch;
pub mod predicate;
pub mod triple;
pub mod verifier;
