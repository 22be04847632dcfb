// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Compiles and runs the code listings of the book as doc tests, one module
//! per chapter so that a failure names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/methods.md")]
pub mod methods {}
#[doc = include_str!("../../../book/src/patches.md")]
pub mod patches {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/predicates.md")]
pub mod predicates {}
#[doc = include_str!("../../../book/src/triples.md")]
pub mod triples {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
