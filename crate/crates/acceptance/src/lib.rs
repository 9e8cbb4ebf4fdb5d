// SPDX-License-Identifier: Apache-2.0

//! Holds the `acceptance` test target only. Run it with `cargo test -p pixie-acceptance`.
