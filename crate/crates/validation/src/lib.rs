//! Holds the `acceptance` test target; run it with
//! `cargo test -p spam-validation --test acceptance [-- <criterion>...]`.
