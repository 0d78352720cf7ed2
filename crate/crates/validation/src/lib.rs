//! Home of the end-to-end acceptance suite (`cargo test -p subspec-validation --test acceptance`).
//! The crate itself exports nothing.
