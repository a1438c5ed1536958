//! Exact arithmetic for deep congruences between monic polynomials and
//! between virtual Galois modules.

pub mod exact_arith;
pub mod fpoly;
pub mod partitions;
pub mod poly;
pub mod symfunc;
pub mod series;
pub mod congruence;
pub mod module_compare;
pub mod cli;
