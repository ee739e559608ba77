//! Abel equation solutions for tangent-to-identity Dulac maps, exact and numeric.
//!
//! [`series`] holds the exact transseries algebra, [`parse`] the text
//! formats, [`formal`] the block-by-block Abel solver and [`numeric`] the
//! summation and verification layer.

pub mod series;
pub mod parse;
pub mod formal;
pub mod numeric;
