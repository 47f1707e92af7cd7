pub mod actions;
pub mod coloring;
pub mod delta;
pub mod dsl;
pub mod expr;
pub mod poly;
pub mod search;
pub mod semigroup;
pub mod tree;
pub mod witness;
pub mod words;
