//! Structural conditions: Maltsev and pointed cube polynomials, translation
//! digraphs, spreads, and the combined condition profile.

pub mod cube;
pub mod digraph;
pub mod maltsev;
pub mod profile;
pub mod spread;
