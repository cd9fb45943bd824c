//! Stage-driven simulations of effective constructions of towers, MAD
//! families, independent families and ultrafilter bases, with windowed
//! checkers for the properties they are meant to have.

pub mod encoding;
pub mod universe;
pub mod functionals;
pub mod oracle_constructions;
pub mod trace;
pub mod madce;
pub mod treebase;
pub mod checker;
