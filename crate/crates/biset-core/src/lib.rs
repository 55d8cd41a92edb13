//! Symbolic calculus for presentations of bisets attached to branched
//! self-coverings of a sphere with marked points.
//!
//! The engine works over the free group on the peripheral loops
//! `g1..gN` of the marked points, with the loop at infinity eliminated
//! through the relation `ginf*gN*...*g1 = 1`. On top of the word
//! arithmetic sit twist automorphisms of the punctured sphere, the
//! presentation tables of coverings (wreath recursions), a decision
//! procedure for table isomorphism, and the dynamical computations
//! built from those pieces: identity verification, lifting of twists
//! through a covering, membership closure, and orbit exploration.

pub mod biset;
pub mod dynamics;
pub mod iso;
pub mod mcg;
pub mod word;
