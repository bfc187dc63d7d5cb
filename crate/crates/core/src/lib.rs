//! Alternating parity Krivine automata (APKA) and higher-order modal fixpoint
//! logic (HFL) over infinite binary trees given as finite regular structures.
//!
//! Module map:
//! - [`syntax`]: types, formulas, parser, printer, typing.
//! - [`apka`]: automata, their file format, validation, complementation.
//! - [`trees`]: regular trees, lazy trees, prefixes, the dyadic metric.
//! - [`machine`]: the acceptance game, environment arena, run monitors.
//! - [`denot`]: denotational semantics and nested fixpoint solving.
//! - [`translate`]: HFL to APKA and back.
//! - [`hierarchy`]: game-tree encoding, hard automata, Banach iteration.
//! - [`random`]: seeded generators for automata, trees and formulas.

pub mod apka;
pub mod caps;
pub mod denot;
pub mod hierarchy;
pub mod machine;
pub mod random;
pub mod syntax;
pub mod translate;
pub mod trees;

pub use apka::{Apka, ClassDescriptor, StateDecl};
pub use caps::Caps;
pub use syntax::{Dialect, Formula, SimpleType};
pub use trees::{LazyTree, PrefixTree, RegularTree};
