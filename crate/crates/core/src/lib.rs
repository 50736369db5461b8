//! Non-cooperative coalition structure formation.
//!
//! Players simultaneously pick a coalition structure together with a strategy
//! label valid in it; a mechanism resolves the picks into one final structure
//! and final labels. The crate enumerates structures with bounded coalition
//! size, builds the induced normal-form game, solves it and compares
//! equilibrium payoffs across the nested family of games Γ(1), ..., Γ(N).

pub mod equilibrium;
pub mod error;
pub mod game;
pub mod io;
pub mod mechanism;
pub mod num;
pub mod partitions;
pub mod stability;

pub use error::{Error, Result};
pub use game::{build_game, build_game_with, induced_normal_form, BuildOptions, Choice, Game, GameSpec, InducedGame};
pub use mechanism::{Mechanism, MechanismSpec, Outcome};
pub use num::{Rational, Scalar};
pub use partitions::{CoalitionStructure, YoungDiagram};
