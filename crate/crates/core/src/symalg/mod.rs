//! Exact symbolic algebra on phase space.

mod compiled;
mod expr;
mod parse;
pub mod poly;
mod registry;
pub mod text;

pub use compiled::{Compiled, Univariate};
pub use expr::{ExpandedTerm, PhasePoint, RawExpr, SymExpr, MAX_EXPONENT_DENOM};
pub use poly::{Coeff, Monomial, Poly, Rat};
pub use registry::{Base, ExpAtom, Registry, RegistryBuilder, Var};

use crate::error::Result;
use crate::prelude::*;

impl SymExpr {
    /// Parses the human-readable syntax against `reg`.
    pub fn parse(reg: &Arc<Registry>, text: &str) -> Result<SymExpr> {
        Ok(SymExpr::from_raw(reg, parse::parse_raw(reg, text)?))
    }

    pub fn to_lines(&self) -> String {
        text::to_lines(self)
    }

    pub fn from_lines(reg: &Arc<Registry>, text: &str) -> Result<SymExpr> {
        text::from_lines(reg, text, 1)
    }
}
