use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::error::LangError;

/// Description-length cost of a term: `terminal` per leaf, `application`
/// per `App` node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostModel {
    pub terminal: u64,
    pub application: u64,
}

impl CostModel {
    pub fn new(terminal: u64, application: u64) -> Result<Self, LangError> {
        if terminal == 0 {
            return Err(LangError::ZeroTerminalCost);
        }
        Ok(Self {
            terminal,
            application,
        })
    }

    /// Cost of a binary term with `leaves` leaves.
    pub fn of_leaves(&self, leaves: u64) -> u64 {
        leaves * self.terminal + leaves.saturating_sub(1) * self.application
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            terminal: 100,
            application: 1,
        }
    }
}

/// Description length of `expr` under `model`.
pub fn cost(expr: &Expr, model: &CostModel) -> u64 {
    match expr {
        Expr::App(f, x) => cost(f, model) + cost(x, model) + model.application,
        _ => model.terminal,
    }
}
