//! Query language: parsing, type checking, planning and execution.

pub mod ast;
pub mod exec;
pub mod explain;
pub mod format;
pub mod parser;
pub mod plan;
pub mod typeck;

pub use exec::{Cell, ExecCtx};
pub use explain::{explain, summary};
pub use parser::parse_query;
pub use plan::{Plan, PlanStats, Selectivity};
pub use typeck::{typecheck, TypedQuery};

use crate::oid::Oid;
use crate::seq::{BlastParams, ScoringScheme};
use crate::store::{Database, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("{0}")]
    Unknown(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("dangling reference {0}")]
    Dangling(Oid),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone)]
pub struct QueryOptions {
    pub blast: BlastParams,
    pub dna_scoring: ScoringScheme,
    pub protein_scoring: ScoringScheme,
    pub selectivity: Selectivity,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            blast: BlastParams::default(),
            dna_scoring: ScoringScheme::default_dna(),
            protein_scoring: ScoringScheme::default_protein(),
            selectivity: Selectivity::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Naive,
    Optimized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Planning and execution against one database state. Statistics gathered
/// for cost estimates are kept for the life of the session.
pub struct Session<'a> {
    db: &'a Database,
    opts: QueryOptions,
    stats: PlanStats<'a>,
}

impl<'a> Session<'a> {
    pub fn new(db: &'a Database, opts: QueryOptions) -> Self {
        Session { db, opts, stats: PlanStats::new(db) }
    }

    pub fn options(&self) -> &QueryOptions {
        &self.opts
    }

    pub fn plan(&self, text: &str, mode: Mode) -> Result<Plan, QueryError> {
        let typed = typecheck(&parse_query(text)?, self.db.catalog())?;
        Ok(self.plan_typed(&typed, mode))
    }

    pub fn plan_typed(&self, q: &TypedQuery, mode: Mode) -> Plan {
        match mode {
            Mode::Naive => plan::naive(q, &self.stats),
            Mode::Optimized => plan::optimize(q, self.db, &self.stats, &self.opts.selectivity),
        }
    }

    pub fn execute(&self, plan: &Plan) -> Result<QueryResult, QueryError> {
        let ctx = ExecCtx::new(self.db, &self.opts);
        let rows = exec::execute(plan, &ctx).collect::<Result<Vec<_>, _>>()?;
        Ok(QueryResult { columns: plan.columns.iter().map(|(n, _)| n.clone()).collect(), rows })
    }

    pub fn run(&self, text: &str, mode: Mode) -> Result<QueryResult, QueryError> {
        self.execute(&self.plan(text, mode)?)
    }
}
