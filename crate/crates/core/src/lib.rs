//! Translation of (E)MDM schemes into relational schemas, SQL DDL,
//! constraint enforcement plans, and a runtime checker for instance data.

pub mod model;
pub mod parser;
pub mod translator;
pub mod analyzer;
pub mod sql;
pub mod planner;
pub mod checker;
