//! Tables, schemas, CSV ingestion and functional-dependency hierarchies.

mod ingest;
mod hierarchy;
mod table;

pub use ingest::{load_csv, read_csv, RoleHints};
pub use hierarchy::{Fd, Hierarchy, TranslationMap};
pub use table::{Attribute, Database, Role, Schema, Table};
