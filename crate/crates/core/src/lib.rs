pub mod catalog;
pub mod geom;
pub mod hidx;
pub mod oid;
pub mod query;
pub mod seq;
pub mod sidx;
pub mod store;

pub use oid::Oid;
