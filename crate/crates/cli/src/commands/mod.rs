pub mod convert;
pub mod data;
pub mod eval;
pub mod model;
pub mod treeops;
