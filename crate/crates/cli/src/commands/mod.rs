pub mod bench;
pub mod eval;
pub mod gen_data;
pub mod plan;
pub mod selfcheck;
pub mod stc;
pub mod train;
