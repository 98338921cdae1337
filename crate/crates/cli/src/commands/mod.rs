pub mod attack;
pub mod bound;
pub mod gen;
pub mod homophily;
pub mod train;
