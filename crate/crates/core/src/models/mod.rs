pub mod lattice;
pub mod morris;
pub mod toys;
pub mod treg;
