pub mod fit;
pub mod generate;
pub mod perturb;
pub mod solve;
