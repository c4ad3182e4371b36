pub mod algebra;
pub mod contraction;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod par;
pub mod poly;
pub mod scenario;
pub mod state;
pub mod tensor;
