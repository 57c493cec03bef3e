pub mod associate;
pub mod augment;
pub mod evaluate;
pub mod losscheck;
pub mod pipeline;
pub mod tune;
pub mod validate;
