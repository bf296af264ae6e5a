#![allow(dead_code)]

pub mod patch_oracle;
pub mod stark_matrix;
