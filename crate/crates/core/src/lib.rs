#![no_std]

extern crate alloc;

pub mod base;
pub mod evaluator;
pub mod graded;
pub mod linalg;
pub mod normal_form;
pub mod samples;
pub mod scalar;
mod section;
pub mod spectrum;
pub mod verify;
