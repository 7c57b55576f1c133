//! Independent reference implementations shared by the integration tests.
//! None of them call into the library's numerics.
#![allow(dead_code)]

pub mod dense_gp;
pub mod quadrature;
pub mod w1;
