#![allow(dead_code)]

pub mod gradient_suite;
pub mod oracles;
pub mod stop_gradient;
