//! Command line and JSON service for the vaselab workbench.

pub mod cli;
pub mod pipeline;
pub mod service;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
}
