//! Scene configuration, procedural chess and poker layouts, rendering,
//! legends, question generation and diagnostics.

pub mod answer;
pub mod chess;
pub mod config;
pub mod diagnostics;
pub mod legend;
pub mod parse;
pub mod poker;
pub mod qa;
pub mod render;
pub mod scene;
pub mod seed;
