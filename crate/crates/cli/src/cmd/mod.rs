pub mod analyze;
pub mod evaluate;
pub mod generate;
pub mod preprocess;
pub mod synth;
pub mod train;

use duet_core::par::Execution;

use crate::config::RunConfig;

/// Resolved configuration and execution mode shared by every subcommand.
pub struct Ctx {
    pub cfg: RunConfig,
    pub exec: Execution,
}

pub fn parse_yes_no(flag: &str, v: &str) -> crate::failure::CmdResult<bool> {
    match v {
        "yes" | "true" | "1" => Ok(true),
        "no" | "false" | "0" => Ok(false),
        _ => Err(crate::failure::usage(format!("{flag}: expected yes or no, got {v:?}"))),
    }
}
