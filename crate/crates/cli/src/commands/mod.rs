mod corpus;
mod cxn;
mod graph;
mod review;

use crate::config::Config;
use crate::output::{Format, Report};
use crate::Command;

pub fn run(command: Command, config: &Config, format: Format, report: &mut Report) -> anyhow::Result<()> {
    match command {
        Command::Validate(a) => cxn::validate(a, format, report),
        Command::Normalize(a) => cxn::normalize(a, format, report),
        Command::Match(a) => cxn::run_match(a, config, format, report),
        Command::EmitQueries(a) => cxn::emit(a, format, report),
        Command::Graph(g) => graph::run(g, format, report),
        Command::Propagate(a) => corpus::propagate(a, format, report),
        Command::Annotate(a) => corpus::annotate(a, config, format, report),
        Command::Split(a) => corpus::split(a, config, format, report),
        Command::Review(r) => review::run(r, config, format, report),
    }
}
