//! The `brickjam` command line, the share server and play sessions.

pub mod commands;
pub mod error;
pub mod play;
pub mod server;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::commands::{execute, Cli};
use crate::error::{CliError, EXIT_FAILURE};

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().skip(1).any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            if json {
                let err = CliError::usage(e.render().to_string().trim_end());
                report_error(&err, true);
                return err.exit_code();
            }
            let _ = e.print();
            return e.exit_code();
        }
    };
    let json = cli.json;
    match execute(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if json {
                if !out.json.is_null() {
                    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&out.json).expect("json"));
                }
            } else if !out.text.is_empty() {
                let text = out.text.trim_end_matches('\n');
                let _ = writeln!(stdout, "{text}");
            }
            if out.failed {
                EXIT_FAILURE
            } else {
                0
            }
        }
        Err(err) => {
            report_error(&err, json);
            err.exit_code()
        }
    }
}

fn report_error(err: &CliError, json: bool) {
    let mut stderr = std::io::stderr().lock();
    if json {
        let _ = writeln!(stderr, "{}", serde_json::to_string(err).expect("errors serialize"));
    } else {
        let _ = writeln!(stderr, "error: {err}");
    }
}
