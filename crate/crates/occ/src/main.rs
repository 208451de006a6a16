use std::io::{self, Write};
use std::process::ExitCode;

use sparse_occ::cli;
use sparse_occ::mem::CountingAlloc;

#[global_allocator]
static ALLOC: CountingAlloc = CountingAlloc;

fn main() -> ExitCode {
    let mut out = io::stdout();
    let mut err = io::stderr();
    match cli::run(std::env::args_os().collect(), &mut out, &mut err) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = write!(err, "{clap_err}");
                return if clap_err.use_stderr() {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                };
            }
            let _ = writeln!(err, "error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
