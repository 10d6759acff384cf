use std::io::{stdout, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut out = stdout().lock();
    let code = chutok_cli::execute(std::env::args_os(), &mut out);
    let _ = out.flush();
    ExitCode::from(code.clamp(0, 255) as u8)
}
