use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = structret_cli::main_with_args(&args, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code)
}
