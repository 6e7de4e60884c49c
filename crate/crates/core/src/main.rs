use std::process::ExitCode;

fn main() -> ExitCode {
    let (code, out) = posmodel::cli::run(std::env::args().skip(1));
    if code == posmodel::cli::EXIT_INPUT {
        eprint!("{out}");
    } else {
        print!("{out}");
    }
    ExitCode::from(code as u8)
}
