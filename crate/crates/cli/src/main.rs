use std::io::Write;

fn main() {
    let (outcome, err) = coincidence_cli::run_cli(std::env::args_os());
    print!("{}", outcome.stdout);
    let _ = std::io::stdout().flush();
    if let Some(msg) = err {
        eprintln!("{}", msg.trim_end());
    }
    std::process::exit(outcome.status);
}
