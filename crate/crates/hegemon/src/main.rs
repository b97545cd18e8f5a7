use std::panic;

fn main() {
    let code = panic::catch_unwind(|| hegemon::cli::dispatch(std::env::args_os()))
        .unwrap_or_else(|_| {
            eprintln!("error: internal panic");
            2
        });
    std::process::exit(code);
}
