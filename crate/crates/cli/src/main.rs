use clap::Parser;
use esoc_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors are configuration errors, not clap's default status 2
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let _ = e.print();
        std::process::exit(if e.use_stderr() { 3 } else { 0 });
    });
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("esoc: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
