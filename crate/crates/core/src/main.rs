use std::io::Write;

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_env("SCHOLIA_LOG"))
        .with_writer(std::io::stderr)
        .init();
    let args: Vec<String> = std::env::args().collect();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    let code = scholia::cli::dispatch(&args, &mut stdout, &mut stderr);
    let _ = stdout.flush();
    std::process::exit(code);
}
