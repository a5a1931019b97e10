use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = stgt::cli::run(stgt::cli::Cli::parse()) {
        eprintln!("stgt: {e}");
        std::process::exit(1);
    }
}
