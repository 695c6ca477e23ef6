use clap::Parser;
use nsebd::cli::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.run() {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("nsebd: {e}");
            std::process::exit(2);
        }
    }
}
