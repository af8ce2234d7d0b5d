use clap::Parser;
use ebct_cli::args::Cli;
use ebct_cli::error::EXIT_INPUT;

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(EXIT_INPUT);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("thread pool is configured once at startup");
    }
    std::process::exit(ebct_cli::run(&cli));
}
