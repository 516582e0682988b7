use clap::Parser;
use jmgt_cli::commands::{dispatch, Cli};
use jmgt_cli::error::EXIT_CONFIG;

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("JMGT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("JMGT_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("JMGT_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = init_threads() {
        eprintln!("config error: {e}");
        std::process::exit(EXIT_CONFIG);
    }
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
