use clap::error::ErrorKind;
use clap::Parser;

use painleve_calogero::cli::{run, Args, EXIT_CONFIG};

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            std::process::exit(code);
        }
    };
    if let Ok(s) = std::env::var("PCL_THREADS") {
        match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("pcl: PCL_THREADS must be a positive integer, got {s:?}");
                std::process::exit(EXIT_CONFIG);
            }
        }
    }
    std::process::exit(run(&args));
}
