use clap::Parser;
use valforge_cli::{init_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(&cli));
    match result {
        Ok(out) => {
            print!("{}", out.stdout);
            if let Some(note) = &out.note {
                eprintln!("{note}");
            }
            std::process::exit(if out.passed { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("valforge: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
