use clap::Parser;

fn main() {
    let cli = introbust_cli::Cli::parse();
    let code = match introbust_cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}
