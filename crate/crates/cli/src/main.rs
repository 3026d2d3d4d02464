use clap::Parser;

fn main() {
    let cli = weakcoupled::Cli::parse();
    std::process::exit(weakcoupled::run(&cli));
}
