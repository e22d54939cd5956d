use softsnake::cli;

fn main() {
    let outcome = cli::run(std::env::args_os());
    if outcome.code == cli::EXIT_OK {
        print!("{}", outcome.message);
        if !outcome.message.ends_with('\n') {
            println!();
        }
    } else {
        eprintln!("{}", outcome.message.trim_end());
    }
    std::process::exit(outcome.code);
}
