use clap::Parser;
use pentabend_cli::{emit, run, Cli, RunConfig};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli.command) {
        Ok(out) => {
            let path = RunConfig::from_args(cli.command.common()).ok().and_then(|c| c.out);
            match emit(&out, path.as_ref()) {
                Ok(()) => out.code,
                Err(e) => {
                    eprintln!("{e}");
                    e.code()
                }
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    };
    std::process::exit(code);
}
