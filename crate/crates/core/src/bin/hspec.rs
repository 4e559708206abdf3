use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().collect();
    let code = std::panic::catch_unwind(|| {
        let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
        let (mut out, mut err) = (stdout.lock(), stderr.lock());
        let code = hermite_hardy::cli::run(&args, &mut out, &mut err);
        let _ = out.flush();
        code
    })
    .unwrap_or_else(|_| {
        eprintln!("error: internal failure");
        hermite_hardy::cli::EXIT_FAIL
    });
    ExitCode::from(code as u8)
}
