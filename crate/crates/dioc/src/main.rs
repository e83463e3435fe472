use std::io;
use std::process;
use std::thread;

const STACK_SIZE: usize = 256 * 1024 * 1024;

fn main() {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let worker = thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(move || {
            let stdout = io::stdout();
            let stderr = io::stderr();
            dioc::cli::run_cli(args, &mut stdout.lock(), &mut stderr.lock())
        })
        .expect("failed to spawn worker thread");
    let code = worker.join().unwrap_or(101);
    process::exit(code);
}
