fn main() {
    if let Err(e) = neurosim_cli::cli::init_thread_pool() {
        eprintln!("neurosim: {e}");
        std::process::exit(e.exit_code());
    }
    std::process::exit(neurosim_cli::cli::main_with_args(std::env::args_os()));
}
