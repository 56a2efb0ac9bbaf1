fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VORTEXLAB_LOG", "warn")).init();
    std::process::exit(vortexlab::cli::dispatch(std::env::args_os()));
}
