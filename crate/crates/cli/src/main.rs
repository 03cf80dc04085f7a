fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("DATAFLOW_LOG", "warn")).init();
    std::process::exit(dataflow_cli::run(std::env::args_os()));
}
