fn main() {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let level = match doi_edwards::cli::verbosity(args.clone()) {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    std::process::exit(doi_edwards::cli::run(args));
}
