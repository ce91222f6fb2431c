fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(spatial_ssl::cli::main())
}
