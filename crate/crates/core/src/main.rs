fn main() -> std::process::ExitCode {
    eemd_denoise::cli::main()
}
