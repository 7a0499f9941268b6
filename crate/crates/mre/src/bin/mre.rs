fn main() -> std::process::ExitCode {
    mre::cli::main()
}
