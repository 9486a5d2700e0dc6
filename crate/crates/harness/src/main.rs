fn main() {
    std::process::exit(drivebench::run_command(std::env::args_os()));
}
