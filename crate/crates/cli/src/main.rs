fn main() {
    std::process::exit(swarm_tuner_cli::main_with(std::env::args_os()));
}
