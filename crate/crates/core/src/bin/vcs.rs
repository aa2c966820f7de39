fn main() {
    std::process::exit(vessel_coords::cli::main_with(std::env::args_os()));
}
