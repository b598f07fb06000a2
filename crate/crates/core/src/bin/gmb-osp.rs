fn main() {
    std::process::exit(gmb_osp::cli::main_with_args(std::env::args_os()));
}
