fn main() {
    std::process::exit(sdc_adjoint::cli::main());
}
