//! Drives the command-line front end with one of the bundled configs, the same
//! way `lnfem` does. Any subcommand works:
//!
//! `cargo run --example cli_from_config -- check-identities examples/configs/case1a.toml`

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let command = args.next().unwrap_or_else(|| "sweep".into());
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/case2b.toml")
    });
    let argv = [
        "lnfem".into(),
        command,
        "--config".into(),
        config.display().to_string(),
    ];
    std::process::exit(langevin_fem::cli::run(argv));
}
