// SPDX-License-Identifier: Apache-2.0
use std::io;

fn main() {
    let code = hlsgen::driver::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
