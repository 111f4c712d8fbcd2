//! Loopback stub for the external-process bridge: copies the input tensor
//! to the output path. Useful for wiring tests and as a template for real
//! model wrappers.
//!
//! Usage: sglc-tensor-stub [--corrupt | --exit-1 | --sleep <secs>] <input> <output>

use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut mode = "copy";
    let mut sleep_secs = 0u64;
    let mut rest = &args[..];
    match rest.first().map(String::as_str) {
        Some("--corrupt") => {
            mode = "corrupt";
            rest = &rest[1..];
        }
        Some("--exit-1") => {
            mode = "exit-1";
            rest = &rest[1..];
        }
        Some("--sleep") => {
            mode = "sleep";
            sleep_secs = rest
                .get(1)
                .and_then(|s| s.parse().ok())
                .unwrap_or(60);
            rest = &rest[2..];
        }
        _ => {}
    }
    let [input, output] = rest else {
        eprintln!("usage: sglc-tensor-stub [--corrupt | --exit-1 | --sleep <secs>] <input> <output>");
        return ExitCode::from(2);
    };
    match mode {
        "copy" => {
            if let Err(e) = std::fs::copy(input, output) {
                eprintln!("copy failed: {e}");
                return ExitCode::from(1);
            }
        }
        "corrupt" => {
            // Deliberately invalid tensor bytes.
            if let Err(e) = std::fs::write(output, b"THIS IS NOT A TENSOR") {
                eprintln!("write failed: {e}");
                return ExitCode::from(1);
            }
        }
        "exit-1" => {
            eprintln!("stub failing on purpose");
            return ExitCode::from(1);
        }
        "sleep" => {
            std::thread::sleep(std::time::Duration::from_secs(sleep_secs));
            if let Err(e) = std::fs::copy(input, output) {
                eprintln!("copy failed: {e}");
                return ExitCode::from(1);
            }
        }
        _ => unreachable!(),
    }
    ExitCode::SUCCESS
}
