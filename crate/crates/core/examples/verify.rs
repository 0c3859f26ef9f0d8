//! Configuration parsing and the verification suite written to a directory.

use spmb::cli::{parse_config_str, run_verify};

fn main() -> spmb::Result<()> {
    let dir = std::env::temp_dir().join("spmb-example-verify");
    let text = format!(
        r#"{{"p": 3, "potential": {{"variant": "shifted", "a": 1, "m": 2}}, "out_dir": {:?}}}"#,
        dir.display().to_string()
    );
    let config = parse_config_str(&text)?;
    println!("{}", config.header());
    let outcome = run_verify(&config)?;
    for check in outcome.summary["report"].as_array().into_iter().flatten() {
        let status = if check["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
        println!("{status} {}", check["name"].as_str().unwrap_or("?"));
    }
    println!("report: {}", outcome.files[0].display());
    Ok(())
}
