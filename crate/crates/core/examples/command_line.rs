//! Drive the `fpk-lab` command line in-process: a metric between two
//! measure files and one named worked example.

use fpk_lab::cli::run_with;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("fpk-lab-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let mu = dir.join("mu.json");
    let sigma = dir.join("sigma.json");
    std::fs::write(&mu, r#"{ "dim": 1, "atoms": [[-1.0], [2.0]], "weights": [0.5, 0.5] }"#)?;
    std::fs::write(&sigma, r#"{ "dim": 1, "atoms": [[0.0]], "weights": [1.0] }"#)?;

    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let metric = ["fpk-lab", "metric", "--kind", "Tp", "--p", "2", mu.to_str().unwrap(), sigma.to_str().unwrap()];
    let code = run_with(metric, &mut out, &mut err);
    if code != 0 {
        return Err(format!("metric exited with {code}").into());
    }

    let out_dir = dir.join("alpha");
    let code = run_with(
        ["fpk-lab", "reproduce", "ex-6-alpha", "--alpha", "0.5", "--output-dir", out_dir.to_str().unwrap()],
        &mut out,
        &mut err,
    );
    std::fs::remove_dir_all(&dir)?;
    if code != 0 {
        return Err(format!("reproduce exited with {code}").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
