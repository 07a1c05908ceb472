//! Drive the batch commands from a `key=value` config, the same path the
//! `memflow` binary takes, and show that the manifest reproduces the run.

use memflow::cli::run;
use memflow::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("memflow-run-config-example");
    let text = format!(
        "command = factorize\nn = 323\np_width = 5\nq_width = 5\nseed = 3\nout_dir = {}\n",
        dir.display()
    );
    let cfg = RunConfig::parse(&text)?;
    let out = run(&cfg);
    print!("exit {} stdout: {}", out.code, out.stdout);

    let manifest = std::fs::read_to_string(dir.join("manifest.txt"))?;
    println!("--- manifest ---\n{manifest}");
    let first = std::fs::read(dir.join("trajectory.csv"))?;
    run(&RunConfig::parse(&manifest)?);
    assert_eq!(std::fs::read(dir.join("trajectory.csv"))?, first);
    println!("re-run from manifest: identical trajectory.csv");
    Ok(())
}
