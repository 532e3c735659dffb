//! The command-line pipeline driven in-process: synth, search, select, eval, report.

use bandsel::cli::{execute, Cli};
use clap::Parser;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("bandsel-cli-pipeline");
    let out = dir.to_str().ok_or("non-utf8 temp dir")?;
    let fast = "--epochs 40 --model linear-per-pixel --lr-w 0.1 --lr-alpha 10 --batch 4";
    let steps = [
        "synth --bands 8 --count 10 --duplicate 0:1 --noise 0.01".to_string(),
        format!("search --manifest {out}/manifest.json {fast}"),
        format!("select --search {out}/search.json --m 2,3,4"),
        format!("eval --manifest {out}/manifest.json --search {out}/search.json --ablation --m 2,3,4 --beta 0,0.5 {fast}"),
        format!("report --summary {out}/summary.json"),
    ];
    for step in &steps {
        let args = ["bandsel", "--seed", "1", "--out", out].into_iter().chain(step.split_whitespace());
        let written = execute(&Cli::try_parse_from(args)?)?;
        println!("{} -> {} file(s)", step.split_whitespace().next().unwrap(), written.len());
    }
    print!("{}", std::fs::read_to_string(dir.join("report.csv"))?);
    Ok(())
}
