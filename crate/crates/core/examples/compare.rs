// Runs the `compare` command in-process and reports the flagged rows.

use complete_records::cli::{execute, CliError, Rendered, RunManifest};

pub fn run_example() -> Result<Rendered, CliError> {
    let mut manifest = RunManifest::from_args([
        "complete-records",
        "compare",
        "--d",
        "3",
        "--reps",
        "20000",
        "--seed",
        "7",
    ])
    .expect("valid arguments");
    manifest.output_path = None;
    execute(&manifest)
}

#[allow(dead_code)]
fn main() {
    match run_example() {
        Ok(out) => {
            print!("{}", out.text);
            println!("flagged rows: {}", out.flagged);
        }
        Err(e) => eprintln!("{}", e.to_json()),
    }
}
