//! Driving the batch front end in-process, as the `wknn` binary does.

fn main() {
    let dir = std::env::temp_dir().join("wknn-example");
    let out = dir.to_string_lossy().into_owned();
    let code = wknn::cli::run_with(
        ["wknn", "rate-exp", "--scenario", "diag_uniform_gauss", "--scorr", "0.9", "--reps", "20", "--out", &out],
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    println!("exit code {code}");
    for file in ["summary.csv", "ratefit.csv", "manifest.txt"] {
        println!("--- {file}");
        print!("{}", std::fs::read_to_string(dir.join(file)).unwrap_or_default());
    }
}
