//! Region figures for given (theta, g), as `nucmv run figures` writes them.
use nucmv::cli::{run, ExperimentConfig, FigureParams, Task};

fn main() -> nucmv::Result<()> {
    let config = ExperimentConfig {
        figure: FigureParams { theta: 0.8, g: 0.3 },
        out: std::env::temp_dir().join("nucmv-figures"),
        ..ExperimentConfig::default()
    };
    for f in run(Task::Figures, &config)?.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
