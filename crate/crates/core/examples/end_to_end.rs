//! Generate experiments from a config, assemble both recipes and evaluate a
//! ground-truth "detector" on the result.

use synthscene::detmetrics::{detections_from_ground_truth, threshold_report, IouType};
use synthscene::pipeline::{cmd_stats, Pipeline, PipelineConfig};

const CONFIG: &str = r#"
version = 1
seed = 42
experiments = 4
duration = 4.0
fps = 10.0
output = "run"

[environment]
box_room = [6.0, 4.0, 2.6]

[camera]
width = 160
height = 120

[scene]
humans = [2, 3]
objects = [0, 1]

[[recipe]]
name = "s"
include_flying_objects = false
exposure = { mode = "fixed", value = 0.02 }
correct_annotations = false
train_fraction = 0.8

[[recipe]]
name = "a"
include_flying_objects = true
exposure = { mode = "uniform", range = [0.0, 0.1] }
correct_annotations = true
train_fraction = 0.8
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = std::env::temp_dir().join("synthscene-e2e");
    let config = PipelineConfig::from_toml(CONFIG, "inline")?;
    let pipeline = Pipeline::new(config, base, "inline")?;
    let report = pipeline.generate()?;
    println!("generated {:?}, up to date {:?}", report.generated, report.skipped);
    for recipe in ["s", "a"] {
        let (assembly, dir) = pipeline.assemble(recipe, None)?;
        println!("recipe {recipe}: {:?} skipped", assembly.log.experiments_skipped);
        for (name, stats) in cmd_stats(&dir)? {
            println!("[{name}] {} images, {} annotations", stats.images, stats.annotations);
        }
        let perfect = detections_from_ground_truth(&assembly.val);
        print!("{}", threshold_report(&assembly.val, &perfect, &[IouType::Bbox, IouType::Mask], &[0.7])?);
    }
    Ok(())
}
