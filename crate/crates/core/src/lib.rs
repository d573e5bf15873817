pub mod dataset;
pub mod detmetrics;
pub mod explore;
pub mod geomesh;
pub mod gtrender;
pub mod mask;
pub mod pipeline;
pub mod procedural;
pub mod scenegen;
pub mod seeding;
pub mod sensor;
