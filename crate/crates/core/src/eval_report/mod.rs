//! Cross-validation and transfer evaluation, metrics, t-SNE projection and report files.

mod folds;
mod metrics;
mod report;
mod run;
mod tsne;

pub use folds::{kfold_split, Fold, FoldSplit};
pub use metrics::{macro_f1, ClassScores, ConfusionMatrix};
pub use report::{confusion_csv, emit_report, projection_svg, write_projection_svg, EvalReport, ReportPaths};
pub use run::{run_cv, run_transfer, Aggregate, CvOptions, EvalOutcome, FoldResult, Instance, LabeledUser, UserPrediction};
pub use tsne::{kl_divergence, tsne_project, Projection2D, TsneConfig};
