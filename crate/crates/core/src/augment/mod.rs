//! Labeled datasets, the end-to-end augmentation run and its reports.

pub mod dataset;
pub mod pipeline;
pub mod report;
pub mod sweep;

pub use dataset::{
    merge, resample, split, CategoryCounts, LabeledDataset, LabeledSentence, Provenance,
    ResampleMode, ResampleReport,
};
pub use pipeline::{
    build_generator, fit_law, fit_record, fit_stage, generated_sentences, label_generated,
    label_sentences, run_pipeline, Backend, GeneratorConfig, LabelStats, LabelingInputs, Law,
    PipelineConfig, PipelineOutput, RunCounts, RunManifest,
};
pub use report::{
    imbalance_report, imbalance_report_from_tags, report_from_entities, ImbalanceReport,
    EXCLUSION_MAX,
};
pub use sweep::{offset_label, r0_sweep, shifted_r0, SweepReport, SweepRow, SWEEP_FORMULA};
