//! Experiment orchestration: the test-functional panel, Monte Carlo panel
//! distances, the three-term decomposition, rate fits, reports and the
//! acceptance criteria.

pub mod criteria;
mod experiment;
mod panel;

pub use experiment::{
    rate_fit, read_points, run_experiment, theorem_curve, ExperimentConfig, RateFit, RateReport, RateShape, ReportRow,
    Verdict,
};
pub use panel::{
    estimate_panel_distance, panel_distance_from_values, panel_values, PanelDistance, TestFunctional,
    TestFunctionalPanel, Weight,
};
