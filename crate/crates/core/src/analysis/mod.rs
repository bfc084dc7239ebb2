//! Evaluation: latency lab, latency report, trajectory metrics and plots.

mod latency;
mod metrics;
mod plot;
mod report;

pub use latency::{
    latency_experiment, latency_records, LatencyChannel, LatencyError, LatencyLabConfig,
    LatencyRecord, LatencyStats, CROSSING_BAND, RESPONSE_TIMEOUT,
};
pub use metrics::{
    compare_trajectories, cross_track, final_lap, first_follow_window, first_gesture, fit_circle,
    fit_final_lap, gaps, settle_time, trajectory_metrics, unwrap_headings, Circle, Comparison,
    MetricDeltas, MetricsError, Track, TrajectoryMetrics,
};
pub use plot::{write_plot_csvs, PlotError};
pub use report::{parse_stats_csv, table1_report, ReportError, Table1Report};
