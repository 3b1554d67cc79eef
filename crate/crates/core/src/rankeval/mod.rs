//! RankEval: scores evaluation metrics by how well the model ranking they
//! induce agrees with the ranking implied by the generator parameters.

mod latency;
mod ranking;
mod task;

pub use latency::{loglog_slope, measure_latency, LatencyRecord, MachineInfo, MIN_REPETITIONS};
pub use ranking::{
    expected_ranking, kendall, mean_rank_deviation, ranks_from_values, spearman, ExpectedRanking, Ranking,
};
pub use task::{
    run_task, DatasetRank, RankReport, TaskKind, TaskSpec, ACCURACY_GRID, FALSE_POSITIVE_GRID, FIXED_P_FOR_Q_TASK,
    FIXED_Q_FOR_P_TASK, SIGMA_GRID,
};
