//! Resource allocation for short-packet links: weighted sum rate, power
//! minimization and relay energy efficiency, each solved by
//! majorization-minimization and checked against exhaustive grid searches.

mod allocate;
mod oracle;
mod result;
mod scenario;

pub use allocate::{
    ee_problem, power_min_problem, round_packet_sizes, solve, solve_ee_max, solve_power_min, solve_wsr, wsr_problem, BLER_MARGIN,
    MAX_RATE_FOR_EE, MIN_PACKET_BITS,
};
pub use oracle::{oracle, oracle_ee_max, oracle_power_min, oracle_wsr, MIN_GRID_STEPS};
pub use result::{write_results_csv, AllocationResult, LinkAllocation};
pub use scenario::{channel_gain, path_loss_db, LinkSpec, ProblemKind, Scenario, Thresholds};
