//! Design-space tooling: power and frequency budgets, the crosstalk figure of
//! merit, architecture scoring, and the training/power sweep harnesses.

pub mod budget;
pub mod crosstalk;
pub mod scalability;
pub mod sweep;

pub use budget::{
    energy_per_spike, fsr_channel_limit, min_source_power_dbm, minimal_interlink_power, path_loss_db, pd_power_dbm,
    power_limited_tile_size, resolution_margin_db, BudgetInputs,
};
pub use crosstalk::{
    crosstalk_fom, crosstalk_fom_with, has_unique_interior_max, interior_maxima, is_unimodal, scan_fom, CrosstalkSetup,
    FomMode, FomScan,
};
pub use scalability::{scalability_score, stars, ScalabilityFlags};
pub use sweep::{
    cell_config, power_sweep_seed, run_design_grid, run_power_sweep, summarize_cells, table_rows, train_run,
    write_grid_csv, write_power_csv, CellSummary, EpochRecord, GridCell, MrmVariant, PowerPoint, PowerSweep,
    RunSummary, SeedRun, SweepGrid, TableRow,
};
