//! Benchmark data: synthetic generators, a DC circuit solver, and a
//! transportation-network loader, plus the task constructions layered on
//! top of regression datasets.

mod circuits;
mod ld_cycles;
mod rw_comp;
mod sample;
mod store;
mod tasks;
mod tntp;
mod tri_flow;

pub use circuits::{
    gen_circuits, kcl_residual, solve_dc, solve_dc_enumerate, Circuit, ComponentKind, DcSolution,
};
pub use ld_cycles::{gen_ld_cycles, longest_directed_cycles};
pub use rw_comp::gen_rw_comp;
pub use sample::{edge_split, graph_split, Dataset, LabeledGraphSample, SplitSpec, TaskKind};
pub use store::{load_dataset, save_dataset};
pub use tasks::{apply_task, make_task, Task};
pub use tntp::{load_tntp, load_tntp_files, write_anaheim_shaped_fixture, TntpSample};
pub use tri_flow::gen_tri_flow;
