//! Fixtures shared by the benchmarks.

use lagcons::setup::{make_initial_layer, Problem};
use lagcons::{EosMode, Geometry, GridLayer, SchemeParams};

/// Smooth pulse on `cells` cells with the matching parameter template.
pub fn pulse(g: Geometry, cells: usize, mode: EosMode) -> (GridLayer, SchemeParams) {
    let problem = Problem::by_name("smooth_pulse")
        .expect("library problem")
        .with_cells(cells);
    let (profile, params) = problem.build(g);
    (
        make_initial_layer(&profile, g).expect("valid profile"),
        params.with_eos_mode(mode),
    )
}
