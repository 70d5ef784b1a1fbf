//! Fixtures shared by the criterion benches in `benches/`.

use fujita_core::dynamics::{EvolutionState, Grid, InitialData};
use fujita_core::{Frame, ProblemParams, Result};

/// The reference supercritical case above the Joseph-Lundgren exponent.
pub fn reference_params() -> ProblemParams {
    ProblemParams::new(12, 5.0).expect("valid parameters")
}

/// A self-similar run started from a Gaussian bump below `κ`.
pub fn gaussian_state(points: usize) -> Result<EvolutionState> {
    let params = reference_params();
    let grid = Grid::new(20.0, points)?;
    let values = InitialData::Gaussian {
        amplitude: 0.3,
        width: 2.0,
        offset: 0.1,
    }
    .sample(&params, &grid)?;
    EvolutionState::new(params, Frame::SelfSimilar, grid, values, 0.0)
}
