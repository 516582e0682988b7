//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use jmgt_core::sim::{dt_max, make_initial, InitialFamily, InitialSpec};
use jmgt_core::{Grid, ModelParams, Result, Simulator, SpectralState};

/// Nonlinear simulator on an `n³` box of side `2π` with random-band data.
pub fn simulator_fixture(n: usize) -> Result<(Simulator, SpectralState)> {
    let g = Grid::new(3, n, 2.0 * PI)?;
    let params = ModelParams::new(0.5, 1.0)?.with_nonlinearity(5.0)?;
    let sim = Simulator::new(g, params, dt_max(&g, &params))?;
    let spec = InitialSpec {
        family: InitialFamily::RandomBand { m_lo: 1.0, m_hi: 3.0 },
        amplitude: 0.1,
        seed: 7,
    };
    let s0 = make_initial(&spec, &sim.sg)?.to_spectral(&sim.sg);
    Ok((sim, s0))
}
