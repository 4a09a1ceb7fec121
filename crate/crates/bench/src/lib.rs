//! Shared fixtures for the benchmarks.

use bandtrace::config::RunConfig;
use bandtrace::{BranchedDiskModel, PerturbationParams};

/// `T(n, m)` at λ = 0.1, μ = 0.
pub fn torus(n: usize, m: u32) -> RunConfig {
    let model = BranchedDiskModel::torus(n, m).expect("torus model");
    RunConfig::new(model, PerturbationParams::real(0.1, 0.0).expect("params"))
}

/// Unperturbed `h = 0` on `n` sheets, which closes up to an unknot.
pub fn unknot(n: usize) -> RunConfig {
    let model = BranchedDiskModel::new(n, Vec::new()).expect("unknot model");
    RunConfig::new(model, PerturbationParams::real(0.1, 0.0).expect("params"))
}

/// Named fixtures, smallest first.
pub fn fixtures() -> Vec<(&'static str, RunConfig)> {
    vec![
        ("unknot_3", unknot(3)),
        ("trefoil", torus(2, 3)),
        ("t_3_4", torus(3, 4)),
        ("t_3_5", torus(3, 5)),
    ]
}
