//! Fixed workloads for the criterion benches.

use lshoot_core::{IntegratorControls, Params};

/// One benchmarked configuration.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub name: &'static str,
    pub params: Params,
    pub delta: f64,
}

/// Shots of each type at n = 2: type 1 at lambda = 0, type 2 and a near-torus shot at lambda = -0.24.
pub fn shot_cases() -> Vec<Case> {
    let p = |l| Params::new(2, l).expect("valid parameters");
    vec![
        Case {
            name: "type1-lambda0",
            params: p(0.0),
            delta: 0.5,
        },
        Case {
            name: "type2-lambda-0.24",
            params: p(-0.24),
            delta: 0.05,
        },
        Case {
            name: "near-torus-lambda-0.24",
            params: p(-0.24),
            delta: 0.175,
        },
    ]
}

/// Default controls with a coarser step cap, as in a quick interactive run.
pub fn coarse_controls() -> IntegratorControls {
    IntegratorControls {
        max_step: 0.05,
        ..IntegratorControls::default()
    }
}
