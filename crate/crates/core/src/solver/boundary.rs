use serde::{Deserialize, Serialize};

/// Ghost-node rule on one side of one axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Bc {
    /// Ghost value fixed (absorbing or frozen exterior).
    Dirichlet(f64),
    /// Ghost equals the boundary node (zero flux).
    Neumann,
    /// Wrap around.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub lo: [Bc; 3],
    pub hi: [Bc; 3],
}

impl Boundary {
    /// Frozen exterior at value `v` on every side.
    pub fn frozen(v: f64) -> Self {
        Boundary { lo: [Bc::Dirichlet(v); 3], hi: [Bc::Dirichlet(v); 3] }
    }

    /// Half-space strip along axis 0: saturated near cap, absorbing far cap at `far`,
    /// transverse axes periodic.
    pub fn strip(far: f64) -> Self {
        Boundary {
            lo: [Bc::Neumann, Bc::Periodic, Bc::Periodic],
            hi: [Bc::Dirichlet(far), Bc::Periodic, Bc::Periodic],
        }
    }
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::frozen(0.0)
    }
}
