//! Configuration files, the check → construct → verify pipeline, JSON
//! reports and CSV tabulation on top of `globvar-core`.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod tabulate;

pub use config::{ConfigError, Numerics, Problem, ProblemConfig};
pub use pipeline::{run, Command, Method, Outcome, RunOptions};
pub use report::Report;

/// Command-line overrides of the `[numerics]` section.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tol_symbolic: Option<f64>,
    pub tol_quadrature: Option<f64>,
    pub tol_cohomology: Option<f64>,
    pub tol_obstruction: Option<f64>,
    pub tol_global: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, n: &mut Numerics) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut n.tol_symbolic, self.tol_symbolic);
        set(&mut n.tol_quadrature, self.tol_quadrature);
        set(&mut n.tol_cohomology, self.tol_cohomology);
        set(&mut n.tol_obstruction, self.tol_obstruction);
        set(&mut n.tol_global, self.tol_global);
        if let Some(s) = self.samples {
            n.samples = s;
        }
        if let Some(s) = self.seed {
            n.seed = s;
        }
    }
}
