//! Golden-section search for the minimum of a unimodal function on an interval.

use serde::{Deserialize, Serialize};

/// `1 / phi`, the fraction of the bracket kept each iteration.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenSection {
    /// Stop once the bracket is narrower than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GoldenSection {
    fn default() -> Self {
        GoldenSection {
            tolerance: 0.01,
            max_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Final bracket.
    pub lo: f64,
    pub hi: f64,
}

impl GoldenSection {
    /// Minimizes `f` over `[lo, hi]`, returning the best point evaluated.
    ///
    /// Each iteration keeps the sub-bracket around the lower of the two
    /// interior probes and reuses the surviving probe, so it costs a single
    /// new evaluation.
    pub fn minimize<F: FnMut(f64) -> f64>(&self, mut f: F, lo: f64, hi: f64) -> Minimum {
        let (mut a, mut b) = (lo.min(hi), lo.max(hi));
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = f(c);
        let mut fd = f(d);
        let mut evaluations = 2;
        let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
        let mut iterations = 0;
        while b - a >= self.tolerance && iterations < self.max_iterations {
            iterations += 1;
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = f(c);
                if fc < best.1 {
                    best = (c, fc);
                }
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = f(d);
                if fd < best.1 {
                    best = (d, fd);
                }
            }
            evaluations += 1;
        }
        Minimum {
            x: best.0,
            value: best.1,
            iterations,
            evaluations,
            lo: a,
            hi: b,
        }
    }
}
