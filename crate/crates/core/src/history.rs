//! Per-step snapshots of the particle system and the genealogy linking them.

use alloc::vec::Vec;

use crate::sim::ParticleSystem;
use crate::{Error, Result};

/// Post-resampling cross-section at one step, stored column-wise.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepRecord {
    pub price: Vec<f64>,
    pub variance: Vec<f64>,
    pub average: Vec<f64>,
    pub weight: Vec<f64>,
    /// Index into the previous step's record (identity at step 0).
    pub parent: Vec<u32>,
}

impl StepRecord {
    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    steps: Vec<StepRecord>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    /// Appends the current cross-section of `system`.
    pub fn record(&mut self, system: &ParticleSystem) -> Result<()> {
        let expected = self.steps.len();
        if system.step() != expected {
            return Err(Error::InvalidConfig(alloc::format!(
                "history holds {expected} steps but the system is at step {}",
                system.step()
            )));
        }
        if let Some(prev) = self.steps.last() {
            if let Some(bad) = system.parents().iter().position(|&p| p as usize >= prev.len()) {
                return Err(Error::BrokenGenealogy { step: expected, index: bad });
            }
        }
        let ps = system.particles();
        self.steps.push(StepRecord {
            price: ps.iter().map(|p| p.price).collect(),
            variance: ps.iter().map(|p| p.variance).collect(),
            average: ps.iter().map(|p| p.average).collect(),
            weight: ps.iter().map(|p| p.weight).collect(),
            parent: system.parents().to_vec(),
        });
        Ok(())
    }

    /// Number of recorded steps, including step 0.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Index of the last recorded step.
    pub fn last_step(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn step(&self, t: usize) -> &StepRecord {
        &self.steps[t]
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// `ancestry[t][j]` is the index at step `t` of the ancestor of final
    /// particle `j`.
    pub fn ancestry(&self) -> Result<Vec<Vec<u32>>> {
        let Some(last) = self.steps.last() else {
            return Ok(Vec::new());
        };
        let t_max = self.steps.len() - 1;
        let mut out: Vec<Vec<u32>> = alloc::vec![Vec::new(); t_max + 1];
        out[t_max] = (0..last.len() as u32).collect();
        for t in (1..=t_max).rev() {
            let parents = &self.steps[t].parent;
            let prev_len = self.steps[t - 1].len();
            let mut up = Vec::with_capacity(out[t].len());
            for &i in &out[t] {
                let p = parents[i as usize];
                if p as usize >= prev_len {
                    return Err(Error::BrokenGenealogy { step: t, index: i as usize });
                }
                up.push(p);
            }
            out[t - 1] = up;
        }
        Ok(out)
    }
}

/// Full ancestral path of one final particle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Path {
    pub price: Vec<f64>,
    pub variance: Vec<f64>,
    pub average: Vec<f64>,
    /// Weight attached to the path at every step.
    pub weight: Vec<f64>,
}

impl Path {
    /// Weight carried at the final step.
    pub fn final_weight(&self) -> f64 {
        self.weight.last().copied().unwrap_or(0.0)
    }
}

/// One path per final particle, by walking the parent indices backwards.
pub fn reconstruct_paths(history: &History) -> Result<Vec<Path>> {
    let ancestry = history.ancestry()?;
    let Some(last) = ancestry.last() else {
        return Ok(Vec::new());
    };
    let points = ancestry.len();
    let mut paths: Vec<Path> = (0..last.len())
        .map(|_| Path {
            price: Vec::with_capacity(points),
            variance: Vec::with_capacity(points),
            average: Vec::with_capacity(points),
            weight: Vec::with_capacity(points),
        })
        .collect();
    for (t, row) in ancestry.iter().enumerate() {
        let rec = history.step(t);
        for (path, &i) in paths.iter_mut().zip(row) {
            let i = i as usize;
            path.price.push(rec.price[i]);
            path.variance.push(rec.variance[i]);
            path.average.push(rec.average[i]);
            path.weight.push(rec.weight[i]);
        }
    }
    Ok(paths)
}
