use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{config, Error, Result};
use crate::model::{assemble_hamiltonian, BlochStencil, Grid, ModelParams};
use crate::spectral::{eig_hermitian, DistributionSpec, SmoothOrder};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub k_count: usize,
    /// Dyadic refinements of the k-grid allowed before giving up on matching.
    pub max_refinements: usize,
    /// Largest tolerated distance of `F0`'s nearest-integer sum.
    pub integer_tolerance: f64,
    pub order: SmoothOrder,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            k_count: 201,
            max_refinements: 4,
            integer_tolerance: 0.05,
            order: SmoothOrder::Quintic,
        }
    }
}

/// One continuous eigenvalue curve inside the tracking band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    /// Index into the k-grid of the first sample.
    pub start: usize,
    pub values: Vec<f64>,
    pub mean_x2: f64,
    /// Localized in the lower half of the strip, next to the physical edge.
    pub bottom: bool,
    /// `F0(first) − F0(last)`.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeBands {
    pub k: Vec<f64>,
    /// Fiber eigenvalues inside the tracking band, per k.
    pub eigenvalues: Vec<Vec<f64>>,
    pub window: (f64, f64),
    pub branches: Vec<Branch>,
}

impl EdgeBands {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["k1", "branch_id", "lambda"])?;
        for b in &self.branches {
            for (i, v) in b.values.iter().enumerate() {
                w.write_record([self.k[b.start + i].to_string(), b.id.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub flow: i64,
    /// Endpoint sum before snapping.
    pub raw: f64,
    pub requested_window: (f64, f64),
    pub adjustments: Vec<String>,
    /// Largest difference between the sorted spectra at k = −π and k = π.
    pub endpoint_mismatch: f64,
    pub k_count: usize,
    pub bands: EdgeBands,
}

struct Sample {
    values: Vec<f64>,
    vectors: Mat<faer::c64>,
    x2: Vec<f64>,
}

fn sample(st: &BlochStencil, k: f64, band: (f64, f64)) -> Result<Sample> {
    let s = eig_hermitian(st.fiber(k).as_ref())?;
    let keep: Vec<usize> = (0..s.dim())
        .filter(|&n| (band.0..=band.1).contains(&s.eigenvalues[n]))
        .collect();
    let bd = s.dim();
    let vectors = Mat::from_fn(bd, keep.len(), |a, j| s.vectors[(a, keep[j])]);
    let x2 = keep
        .iter()
        .map(|&n| (0..bd).map(|a| s.vectors[(a, n)].norm_sqr() * st.layout.x2(a)).sum())
        .collect();
    Ok(Sample {
        values: keep.iter().map(|&n| s.eigenvalues[n]).collect(),
        vectors,
        x2,
    })
}

fn overlap(a: &Sample, i: usize, b: &Sample, j: usize) -> f64 {
    let mut acc = faer::c64::new(0.0, 0.0);
    for r in 0..a.vectors.nrows() {
        acc += a.vectors[(r, i)].conj() * b.vectors[(r, j)];
    }
    acc.norm()
}

/// Successor of each state at the next k, or `None` when it leaves the band.
fn link(a: &Sample, b: &Sample, max_jump: f64, k: f64) -> Result<Vec<Option<usize>>> {
    let mut out = vec![None; a.values.len()];
    let mut taken = vec![false; b.values.len()];
    for (i, &l) in a.values.iter().enumerate() {
        let mut cands: Vec<(f64, usize)> = b
            .values
            .iter()
            .enumerate()
            .map(|(j, &m)| ((m - l).abs(), j))
            .filter(|(d, _)| *d <= max_jump)
            .collect();
        cands.sort_by(|x, y| x.0.total_cmp(&y.0));
        let pick = match cands.as_slice() {
            [] => None,
            [(_, j)] => Some(*j),
            [(d1, j1), (d2, j2), ..] => {
                if *d2 > 2.0 * d1 {
                    Some(*j1)
                } else {
                    // Near-degenerate candidates: the eigenvector overlap decides.
                    let (o1, o2) = (overlap(a, i, b, *j1), overlap(a, i, b, *j2));
                    if (o1 - o2).abs() < 0.1 {
                        return Err(Error::BranchMatching {
                            k,
                            reason: format!("overlaps {o1:.3} and {o2:.3} do not separate"),
                        });
                    }
                    Some(if o1 > o2 { *j1 } else { *j2 })
                }
            }
        };
        if let Some(j) = pick {
            if taken[j] {
                return Err(Error::BranchMatching {
                    k,
                    reason: "two states continue into the same eigenvalue".into(),
                });
            }
            taken[j] = true;
        }
        out[i] = pick;
    }
    Ok(out)
}

fn trace_branches(
    samples: &[Sample],
    max_jump: f64,
    ks: &[f64],
    depth_mid: f64,
    window: (f64, f64),
) -> Result<Vec<Branch>> {
    let mut branches: Vec<Branch> = Vec::new();
    let mut x2_sums: Vec<f64> = Vec::new();
    // Branch id currently carried by each state of the previous sample.
    let mut owner: Vec<Option<usize>> = Vec::new();
    for (j, s) in samples.iter().enumerate() {
        let mut next_owner = vec![None; s.values.len()];
        if j > 0 {
            let links = link(&samples[j - 1], s, max_jump, ks[j])?;
            for (i, l) in links.iter().enumerate() {
                if let (Some(t), Some(id)) = (l, owner[i]) {
                    next_owner[*t] = Some(id);
                }
            }
        }
        for (n, o) in next_owner.iter_mut().enumerate() {
            let id = *o.get_or_insert_with(|| {
                branches.push(Branch {
                    id: branches.len(),
                    start: j,
                    values: Vec::new(),
                    mean_x2: 0.0,
                    bottom: false,
                    score: 0.0,
                });
                x2_sums.push(0.0);
                branches.len() - 1
            });
            branches[id].values.push(s.values[n]);
            x2_sums[id] += s.x2[n];
        }
        owner = next_owner;
    }
    let inside = |l: f64| (window.0..=window.1).contains(&l);
    let last = samples.len() - 1;
    for (b, s) in branches.iter_mut().zip(&x2_sums) {
        b.mean_x2 = s / b.values.len() as f64;
        b.bottom = b.mean_x2 < depth_mid;
        // A branch may only appear or vanish outside the window or at k = ±π.
        let end = b.start + b.values.len() - 1;
        if (b.start > 0 && inside(b.values[0])) || (end < last && inside(b.values[b.values.len() - 1])) {
            return Err(Error::BranchMatching {
                k: ks[if b.start > 0 { b.start } else { end }],
                reason: "branch broken inside the window".into(),
            });
        }
    }
    Ok(branches)
}

/// Signed count of edge branches crossing `window` as k₁ runs over [−π, π],
/// on a strip of height `top` with one unit cell of columns.
///
/// Only branches localized at the bottom edge are counted; the top edge carries
/// the opposite flow.
pub fn edge_spectral_flow(
    params: &ModelParams,
    h: f64,
    top: f64,
    window: (f64, f64),
    opts: &FlowOptions,
) -> Result<SpectralFlow> {
    if !params.is_clean() {
        return config("spectral flow needs a model without disorder");
    }
    if !(window.0 < window.1) {
        return config("gap window needs E- < E+");
    }
    if opts.k_count < 3 {
        return config("k_count must be at least 3");
    }
    let grid = Grid::edge_cylinder(h, 1.0, top)?;
    let ham = assemble_hamiltonian(&grid, params, None, true)?;
    let st = ham.stencil().bloch(grid.width())?;
    let depth_mid = 0.5 * (grid.x2_offset() + grid.x2_max());
    let width = window.1 - window.0;
    let band = (window.0 - 0.25 * width, window.1 + 0.25 * width);
    let max_jump = 0.125 * width;

    let mut k_count = opts.k_count;
    let mut refinements = 0;
    let (ks, samples, branches) = loop {
        let ks: Vec<f64> = (0..k_count)
            .map(|j| -PI + 2.0 * PI * j as f64 / (k_count - 1) as f64)
            .collect();
        let samples = ks
            .par_iter()
            .map(|&k| sample(&st, k, band))
            .collect::<Result<Vec<_>>>()?;
        match trace_branches(&samples, max_jump, &ks, depth_mid, window) {
            Ok(b) => break (ks, samples, b),
            Err(e) if refinements >= opts.max_refinements => return Err(e),
            Err(_) => {
                refinements += 1;
                k_count = 2 * (k_count - 1) + 1;
            }
        }
    };

    let (first, last) = (&samples[0], &samples[ks.len() - 1]);
    let endpoint_mismatch = if first.values.len() == last.values.len() {
        first
            .values
            .iter()
            .zip(&last.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    // Energy resolution of the k-grid: the largest step along any branch.
    let quantum = branches
        .iter()
        .flat_map(|b| b.values.windows(2).map(|w| (w[1] - w[0]).abs()))
        .fold(0.0, f64::max);
    let mut win = window;
    let mut adjustments = Vec::new();
    let ends: Vec<f64> = first.values.iter().chain(&last.values).copied().collect();
    if ends.iter().any(|l| (l - win.0).abs() < quantum) {
        win.0 -= quantum;
        adjustments.push(format!("E- lowered by {quantum:.3e} to {:.6}", win.0));
    }
    if ends.iter().any(|l| (l - win.1).abs() < quantum) {
        win.1 += quantum;
        adjustments.push(format!("E+ raised by {quantum:.3e} to {:.6}", win.1));
    }
    let f0 = DistributionSpec::GappedF0 {
        e_minus: win.0,
        e_plus: win.1,
        order: opts.order,
    };
    let mut branches = branches;
    for b in &mut branches {
        b.score = f0.eval(b.values[0]) - f0.eval(*b.values.last().unwrap());
    }
    let raw: f64 = branches.iter().filter(|b| b.bottom).map(|b| b.score).sum();
    let flow = raw.round();
    let distance = (raw - flow).abs();
    if distance > opts.integer_tolerance {
        return Err(Error::FlowNotInteger { value: raw, distance });
    }
    Ok(SpectralFlow {
        flow: flow as i64,
        raw,
        requested_window: window,
        adjustments,
        endpoint_mismatch,
        k_count,
        bands: EdgeBands {
            eigenvalues: samples.into_iter().map(|s| s.values).collect(),
            k: ks,
            window: win,
            branches,
        },
    })
}
