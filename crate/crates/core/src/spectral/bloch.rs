use faer::c64;
use rayon::prelude::*;

use super::eigen::{eig_hermitian, eig_symmetric, Spectrum};
use super::operator::{KOperator, OperatorMatrix};
use crate::error::Result;
use crate::model::{BlochStencil, CellLayout};

/// Eigendecomposition of every fiber of a block-circulant operator.
#[derive(Clone, Debug)]
pub struct BlochSpectrum {
    pub layout: CellLayout,
    pub momenta: Vec<f64>,
    pub fibers: Vec<Spectrum>,
}

/// `f(λ)` on every fiber; evaluates kernel entries of `f(H)` without forming it.
pub struct Weighted<'a> {
    spectrum: &'a BlochSpectrum,
    weights: Vec<Vec<c64>>,
}

impl BlochSpectrum {
    pub fn compute(st: &BlochStencil) -> Result<Self> {
        let momenta = st.layout.momenta();
        let fibers = momenta
            .par_iter()
            .map(|&k| match st.real_fiber(k) {
                Some(m) => eig_symmetric(m.as_ref()),
                None => eig_hermitian(st.fiber(k).as_ref()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layout: st.layout,
            momenta,
            fibers,
        })
    }

    pub fn from_dense(spectrum: Spectrum, layout: CellLayout) -> Self {
        assert_eq!(layout.cells, 1);
        assert_eq!(layout.block_dim(), spectrum.dim());
        Self {
            layout,
            momenta: vec![0.0],
            fibers: vec![spectrum],
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.n_sites()
    }

    /// All eigenvalues of the full operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .fibers
            .iter()
            .flat_map(|s| s.eigenvalues.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn spectral_range(&self) -> (f64, f64) {
        let lo = self
            .fibers
            .iter()
            .map(|s| s.eigenvalues[0])
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .fibers
            .iter()
            .map(|s| *s.eigenvalues.last().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn weighted(&self, f: impl Fn(f64) -> c64 + Sync) -> Weighted<'_> {
        let weights = self
            .fibers
            .iter()
            .map(|s| s.eigenvalues.iter().map(|&l| f(l)).collect())
            .collect();
        Weighted {
            spectrum: self,
            weights,
        }
    }

    /// Fibers of `f(H)`.
    pub fn k_operator(&self, f: impl Fn(f64) -> c64 + Sync) -> KOperator {
        let fibers = self.fibers.par_iter().map(|s| s.apply(&f)).collect();
        KOperator {
            layout: self.layout,
            fibers,
        }
    }

    pub fn operator(&self, f: impl Fn(f64) -> c64 + Sync) -> OperatorMatrix {
        self.k_operator(f).to_real()
    }
}

impl Weighted<'_> {
    /// `f(H)[(0, a), (δ, b)]` for a signed cell offset δ.
    pub fn entry(&self, a: usize, delta: i64, b: usize) -> c64 {
        self.entries(&[(a, delta, b)])[0]
    }

    /// Batched [`Self::entry`]. Each fiber is swept once, column by column,
    /// and fibers are summed in momentum order so the result is reproducible.
    pub fn entries(&self, pairs: &[(usize, i64, usize)]) -> Vec<c64> {
        let sp = self.spectrum;
        let per_fiber: Vec<Vec<c64>> = sp
            .fibers
            .par_iter()
            .zip(&self.weights)
            .zip(&sp.momenta)
            .map(|((s, w), &k)| {
                let mut acc = vec![c64::new(0.0, 0.0); pairs.len()];
                for (n, &fw) in w.iter().enumerate() {
                    if fw == c64::new(0.0, 0.0) {
                        continue;
                    }
                    let col = s.vectors.col(n);
                    for (out, &(a, _, b)) in acc.iter_mut().zip(pairs) {
                        *out += col[a] * fw * col[b].conj();
                    }
                }
                for (out, &(_, delta, _)) in acc.iter_mut().zip(pairs) {
                    *out *= c64::cis(-k * delta as f64);
                }
                acc
            })
            .collect();
        let nc = sp.layout.cells as f64;
        let mut total = vec![c64::new(0.0, 0.0); pairs.len()];
        for part in &per_fiber {
            for (t, v) in total.iter_mut().zip(part) {
                *t += v;
            }
        }
        total.iter().map(|v| v / nc).collect()
    }

    /// Diagonal of `f(H)` on cell 0.
    pub fn diagonal(&self) -> Vec<c64> {
        let pairs: Vec<_> = (0..self.spectrum.layout.block_dim()).map(|a| (a, 0, a)).collect();
        self.entries(&pairs)
    }

    /// Diagonal of `J·f(H)` on cell 0 for a stencil operator `J`.
    pub fn product_diagonal(&self, j: &BlochStencil) -> Vec<c64> {
        let bd = self.spectrum.layout.block_dim();
        // (row a, coefficient, entry index); f(H)[(dc, b), (0, a)] = f(H)[(0, b), (−dc, a)].
        let mut pairs: Vec<(usize, i64, usize)> = (0..bd).map(|a| (a, 0, a)).collect();
        let mut terms: Vec<(usize, c64, usize)> = (0..bd).map(|a| (a, c64::new(j.diagonal[a], 0.0), a)).collect();
        for hop in &j.hops {
            terms.push((hop.from, hop.value, pairs.len()));
            pairs.push((hop.to, -(hop.dc as i64), hop.from));
            terms.push((hop.to, hop.value.conj(), pairs.len()));
            pairs.push((hop.from, hop.dc as i64, hop.to));
        }
        let e = self.entries(&pairs);
        let mut out = vec![c64::new(0.0, 0.0); bd];
        for (a, v, idx) in terms {
            out[a] += v * e[idx];
        }
        out
    }
}
