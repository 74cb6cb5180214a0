use serde::Serialize;

use super::operator::OperatorMatrix;

/// Shell-binned off-diagonal amplitudes `max |A(x₀; y)|` and their exponential fit.
#[derive(Clone, Debug, Serialize)]
pub struct DecayProbe {
    pub shell_width: f64,
    /// `(shell lower radius, max amplitude in shell)`.
    pub shells: Vec<(f64, f64)>,
    /// Non-increasing envelope of `shells`.
    pub envelope: Vec<(f64, f64)>,
    /// `−d ln(envelope)/dr`; `None` when fewer than three usable shells remain.
    pub rate: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Least squares `y ≈ a + s·x`; returns `(s, a, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let s = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((s, my - s * mx, r2))
}

pub fn kernel_decay_probe(a: &OperatorMatrix, x0: usize, shell_width: f64) -> DecayProbe {
    let l = a.layout;
    let (c0, a0) = l.split(x0);
    let n_shells = {
        let c = l.circumference() / 2.0;
        let h2 = l.rows as f64 * l.spacing;
        ((c * c + h2 * h2).sqrt() / shell_width).ceil() as usize + 1
    };
    let mut shells = vec![0.0f64; n_shells];
    for y in 0..l.n_sites() {
        if y == x0 {
            continue;
        }
        let (cy, b) = l.split(y);
        let d = (cy + l.cells - c0) % l.cells;
        let r = l.dx1(a0, d, b).hypot(l.dx2(a0, b));
        let idx = ((r / shell_width).floor() as usize).min(n_shells - 1);
        shells[idx] = shells[idx].max(a.blocks[d][(a0, b)].norm());
    }
    let shells: Vec<(f64, f64)> = shells
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i as f64 * shell_width, v))
        .collect();
    let mut envelope = shells.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i].1 = envelope[i].1.max(envelope[i + 1].1);
    }
    let peak = envelope.iter().map(|s| s.1).fold(0.0, f64::max);
    let floor = 1e-13 * peak;
    let (xs, ys): (Vec<f64>, Vec<f64>) = envelope
        .iter()
        .skip(1)
        .filter(|s| s.1 > floor && s.1 > 0.0)
        .map(|s| (s.0, s.1.ln()))
        .unzip();
    let fit = (xs.len() >= 3).then(|| linear_fit(&xs, &ys)).flatten();
    DecayProbe {
        shell_width,
        shells,
        envelope,
        rate: fit.map(|f| -f.0),
        r_squared: fit.map(|f| f.2),
    }
}
