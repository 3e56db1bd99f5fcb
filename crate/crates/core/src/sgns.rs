//! Negative-sampling logistic objective shared by the CBOW, skip-gram and
//! relational trainers.
//!
//! One step scores an input representation `h` (the mean of one or more
//! input rows) against a positive output row and a set of noise rows:
//!
//! `loss = -ln σ(h·o⁺) - Σ ln σ(-h·o⁻)`
//!
//! Parameters live in [`ParamMatrix`], whose cells are relaxed atomics so
//! several threads may update them without locks (Hogwild). With one thread
//! the updates are ordinary sequential SGD and fully reproducible.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::error::Result;
use crate::graph_embeddings::AliasTable;

pub struct ParamMatrix {
    rows: usize,
    cols: usize,
    data: Vec<AtomicU64>,
}

impl ParamMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    /// word2vec-style initialisation: uniform in `(-0.5/cols, 0.5/cols)`.
    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let half = 0.5 / cols as f64;
        let values = (0..rows * cols).map(|_| rng.gen_range(-half..half)).collect();
        Self::from_vec(rows, cols, values)
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols);
        ParamMatrix {
            rows,
            cols,
            data: values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        f64::from_bits(self.data[r * self.cols + c].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn set(&self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c].store(v.to_bits(), Ordering::Relaxed);
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    /// `row[r] += scale * delta`. Concurrent callers may lose updates.
    #[inline]
    pub fn add_row(&self, r: usize, delta: &[f64], scale: f64) {
        for (c, d) in delta.iter().enumerate() {
            self.set(r, c, self.get(r, c) + scale * d);
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.data.iter().map(|a| f64::from_bits(a.load(Ordering::Relaxed))).collect()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// One training example. Negatives equal to `target` are ignored.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    pub inputs: &'a [usize],
    pub target: usize,
    pub negatives: &'a [usize],
}

/// Per-row gradients of one step; rows may repeat.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub input: Vec<(usize, Vec<f64>)>,
    pub output: Vec<(usize, Vec<f64>)>,
}

/// Reusable buffers for [`Scratch::train`] and [`Scratch::gradient`].
pub struct Scratch {
    h: Vec<f64>,
    grad_h: Vec<f64>,
    coeffs: Vec<(usize, f64)>,
}

impl Scratch {
    pub fn new(dim: usize) -> Self {
        Scratch {
            h: vec![0.0; dim],
            grad_h: vec![0.0; dim],
            coeffs: Vec::new(),
        }
    }

    /// Computes the loss, `dL/dh` and, per output row, the coefficient `c`
    /// with `dL/do = c·h`. Nothing is written to the parameters.
    fn forward(&mut self, input: &ParamMatrix, output: &ParamMatrix, step: Step<'_>) -> f64 {
        let dim = input.cols();
        self.h.iter_mut().for_each(|v| *v = 0.0);
        for &r in step.inputs {
            for c in 0..dim {
                self.h[c] += input.get(r, c);
            }
        }
        let inv = 1.0 / step.inputs.len() as f64;
        self.h.iter_mut().for_each(|v| *v *= inv);

        self.grad_h.iter_mut().for_each(|v| *v = 0.0);
        self.coeffs.clear();
        let mut loss = 0.0;
        let rows = std::iter::once((step.target, true))
            .chain(step.negatives.iter().filter(|&&n| n != step.target).map(|&n| (n, false)));
        for (row, positive) in rows {
            let score: f64 = (0..dim).map(|c| self.h[c] * output.get(row, c)).sum();
            let coeff = if positive {
                loss -= log_sigmoid(score);
                sigmoid(score) - 1.0
            } else {
                loss -= log_sigmoid(-score);
                sigmoid(score)
            };
            for c in 0..dim {
                self.grad_h[c] += coeff * output.get(row, c);
            }
            self.coeffs.push((row, coeff));
        }
        loss
    }

    /// One SGD step with learning rate `lr`; returns the pre-update loss.
    pub fn train(&mut self, input: &ParamMatrix, output: &ParamMatrix, step: Step<'_>, lr: f64) -> f64 {
        let loss = self.forward(input, output, step);
        for &(row, coeff) in &self.coeffs {
            output.add_row(row, &self.h, -lr * coeff);
        }
        let per_input = -lr / step.inputs.len() as f64;
        for &r in step.inputs {
            input.add_row(r, &self.grad_h, per_input);
        }
        loss
    }

    pub fn loss(&mut self, input: &ParamMatrix, output: &ParamMatrix, step: Step<'_>) -> f64 {
        self.forward(input, output, step)
    }

    /// Analytic gradient of [`Scratch::loss`] with respect to every touched row.
    pub fn gradient(&mut self, input: &ParamMatrix, output: &ParamMatrix, step: Step<'_>) -> (f64, Gradient) {
        let loss = self.forward(input, output, step);
        let inv = 1.0 / step.inputs.len() as f64;
        let grad = Gradient {
            input: step
                .inputs
                .iter()
                .map(|&r| (r, self.grad_h.iter().map(|g| g * inv).collect()))
                .collect(),
            output: self
                .coeffs
                .iter()
                .map(|&(row, coeff)| (row, self.h.iter().map(|h| coeff * h).collect()))
                .collect(),
        };
        (loss, grad)
    }
}

/// Noise distribution proportional to `count^0.75`.
pub struct NoiseSampler {
    table: AliasTable,
}

pub const NOISE_POWER: f64 = 0.75;

impl NoiseSampler {
    pub fn new(counts: &[f64]) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|c| c.powf(NOISE_POWER)).collect();
        Ok(NoiseSampler {
            table: AliasTable::new(&weights)?,
        })
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [usize]) {
        for slot in out {
            *slot = self.table.sample(rng);
        }
    }
}

/// Learning rate decaying linearly from `start` to `end` over `total` steps.
#[derive(Debug, Clone, Copy)]
pub struct LinearDecay {
    pub start: f64,
    pub end: f64,
    pub total: usize,
}

impl LinearDecay {
    pub fn at(&self, step: usize) -> f64 {
        if self.total == 0 {
            return self.start;
        }
        let progress = (step as f64 / self.total as f64).min(1.0);
        self.start - (self.start - self.end) * progress
    }
}

pub const DEFAULT_START_LR: f64 = 0.025;
pub const DEFAULT_END_LR: f64 = 1e-4;

/// Splits `0..n` into `parts` contiguous ranges of near-equal length.
pub(crate) fn chunks(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.clamp(1, n.max(1));
    (0..parts)
        .map(|i| (i * n / parts)..((i + 1) * n / parts))
        .collect()
}

/// Runs `work` over `0..n_items` split into contiguous chunks, one per
/// thread, returning each chunk's result in chunk order. A single chunk runs
/// on the calling thread.
pub(crate) fn hogwild<T, F>(n_items: usize, threads: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, std::ops::Range<usize>) -> T + Sync,
{
    let ranges = chunks(n_items, threads);
    if ranges.len() == 1 {
        return vec![work(0, ranges[0].clone())];
    }
    std::thread::scope(|s| {
        let work = &work;
        let handles: Vec<_> = ranges
            .into_iter()
            .enumerate()
            .map(|(i, r)| s.spawn(move || work(i, r)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trainer thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decay_endpoints() {
        let d = LinearDecay {
            start: 0.025,
            end: 1e-4,
            total: 100,
        };
        assert_eq!(d.at(0), 0.025);
        assert!((d.at(100) - 1e-4).abs() < 1e-18);
        assert!((d.at(500) - 1e-4).abs() < 1e-18);
        assert!(d.at(50) < d.at(49));
    }

    #[test]
    fn chunks_cover_range() {
        let c = chunks(10, 3);
        assert_eq!(c, vec![0..3, 3..6, 6..10]);
        assert_eq!(chunks(0, 4), vec![0..0]);
        assert_eq!(chunks(2, 8).len(), 2);
    }

    #[test]
    fn negative_equal_to_target_is_skipped() {
        let mut rng = crate::rng::seeded(3, &[]);
        let input = ParamMatrix::uniform(3, 4, &mut rng);
        let output = ParamMatrix::uniform(3, 4, &mut rng);
        let mut s = Scratch::new(4);
        let a = s.loss(&input, &output, Step { inputs: &[0], target: 1, negatives: &[2] });
        let b = s.loss(&input, &output, Step { inputs: &[0], target: 1, negatives: &[1, 2] });
        assert_eq!(a, b);
    }

    #[test]
    fn train_applies_scaled_gradient() {
        let mut rng = crate::rng::seeded(5, &[]);
        let input = ParamMatrix::uniform(4, 3, &mut rng);
        let output = ParamMatrix::uniform(4, 3, &mut rng);
        let before_in = input.to_vec();
        let before_out = output.to_vec();
        let step = Step { inputs: &[0, 1], target: 2, negatives: &[3, 3] };
        let mut s = Scratch::new(3);
        let (_, grad) = s.gradient(&input, &output, step);
        s.train(&input, &output, step, 0.1);

        let mut expect_in = before_in.clone();
        for (r, g) in &grad.input {
            for c in 0..3 {
                expect_in[r * 3 + c] -= 0.1 * g[c];
            }
        }
        let mut expect_out = before_out.clone();
        for (r, g) in &grad.output {
            for c in 0..3 {
                expect_out[r * 3 + c] -= 0.1 * g[c];
            }
        }
        for (a, b) in input.to_vec().iter().zip(&expect_in) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in output.to_vec().iter().zip(&expect_out) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
