//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use miqa_pns::nn::{Mlp, ModelTriple, TripleSpec};
use miqa_pns::objective::{task_loss, Mode, QualityLabel};
use miqa_pns::tensor::{Tape, TensorId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Denominator floor: below this magnitude both gradients count as zero
/// and the difference is compared absolutely.
pub const GRAD_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Builds a scalar from `inputs` (one leaf per entry) on a fresh tape.
pub type Build<'a> = dyn Fn(&mut Tape, &[TensorId]) -> TensorId + 'a;

fn eval(build: &Build<'_>, inputs: &[(Vec<usize>, Vec<f64>)]) -> f64 {
    let mut tape = Tape::new();
    let ids: Vec<TensorId> = inputs
        .iter()
        .map(|(s, d)| tape.leaf(s.clone(), d.clone()).unwrap())
        .collect();
    let root = build(&mut tape, &ids);
    tape.scalar(root)
}

/// Largest relative error between backward and central differences over
/// every input coordinate.
pub fn max_fd_error(build: &Build<'_>, inputs: &[(Vec<usize>, Vec<f64>)]) -> f64 {
    let mut tape = Tape::new();
    let ids: Vec<TensorId> = inputs
        .iter()
        .map(|(s, d)| tape.leaf(s.clone(), d.clone()).unwrap())
        .collect();
    let root = build(&mut tape, &ids);
    tape.backward(root).unwrap();
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .zip(inputs)
        .map(|(&id, (_, d))| tape.grad(id).map_or_else(|| vec![0.0; d.len()], <[f64]>::to_vec))
        .collect();

    let mut worst: f64 = 0.0;
    let mut probe = inputs.to_vec();
    for (t, row) in analytic.iter().enumerate() {
        for (j, &g) in row.iter().enumerate() {
            let x = inputs[t].1[j];
            probe[t].1[j] = x + FD_STEP;
            let up = eval(build, &probe);
            probe[t].1[j] = x - FD_STEP;
            let down = eval(build, &probe);
            probe[t].1[j] = x;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(g, numeric));
        }
    }
    worst
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<QualityLabel> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                QualityLabel::Good
            } else {
                QualityLabel::Deficient
            }
        })
        .collect()
}

/// Smallest |pre-activation| over the hidden ReLU layers of `mlp` on `x`.
pub fn relu_margin(mlp: &Mlp, x: &[f64], batch: usize) -> f64 {
    let mut act = x.to_vec();
    let mut margin = f64::INFINITY;
    let layers = mlp.layers();
    for (li, l) in layers.iter().enumerate() {
        let mut out = vec![0.0; batch * l.out_dim];
        for r in 0..batch {
            for o in 0..l.out_dim {
                let mut z = l.bias[o];
                for i in 0..l.in_dim {
                    z += act[r * l.in_dim + i] * l.weight[i * l.out_dim + o];
                }
                out[r * l.out_dim + o] = z;
            }
        }
        if li + 1 < layers.len() {
            margin = out.iter().fold(margin, |m, z| m.min(z.abs()));
            out.iter_mut().for_each(|z| *z = z.max(0.0));
        }
        act = out;
    }
    margin
}

pub fn small_spec(input_dim: usize) -> TripleSpec {
    TripleSpec {
        input_dim,
        extractor_hidden: vec![5],
        feature_dim: 4,
        predictor_hidden: vec![6],
    }
}

/// Total task loss of `model` as a function of its parameters, with the
/// parameter tensors of E, E^c and F returned in that order.
pub fn task_loss_graph(
    tape: &mut Tape,
    model: &ModelTriple,
    x: &[f64],
    labels: &[QualityLabel],
    lambda: f64,
    mode: Mode,
) -> (TensorId, Vec<TensorId>) {
    let xs = tape.constant(vec![labels.len(), model.input_dim()], x.to_vec()).unwrap();
    let e = model.extractor.bind(tape).unwrap();
    let ec = model.complement.as_ref().unwrap().bind(tape).unwrap();
    let f = model.predictor.bind(tape).unwrap();
    let h = e.forward(tape, xs).unwrap();
    let z = f.forward(tape, h).unwrap();
    let hc = ec.forward(tape, xs).unwrap();
    let zc = f.forward(tape, hc).unwrap();
    let loss = task_loss(tape, z, Some(zc), labels, lambda, mode).unwrap();
    let params = e.params().iter().chain(ec.params()).chain(f.params()).copied().collect();
    (loss.total, params)
}

/// Finite-difference check of the full task loss through E, E^c and F at a
/// random point drawn from `seed`. `None` when the point sits within 1e-3 of
/// a ReLU kink, where central differences are not meaningful.
pub fn task_loss_fd_error(seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dim, batch) = (6, 5);
    let mut model = ModelTriple::init(&small_spec(dim), seed).unwrap();
    // Non-zero biases so the bias gradients are exercised away from init.
    for p in model.params_mut() {
        for v in p.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let x = random_vec(&mut rng, dim * batch, 1.0);
    let mut labels = random_labels(&mut rng, batch);
    labels[0] = QualityLabel::Good;
    labels[1] = QualityLabel::Deficient;
    let lambda = rng.random_range(0.0..2.0);

    let margin = |m: &ModelTriple| {
        let hidden = |mlp: &Mlp, input: &[f64]| mlp.predict(input, batch).unwrap();
        let h = hidden(&m.extractor, &x);
        let hc = hidden(m.complement.as_ref().unwrap(), &x);
        relu_margin(&m.extractor, &x, batch)
            .min(relu_margin(m.complement.as_ref().unwrap(), &x, batch))
            .min(relu_margin(&m.predictor, &h, batch))
            .min(relu_margin(&m.predictor, &hc, batch))
    };
    if margin(&model) < 1e-3 {
        return None;
    }

    let mut tape = Tape::new();
    let (root, params) = task_loss_graph(&mut tape, &model, &x, &labels, lambda, Mode::MiqaPns);
    tape.backward(root).unwrap();
    let analytic: Vec<Vec<f64>> = params.iter().map(|&p| tape.grad(p).unwrap().to_vec()).collect();

    let loss_at = |m: &ModelTriple| {
        let mut t = Tape::new();
        let (root, _) = task_loss_graph(&mut t, m, &x, &labels, lambda, Mode::MiqaPns);
        t.scalar(root)
    };
    let mut worst: f64 = 0.0;
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let mut probe = model.clone();
            let orig = probe.params_mut().nth(pi).unwrap()[j];
            probe.params_mut().nth(pi).unwrap()[j] = orig + FD_STEP;
            let up = loss_at(&probe);
            probe.params_mut().nth(pi).unwrap()[j] = orig - FD_STEP;
            let down = loss_at(&probe);
            worst = worst.max(relative_error(a, (up - down) / (2.0 * FD_STEP)));
        }
    }
    Some(worst)
}

/// Confusion counts by enumerating all four (predicted, truth) cells.
pub fn brute_force_counts(pred: &[QualityLabel], truth: &[QualityLabel]) -> [usize; 4] {
    use QualityLabel::{Deficient, Good};
    let count = |p, t| pred.iter().zip(truth).filter(|&(&a, &b)| a == p && b == t).count();
    [
        count(Good, Good),
        count(Good, Deficient),
        count(Deficient, Good),
        count(Deficient, Deficient),
    ]
}

/// (precision, recall, f1, deficient accuracy) from raw counts.
pub fn brute_force_metrics(pred: &[QualityLabel], truth: &[QualityLabel]) -> [f64; 4] {
    let [tp, fp, fn_, tn] = brute_force_counts(pred, truth);
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = div(tp, tp + fp);
    let r = div(tp, tp + fn_);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    [p, r, f1, div(tn, tn + fp)]
}
