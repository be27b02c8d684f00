use geoconvex::problems::EuclideanQuadratic;
use geoconvex::solver::IterateView;
use geoconvex::{
    run_with, Constants, Euclidean, FirstOrderOracle, RunOptions, SolverPreset, TheoremId,
};
use nalgebra::DVector;

pub const WEIGHTS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
pub const CENTER: [f64; 4] = [0.5, -1.0, 2.0, 0.0];
pub const START: [f64; 4] = [3.0, 2.0, -1.0, 1.5];

/// Plain-vector gradient method with closed-form averages, written without the
/// crate's schedules or averaging recursions.
pub fn reference_run(
    theorem: TheoremId,
    t: usize,
    c: &Constants,
) -> Vec<(Vec<f64>, Option<Vec<f64>>)> {
    let d = c.diameter.unwrap();
    let tf = t as f64;
    let eta = |s: usize| -> f64 {
        match theorem {
            TheoremId::T1 => d / (c.lipschitz_f.unwrap() * tf.sqrt()),
            TheoremId::T2 => d / (c.grad_bound.unwrap() * tf.sqrt()),
            TheoremId::T3 | TheoremId::T4 => 2.0 / (c.mu.unwrap() * (s as f64 + 1.0)),
            TheoremId::T5 | TheoremId::T7 => 1.0 / c.lipschitz_grad.unwrap(),
            TheoremId::T6 => {
                let alpha = (d / c.sigma.unwrap()) * (1.0 / tf).sqrt();
                1.0 / (c.lipschitz_grad.unwrap() + 1.0 / alpha)
            }
        }
    };
    let mut xs: Vec<Vec<f64>> = vec![START.to_vec()];
    for s in 1..t {
        let x = &xs[s - 1];
        let next = (0..4)
            .map(|j| x[j] - eta(s) * WEIGHTS[j] * (x[j] - CENTER[j]))
            .collect();
        xs.push(next);
    }
    let mean = |items: &[(f64, &Vec<f64>)]| -> Vec<f64> {
        let total: f64 = items.iter().map(|p| p.0).sum();
        (0..4)
            .map(|j| items.iter().map(|(w, x)| w * x[j]).sum::<f64>() / total)
            .collect()
    };
    (1..=t)
        .map(|s| {
            let prefix = &xs[..s];
            let avg = match theorem {
                TheoremId::T1 | TheoremId::T2 => {
                    Some(mean(&prefix.iter().map(|x| (1.0, x)).collect::<Vec<_>>()))
                }
                TheoremId::T3 | TheoremId::T4 => Some(mean(
                    &prefix
                        .iter()
                        .enumerate()
                        .map(|(k, x)| ((k + 1) as f64, x))
                        .collect::<Vec<_>>(),
                )),
                // Flat tail average: x_1 alone, then the mean of x_2..x_s.
                TheoremId::T6 if s == 1 => Some(xs[0].clone()),
                TheoremId::T6 => Some(mean(
                    &prefix[1..].iter().map(|x| (1.0, x)).collect::<Vec<_>>(),
                )),
                TheoremId::T5 | TheoremId::T7 => None,
            };
            (xs[s - 1].clone(), avg)
        })
        .collect()
}

fn close(a: &DVector<f64>, b: &[f64]) -> bool {
    let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

/// First iteration at which `theorem`'s run on the flat quadratic leaves the
/// plain-vector iteration by more than 1e-12 relative, over 1000 iterations.
pub fn flat_mismatch(theorem: TheoremId) -> Option<usize> {
    let q = EuclideanQuadratic::new(
        DVector::from_row_slice(&WEIGHTS),
        DVector::from_row_slice(&CENTER),
    )
    .unwrap()
    .with_diameter(10.0);
    let m = q.manifold();
    let constants = Constants {
        grad_bound: Some(25.0),
        sigma: Some(0.5),
        ..q.constants()
    };
    let t = 1_000;
    {
        let preset = SolverPreset::new(theorem, t, &constants, 0.0).unwrap();
        let expected = reference_run(theorem, t, &constants);
        let mut seen = 0;
        let mut worst = None;
        let mut observe = |v: &IterateView<'_, Euclidean>| {
            let (x, avg) = &expected[v.s - 1];
            let ok = close(v.x, x)
                && match (v.average, avg) {
                    (Some(a), Some(b)) => close(a, b),
                    (None, None) => true,
                    _ => false,
                };
            if !ok && worst.is_none() {
                worst = Some(v.s);
            }
            seen += 1;
        };
        let out = run_with(
            &preset,
            &q,
            &m,
            &DVector::from_row_slice(&START),
            0,
            RunOptions {
                observer: Some(&mut observe),
                ..RunOptions::default()
            },
        )
        .unwrap();
        if seen != t || out.trace.records.len() != t {
            return Some(0);
        }
        worst
    }
}
