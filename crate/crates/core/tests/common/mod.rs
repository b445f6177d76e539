//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use opinion_align::survey::{OptionKind, OptionSpec, Question};
use rand::Rng;

/// Earth mover's distance by solving the transport LP directly.
pub fn lp_transport(p: &[f64], q: &[f64], support: &[f64]) -> f64 {
    let n = support.len();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut vars = vec![vec![]; n];
    for i in 0..n {
        for j in 0..n {
            vars[i].push(problem.add_var((support[i] - support[j]).abs(), (0.0, f64::INFINITY)));
        }
    }
    for i in 0..n {
        let row: Vec<_> = (0..n).map(|j| (vars[i][j], 1.0)).collect();
        problem.add_constraint(&row, ComparisonOp::Eq, p[i]);
        let col: Vec<_> = (0..n).map(|j| (vars[j][i], 1.0)).collect();
        problem.add_constraint(&col, ComparisonOp::Eq, q[i]);
    }
    let solution = problem.solve().expect("transport LP is feasible");
    let mut cost = 0.0;
    for i in 0..n {
        for j in 0..n {
            cost += solution[vars[i][j]] * (support[i] - support[j]).abs();
        }
    }
    cost
}

/// Support values written out by hand: ordinal keys 1..k then the hedge at
/// their mean.
pub fn hand_support(ordinal: usize, hedge: bool) -> Vec<f64> {
    let mut s: Vec<f64> = (1..=ordinal).map(|k| k as f64).collect();
    if hedge {
        s.push((ordinal as f64 + 1.0) / 2.0);
    }
    s
}

/// A random probability vector, sometimes with exact zeros.
pub fn random_dist<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if v.iter().sum::<f64>() == 0.0 {
        v[rng.gen_range(0..n)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub fn question(qid: &str, ordinal: usize, hedge: bool, refusal: bool) -> Question {
    let mut options: Vec<OptionSpec> = (0..ordinal)
        .map(|k| OptionSpec::new(label(k), format!("Level {}", k + 1), OptionKind::Ordinal))
        .collect();
    if hedge {
        options.push(OptionSpec::new(label(ordinal), "Neither", OptionKind::Hedge));
    }
    if refusal {
        options.push(OptionSpec::new(label(options.len()), "Refused", OptionKind::Refusal));
    }
    Question::new(qid, format!("Question {qid}?"), vec!["misc".into()], options, "TEST").unwrap()
}

pub fn label(i: usize) -> String {
    ((b'A' + i as u8) as char).to_string()
}

pub fn softmax(lps: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = lps.iter().map(|x| x.exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
