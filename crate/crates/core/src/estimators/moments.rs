//! Closed-form subset average for even integer powers.
//!
//! For even `p` the squared discrepancy of a subset `S` is a polynomial in
//! the subset's values. Its average over all `l`-subsets of a window reduces
//! to sums over distinct index tuples, which in turn are integer
//! combinations of the window's power sums `p_j = Σ x^j`, `j ≤ 2p`. The
//! integer coefficients depend on `p` only and are built once.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::accumulate::{NeumaierSum, SlidingSum};
use crate::error::{Error, Result};
use crate::statistics::PowerFunction;

/// Largest power handled by the closed form.
pub const MOMENTS_MAX_POWER: u32 = 4;

pub fn moments_supported(p: f64) -> bool {
    p == 2.0 || p == 4.0
}

/// One monomial `Π p_j` among tuples of `distinct` indices, with the
/// coefficients it receives from `(Σx)^{2p}`, `(Σx)^p Σx^p` and `(Σx^p)²`.
#[derive(Debug, Clone)]
struct Term {
    distinct: usize,
    powers: Vec<usize>,
    coefficients: [i64; 3],
}

fn table(p: usize) -> &'static [Term] {
    static TWO: OnceLock<Vec<Term>> = OnceLock::new();
    static FOUR: OnceLock<Vec<Term>> = OnceLock::new();
    match p {
        2 => TWO.get_or_init(|| build_table(2)),
        4 => FOUR.get_or_init(|| build_table(4)),
        _ => unreachable!("unsupported power {p}"),
    }
}

/// All set partitions of `{0, …, n−1}` as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn recurse(pos: usize, blocks: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == labels.len() {
            out.push(labels.clone());
            return;
        }
        for b in 0..=blocks {
            labels[pos] = b;
            recurse(pos + 1, blocks.max(b + 1), labels, out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
    } else {
        recurse(0, 0, &mut labels, &mut out);
    }
    out
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

fn build_table(p: usize) -> Vec<Term> {
    let products: [(Vec<usize>, usize); 3] = [
        (vec![1; 2 * p], 0),
        ((0..=p).map(|i| if i < p { 1 } else { p }).collect(), 1),
        (vec![p, p], 2),
    ];
    let mut acc: BTreeMap<(usize, Vec<usize>), [i64; 3]> = BTreeMap::new();
    let mut block_partitions: Vec<Option<Vec<Vec<usize>>>> = vec![None; 2 * p + 1];
    for (exponents, slot) in &products {
        for positions in set_partitions(exponents.len()) {
            let m = positions.iter().max().map_or(0, |&b| b + 1);
            let mut block_exp = vec![0usize; m];
            for (pos, &b) in positions.iter().enumerate() {
                block_exp[b] += exponents[pos];
            }
            let sigmas = block_partitions[m].get_or_insert_with(|| set_partitions(m));
            for sigma in sigmas.iter() {
                let groups = sigma.iter().max().map_or(0, |&g| g + 1);
                let mut size = vec![0usize; groups];
                let mut power = vec![0usize; groups];
                for (b, &g) in sigma.iter().enumerate() {
                    size[g] += 1;
                    power[g] += block_exp[b];
                }
                let mobius: i64 = size
                    .iter()
                    .map(|&s| if s % 2 == 1 { factorial(s - 1) } else { -factorial(s - 1) })
                    .product();
                power.sort_unstable();
                acc.entry((m, power)).or_insert([0; 3])[*slot] += mobius;
            }
        }
    }
    acc.into_iter()
        .filter(|(_, c)| c.iter().any(|&v| v != 0))
        .map(|((distinct, powers), coefficients)| Term {
            distinct,
            powers,
            coefficients,
        })
        .collect()
}

/// Sum over windows `i ∈ {0, …, n−k}` of the average over `l`-subsets of
/// `(f_{lΔ}(Σ_S x) − Σ_S f_Δ(x))²`.
pub(crate) fn window_expectation_sum(
    incs: &[f64],
    k: usize,
    l: usize,
    f: &PowerFunction,
    delta: f64,
) -> Result<f64> {
    if !moments_supported(f.power()) {
        return Err(Error::config(format!(
            "closed-form subset average is unavailable for p = {}",
            f.power()
        )));
    }
    let p = f.power() as usize;
    let a = f.scale(l as f64 * delta);
    let b = f.scale(delta);
    let mixing = [a * a, -2.0 * a * b, b * b];
    let weights: Vec<f64> = (0..=2 * p)
        .map(|m| {
            if m > l {
                0.0
            } else {
                (0..m).map(|j| (l - j) as f64 / (k - j) as f64).product()
            }
        })
        .collect();
    let terms: Vec<(f64, &[usize])> = table(p)
        .iter()
        .map(|t| {
            let c: f64 = t
                .coefficients
                .iter()
                .zip(mixing)
                .map(|(&c, w)| c as f64 * w)
                .sum();
            (weights[t.distinct] * c, t.powers.as_slice())
        })
        .filter(|(c, _)| *c != 0.0)
        .collect();

    let top = 2 * p;
    let n = incs.len();
    let fresh = |start: usize| -> Vec<SlidingSum> {
        (1..=top)
            .map(|j| {
                let values: Vec<f64> = incs[start..start + k].iter().map(|x| x.powi(j as i32)).collect();
                SlidingSum::new(&values)
            })
            .collect()
    };
    let mut sums = fresh(0);
    let mut power_sums = vec![0.0; top + 1];
    let mut total = NeumaierSum::new();
    for start in 0..=(n - k) {
        if start > 0 {
            if start % k == 0 {
                sums = fresh(start);
            } else {
                let (out, inn) = (incs[start - 1], incs[start + k - 1]);
                for (j, s) in sums.iter_mut().enumerate() {
                    let e = j as i32 + 1;
                    s.slide(out.powi(e), inn.powi(e));
                }
            }
        }
        for (j, s) in sums.iter().enumerate() {
            power_sums[j + 1] = s.value();
        }
        let mut window = NeumaierSum::new();
        for (c, powers) in &terms {
            window += c * powers.iter().map(|&j| power_sums[j]).product::<f64>();
        }
        total += window.value().max(0.0);
    }
    Ok(total.value())
}
