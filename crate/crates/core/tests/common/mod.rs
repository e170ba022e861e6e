#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_hankel::{Alphabet, LinearRepresentation, PfaForm};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn alphabet(k: usize) -> Alphabet {
    Alphabet::new((0..k).map(|i| ((b'a' + i as u8) as char).to_string())).unwrap()
}

/// p(a^n) = 0.5^(n+1).
pub fn p1() -> LinearRepresentation {
    LinearRepresentation::new(
        alphabet(1),
        DVector::from_element(1, 1.0),
        vec![DMatrix::from_element(1, 1, 0.5)],
        DVector::from_element(1, 0.5),
    )
    .unwrap()
}

pub fn p1_pfa() -> PfaForm {
    PfaForm::try_from(p1()).unwrap()
}

/// Fixed two-state automaton over {a, b}.
pub fn two_state_pfa() -> PfaForm {
    let rep = LinearRepresentation::new(
        alphabet(2),
        DVector::from_vec(vec![0.7, 0.3]),
        vec![
            DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.1, 0.1]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.1, 0.2, 0.2]),
        ],
        DVector::from_vec(vec![0.3, 0.4]),
    )
    .unwrap();
    PfaForm::try_from(rep).unwrap()
}

/// Random automaton with `d` states over `k` symbols; every state stops with
/// probability at least 0.1, so ρ(M_Σ) ≤ 0.9.
pub fn random_pfa(rng: &mut impl Rng, d: usize, k: usize) -> PfaForm {
    let mut initial: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = initial.iter().sum();
    initial.iter_mut().for_each(|v| *v /= total);
    let mut transitions = vec![DMatrix::zeros(d, d); k];
    let mut fin = DVector::zeros(d);
    for i in 0..d {
        fin[i] = 0.1 + 0.4 * rng.random::<f64>();
        let weights: Vec<f64> = (0..k * d).map(|_| rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        for (idx, w) in weights.iter().enumerate() {
            transitions[idx / d][(i, idx % d)] = (1.0 - fin[i]) * w / total;
        }
    }
    let rep = LinearRepresentation::new(alphabet(k), DVector::from_vec(initial), transitions, fin)
        .unwrap();
    PfaForm::try_from(rep).unwrap()
}

/// Random nonnegative representation (not normalised) with the maximal row
/// sum of M_Σ equal to `radius`.
pub fn random_rep(rng: &mut impl Rng, d: usize, k: usize, radius: f64) -> LinearRepresentation {
    let initial = DVector::from_fn(d, |_, _| rng.random::<f64>());
    let fin = DVector::from_fn(d, |_, _| rng.random::<f64>());
    let mut transitions: Vec<DMatrix<f64>> =
        (0..k).map(|_| DMatrix::from_fn(d, d, |_, _| rng.random::<f64>())).collect();
    let sum = transitions.iter().fold(DMatrix::zeros(d, d), |a, m| a + m);
    let max_row = (0..d).map(|r| sum.row(r).sum()).fold(0.0f64, f64::max);
    for m in &mut transitions {
        *m *= radius / max_row;
    }
    LinearRepresentation::new(alphabet(k), initial, transitions, fin).unwrap()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
