#![allow(dead_code)]

use copos::fuzzy::{discrete_design_system, AugmentedVertexSystem, Domain, ExtremaMode, DEFAULT_SAMPLING_PERIOD};
use copos::model::ModelParams;
use copos::synthesis::{synthesize_pdc, DesignProblem, SynthesisOptions, SynthesisOutcome, SynthesisResult};

pub fn table1() -> ModelParams {
    ModelParams::stepanova_table1()
}

pub fn design_system(period: f64) -> AugmentedVertexSystem {
    discrete_design_system(&table1(), &Domain::default(), ExtremaMode::Endpoint, period)
        .unwrap()
        .2
}

pub fn design_problem(period: f64) -> DesignProblem {
    DesignProblem::from_augmented(&design_system(period)).unwrap()
}

/// Default design: the discrete augmented system and its synthesized gains.
pub fn default_design() -> (AugmentedVertexSystem, SynthesisResult) {
    let system = design_system(DEFAULT_SAMPLING_PERIOD);
    let problem = DesignProblem::from_augmented(&system).unwrap();
    match synthesize_pdc(&problem, &SynthesisOptions::default()).unwrap() {
        SynthesisOutcome::Feasible(res) => (system, *res),
        SynthesisOutcome::Infeasible(f) => panic!("default design infeasible: {f:?}"),
    }
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        n => (0..n)
            .map(|c| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][c] * det(&minor)
            })
            .sum(),
    }
}

/// Monic characteristic polynomial from sums of principal minors, highest
/// degree first: `z^n + a_1 z^{n-1} + ... + a_n`.
pub fn char_poly_by_minors(a: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    for k in 1..=n {
        let mut sum = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let sub: Vec<Vec<f64>> = idx.iter().map(|&r| idx.iter().map(|&c| a[(r, c)]).collect()).collect();
            sum += det(&sub);
        }
        coeffs.push(if k % 2 == 0 { sum } else { -sum });
    }
    coeffs
}

/// Roots of a monic polynomial (highest degree first) by Durand–Kerner iteration.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    use nalgebra::Complex;
    let n = coeffs.len() - 1;
    let eval = |z: Complex<f64>| coeffs.iter().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c);
    let radius = 1.0 + coeffs[1..].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(Complex::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    roots
}

pub fn oracle_spectral_radius(a: &nalgebra::DMatrix<f64>) -> f64 {
    durand_kerner(&char_poly_by_minors(a))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `rho^2 - 1` for a near-identity matrix `G = I + T N`, computed from the
/// roots of the characteristic polynomial of `N` so clustered eigenvalues of
/// `G` near 1 do not lose precision. Negative means `G` is Schur.
pub fn oracle_schur_margin(g: &nalgebra::DMatrix<f64>, t: f64) -> f64 {
    let n = g.nrows();
    let gen = (g - nalgebra::DMatrix::<f64>::identity(n, n)) / t;
    durand_kerner(&char_poly_by_minors(&gen))
        .iter()
        .map(|mu| 2.0 * t * mu.re + t * t * mu.norm_sqr())
        .fold(f64::NEG_INFINITY, f64::max)
}
