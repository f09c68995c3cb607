use super::common::{sample_topic_assignments, update_topics};
use super::{Documents, HyperParams, ModelError, ModelState, SweepOptions};
use crate::distributions::{sample_dirichlet_into, RandomSource};

/// LDA and Dir-PFA: `λ̃_j ~ Dir(α/K + n_j1, ..., α/K + n_jK)` with α = `lda_alpha_total`.
pub fn lda_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let prior = hyper.lda_alpha_total / k_max as f64 + opts.shape_bump();

    sample_topic_assignments(state, docs, rng, opts)?;

    for j in 0..state.num_docs {
        let counts = &state.n_jk[j * k_max..(j + 1) * k_max];
        let row = &mut state.lambda[j * k_max..(j + 1) * k_max];
        sample_dirichlet_into(counts.iter().map(|&n| prior + n as f64), row, rng)?;
    }

    update_topics(state, hyper.eta, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_support::*;
    use crate::models::ModelKind;

    fn proportions(docs: &Documents, k: usize, draws: usize) -> Vec<Vec<f64>> {
        let hyper = small_hyper(k);
        let (mut state, mut rng) = fitted(ModelKind::Lda, docs, &hyper, 3);
        let mut sums = vec![vec![0.0; k]; docs.num_docs()];
        let mut counts = vec![vec![0.0; k]; docs.num_docs()];
        for _ in 0..draws {
            lda_sweep(&mut state, docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
            for j in 0..docs.num_docs() {
                for kk in 0..k {
                    // centre on the conditional mean given this sweep's counts
                    let n = state.n_jk[j * k + kk] as f64;
                    let expected = (hyper.lda_alpha_total / k as f64 + n)
                        / (hyper.lda_alpha_total + docs.len(j) as f64);
                    sums[j][kk] += state.lambda[j * k + kk] / draws as f64;
                    counts[j][kk] += expected / draws as f64;
                }
            }
        }
        sums.into_iter()
            .zip(counts)
            .map(|(s, c)| s.iter().zip(&c).map(|(a, b)| a / b).collect())
            .collect()
    }

    #[test]
    fn proportion_posterior_mean() {
        let docs = toy_docs(2, 3);
        for row in proportions(&docs, 4, 20_000) {
            for ratio in row {
                assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
            }
        }
    }

    #[test]
    fn empty_document_uses_prior() {
        let docs = Documents::new(vec![vec![], vec![0, 1]], 2).unwrap();
        let hyper = small_hyper(5);
        let (mut state, mut rng) = fitted(ModelKind::Lda, &docs, &hyper, 3);
        let mut m = vec![0.0; 5];
        for _ in 0..20_000 {
            lda_sweep(&mut state, &docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
            for (acc, &x) in m.iter_mut().zip(state.lambda_row(0)) {
                *acc += x / 20_000.0;
            }
        }
        for x in m {
            assert!((x - 0.2).abs() < 0.004, "{x}");
        }
    }

    #[test]
    fn single_topic_proportion_is_one() {
        let docs = toy_docs(2, 3);
        let hyper = small_hyper(1);
        let (mut state, mut rng) = fitted(ModelKind::DirPfa, &docs, &hyper, 3);
        lda_sweep(&mut state, &docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
        assert_eq!(state.lambda, vec![1.0, 1.0]);
    }
}
