//! Synthetic respondent populations: ability-parameterized answer sampling
//! through the logistic forward model, random-guesser and constant-label
//! baselines, mixtures, planted-structure distance matrices, and a worker
//! pool with ground-truth roles for exercising the screening protocol.
//!
//! Every generator takes an explicit seed and derives one stream per
//! respondent, so output is bit-deterministic and independent of evaluation
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cluster::DistanceMatrix;
use crate::corpus::{ItemRecord, Label, RespondentRecord};
use crate::error::{Error, Result};
use crate::irt::{prob_correct, ItemParams};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Answering behavior of a synthetic population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationKind<S> {
    /// Latent-ability respondents: θ ~ Normal(mean, sd), each item answered
    /// correctly with the forward-model probability; a wrong answer picks
    /// uniformly between the two incorrect labels.
    Irt {
        theta_mean: S,
        theta_sd: S,
        item_params: Vec<ItemParams<S>>,
    },
    /// Uniform choice over the three labels on every item.
    RandomGuess,
    /// The same label on every item.
    ConstantLabel { label: Label },
    /// Per-respondent draw over component behaviors; weights must sum to 1.
    BadFaithMix { components: Vec<MixComponent<S>> },
}

/// One weighted branch of a [`PopulationKind::BadFaithMix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixComponent<S> {
    pub weight: S,
    pub kind: PopulationKind<S>,
}

/// A population to generate: size, behavior, labeling, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec<S> {
    /// Population tag stamped on every generated record.
    pub population: String,
    /// Optional architecture tag (for per-architecture reporting).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<String>,
    pub n_respondents: usize,
    pub kind: PopulationKind<S>,
    pub seed: u64,
}

fn validate_kind<S: Scalar>(kind: &PopulationKind<S>, n_items: usize) -> Result<()> {
    match kind {
        PopulationKind::Irt {
            theta_sd,
            item_params,
            theta_mean,
        } => {
            if !theta_mean.is_finite() || !theta_sd.is_finite() || *theta_sd < S::zero() {
                return Err(Error::InvalidSpec(
                    "ability distribution needs a finite mean and sd ≥ 0".to_string(),
                ));
            }
            if item_params.len() != n_items {
                return Err(Error::LengthMismatch(item_params.len(), n_items));
            }
            Ok(())
        }
        PopulationKind::RandomGuess | PopulationKind::ConstantLabel { .. } => Ok(()),
        PopulationKind::BadFaithMix { components } => {
            if components.is_empty() {
                return Err(Error::InvalidSpec(
                    "a mixture needs at least one component".to_string(),
                ));
            }
            let mut total = S::zero();
            for component in components {
                if matches!(component.kind, PopulationKind::BadFaithMix { .. }) {
                    return Err(Error::InvalidSpec(
                        "mixtures cannot nest mixtures".to_string(),
                    ));
                }
                if !component.weight.is_finite() || component.weight < S::zero() {
                    return Err(Error::InvalidSpec(
                        "mixture weights must be non-negative and finite".to_string(),
                    ));
                }
                validate_kind(&component.kind, n_items)?;
                total = total + component.weight;
            }
            if (total - S::one()).abs() > S::from_f64_lossy(1e-9) {
                return Err(Error::InvalidSpec(format!(
                    "mixture weights must sum to 1, got {total}"
                )));
            }
            Ok(())
        }
    }
}

/// Answer every item per one non-mixture behavior, using the respondent's
/// own random stream.
fn answer_items<S: Scalar>(
    kind: &PopulationKind<S>,
    items: &[ItemRecord],
    rng: &mut ChaCha8Rng,
    record: &mut RespondentRecord,
) {
    match kind {
        PopulationKind::Irt {
            theta_mean,
            theta_sd,
            item_params,
        } => {
            let normal = Normal::new(
                theta_mean.to_f64().unwrap_or(0.0),
                theta_sd.to_f64().unwrap_or(0.0),
            )
            .expect("validated sd");
            let theta = S::from_f64_lossy(normal.sample(rng));
            for (item, params) in items.iter().zip(item_params) {
                let p = prob_correct(params, theta)
                    .to_f64()
                    .unwrap_or(0.0);
                let label = if rng.random::<f64>() < p {
                    item.gold_label
                } else {
                    wrong_label(item.gold_label, rng)
                };
                record.responses.insert(item.item_id.clone(), label);
            }
        }
        PopulationKind::RandomGuess => {
            for item in items {
                let label = Label::ALL[rng.random_range(0..Label::ALL.len())];
                record.responses.insert(item.item_id.clone(), label);
            }
        }
        PopulationKind::ConstantLabel { label } => {
            for item in items {
                record.responses.insert(item.item_id.clone(), *label);
            }
        }
        PopulationKind::BadFaithMix { .. } => unreachable!("mixtures are dispatched by caller"),
    }
}

/// Uniform draw over the two labels other than `gold`.
fn wrong_label(gold: Label, rng: &mut ChaCha8Rng) -> Label {
    let wrong: Vec<Label> = Label::ALL.iter().copied().filter(|&l| l != gold).collect();
    wrong[rng.random_range(0..wrong.len())]
}

/// Generate one population's respondent records.
///
/// Each respondent uses a stream derived from `(spec.seed, index)`, so the
/// output is identical regardless of generation order or thread count, and
/// respondent j's answers do not depend on how many respondents precede it.
/// Respondent ids embed the population and, when present, the architecture
/// tag, so several specs for one population stay distinct as long as their
/// architectures differ.
pub fn generate<S: Scalar>(
    spec: &PopulationSpec<S>,
    items: &[ItemRecord],
) -> Result<Vec<RespondentRecord>> {
    if spec.n_respondents == 0 {
        return Err(Error::InvalidSpec(
            "a population needs at least one respondent".to_string(),
        ));
    }
    validate_kind(&spec.kind, items.len())?;

    let width = spec.n_respondents.to_string().len().max(4);
    let id_stem = match &spec.architecture {
        Some(arch) => format!("{}-{}", spec.population, arch),
        None => spec.population.clone(),
    };
    let records = (0..spec.n_respondents)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[j as u64]));
            let mut record =
                RespondentRecord::new(format!("{id_stem}-{j:0width$}"), &spec.population);
            record.architecture = spec.architecture.clone();
            let kind = match &spec.kind {
                PopulationKind::BadFaithMix { components } => {
                    let draw = S::from_f64_lossy(rng.random::<f64>());
                    let mut acc = S::zero();
                    let mut chosen = &components[components.len() - 1].kind;
                    for component in components {
                        acc = acc + component.weight;
                        if draw < acc {
                            chosen = &component.kind;
                            break;
                        }
                    }
                    chosen
                }
                other => other,
            };
            answer_items(kind, items, &mut rng, &mut record);
            record
        })
        .collect();
    Ok(records)
}

/// Block-constant distance matrix with a zero diagonal: `d_within` inside
/// each block, `d_cross` between blocks. The planted partition is the
/// ground truth for clustering tests.
pub fn planted_distance<S: Scalar>(
    blocks: &[usize],
    d_within: S,
    d_cross: S,
) -> Result<DistanceMatrix<S>> {
    if blocks.is_empty() || blocks.contains(&0) {
        return Err(Error::InvalidSpec(
            "block sizes must be nonempty and positive".to_string(),
        ));
    }
    let two = S::from_f64_lossy(2.0);
    for &d in &[d_within, d_cross] {
        if !d.is_finite() || d < S::zero() || d > two {
            return Err(Error::InvalidParameter(format!(
                "distances must lie in [0, 2], got {d}"
            )));
        }
    }
    if d_within >= d_cross {
        return Err(Error::InvalidParameter(format!(
            "within-block distance {d_within} must be below cross-block {d_cross}"
        )));
    }

    let n: usize = blocks.iter().sum();
    let block_of: Vec<usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(index, &size)| std::iter::repeat_n(index, size))
        .collect();
    let item_ids: Vec<String> = (0..n).map(|i| format!("item{i:03}")).collect();
    let mut d = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i * n + j] = if block_of[i] == block_of[j] {
                    d_within
                } else {
                    d_cross
                };
            }
        }
    }
    DistanceMatrix::new(item_ids, d)
}

/// Ground-truth behavior of a generated worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerRole {
    HighAbility,
    LowAbility,
    Spammer,
    Duplicate,
}

impl WorkerRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            WorkerRole::HighAbility => "high_ability",
            WorkerRole::LowAbility => "low_ability",
            WorkerRole::Spammer => "spammer",
            WorkerRole::Duplicate => "duplicate",
        }
    }
}

/// Role assignment for one generated worker, kept out-of-band from the
/// respondent record so screening cannot read the answer key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRecord {
    pub respondent_id: String,
    pub role: WorkerRole,
}

/// Composition of a synthetic crowd-worker pool.
///
/// Good-faith workers (high or low ability) answer through the forward model
/// at a fixed θ and write varied justifications; spammers guess uniformly
/// and paste the same one-word justification everywhere; duplicates resubmit
/// under a high-ability worker's identity key and are appended after all
/// originals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerPoolSpec<S> {
    pub population: String,
    pub n_high: usize,
    pub n_low: usize,
    pub n_spammer: usize,
    pub n_duplicate: usize,
    pub theta_high: S,
    pub theta_low: S,
    /// Forward-model parameters aligned with the item list (attention checks
    /// included).
    pub item_params: Vec<ItemParams<S>>,
    pub seed: u64,
}

const ROLE_STREAM_HIGH: u64 = 0;
const ROLE_STREAM_LOW: u64 = 1;
const ROLE_STREAM_SPAMMER: u64 = 2;
const ROLE_STREAM_DUPLICATE: u64 = 3;

/// Generate a worker pool plus its ground-truth roles.
pub fn generate_worker_pool<S: Scalar>(
    spec: &WorkerPoolSpec<S>,
    items: &[ItemRecord],
) -> Result<(Vec<RespondentRecord>, Vec<RoleRecord>)> {
    if spec.item_params.len() != items.len() {
        return Err(Error::LengthMismatch(spec.item_params.len(), items.len()));
    }
    if spec.n_duplicate > 0 && spec.n_high == 0 {
        return Err(Error::InvalidSpec(
            "duplicates resubmit high-ability identities; set n_high ≥ 1".to_string(),
        ));
    }
    if !spec.theta_high.is_finite() || !spec.theta_low.is_finite() {
        return Err(Error::InvalidSpec(
            "worker abilities must be finite".to_string(),
        ));
    }

    let mut respondents = Vec::new();
    let mut roles = Vec::new();

    for k in 0..spec.n_high {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[ROLE_STREAM_HIGH, k as u64]));
        let id = format!("{}-h{k:03}", spec.population);
        let mut record = good_faith_record(&id, spec, spec.theta_high, items, &mut rng);
        record.identity_key = Some(format!("ip-h{k:03}"));
        respondents.push(record);
        roles.push(RoleRecord {
            respondent_id: id,
            role: WorkerRole::HighAbility,
        });
    }
    for k in 0..spec.n_low {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[ROLE_STREAM_LOW, k as u64]));
        let id = format!("{}-l{k:03}", spec.population);
        let mut record = good_faith_record(&id, spec, spec.theta_low, items, &mut rng);
        record.identity_key = Some(format!("ip-l{k:03}"));
        respondents.push(record);
        roles.push(RoleRecord {
            respondent_id: id,
            role: WorkerRole::LowAbility,
        });
    }
    for k in 0..spec.n_spammer {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[ROLE_STREAM_SPAMMER, k as u64]));
        let id = format!("{}-s{k:03}", spec.population);
        let mut record = RespondentRecord::new(&id, &spec.population);
        record.identity_key = Some(format!("ip-s{k:03}"));
        for item in items {
            let label = Label::ALL[rng.random_range(0..Label::ALL.len())];
            record.responses.insert(item.item_id.clone(), label);
            record
                .justifications
                .insert(item.item_id.clone(), "good".to_string());
        }
        respondents.push(record);
        roles.push(RoleRecord {
            respondent_id: id,
            role: WorkerRole::Spammer,
        });
    }
    // Duplicates go last so the keep-first rule favors the original.
    for k in 0..spec.n_duplicate {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[ROLE_STREAM_DUPLICATE, k as u64]));
        let id = format!("{}-d{k:03}", spec.population);
        let mut record = good_faith_record(&id, spec, spec.theta_high, items, &mut rng);
        record.identity_key = Some(format!("ip-h{:03}", k % spec.n_high));
        respondents.push(record);
        roles.push(RoleRecord {
            respondent_id: id,
            role: WorkerRole::Duplicate,
        });
    }

    Ok((respondents, roles))
}

/// One good-faith submission: forward-model answers at fixed θ plus a
/// distinct multi-word justification per item.
fn good_faith_record<S: Scalar>(
    id: &str,
    spec: &WorkerPoolSpec<S>,
    theta: S,
    items: &[ItemRecord],
    rng: &mut ChaCha8Rng,
) -> RespondentRecord {
    let mut record = RespondentRecord::new(id, &spec.population);
    for (item, params) in items.iter().zip(&spec.item_params) {
        let p = prob_correct(params, theta).to_f64().unwrap_or(0.0);
        let label = if rng.random::<f64>() < p {
            item.gold_label
        } else {
            wrong_label(item.gold_label, rng)
        };
        record.responses.insert(item.item_id.clone(), label);
        record.justifications.insert(
            item.item_id.clone(),
            format!("marked {} after weighing {} on its own terms", label.as_str(), item.item_id),
        );
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster;
    use crate::corpus::{score, Selector};
    use crate::ctt;
    use approx::assert_abs_diff_eq;

    fn test_items(n: usize, gold: Label) -> Vec<ItemRecord> {
        (0..n)
            .map(|i| ItemRecord {
                item_id: format!("q{i:02}"),
                category: "PS".to_string(),
                premise: String::new(),
                hypothesis: String::new(),
                gold_label: gold,
                is_attention_check: false,
            })
            .collect()
    }

    fn irt_spec(n: usize, mean: f64, sd: f64, b: &[f64], seed: u64) -> PopulationSpec<f64> {
        PopulationSpec {
            population: "sim".to_string(),
            architecture: None,
            n_respondents: n,
            kind: PopulationKind::Irt {
                theta_mean: mean,
                theta_sd: sd,
                item_params: b.iter().map(|&bi| ItemParams::rasch(bi)).collect(),
            },
            seed,
        }
    }

    #[test]
    fn random_guessers_land_near_one_third() {
        let items = test_items(1, Label::Entailment);
        let spec = PopulationSpec::<f64> {
            population: "guess".to_string(),
            architecture: None,
            n_respondents: 10_000,
            kind: PopulationKind::RandomGuess,
            seed: 11,
        };
        let respondents = generate(&spec, &items).unwrap();
        let correct = respondents
            .iter()
            .filter(|r| r.responses["q00"] == Label::Entailment)
            .count();
        let rate = correct as f64 / 10_000.0;
        let sigma = ((1.0 / 3.0) * (2.0 / 3.0) / 10_000.0f64).sqrt();
        assert!((rate - 1.0 / 3.0).abs() < 3.0 * sigma, "rate = {rate}");
    }

    #[test]
    fn fixed_midpoint_ability_scores_half() {
        let items = test_items(1, Label::Contradiction);
        let spec = irt_spec(10_000, 0.0, 0.0, &[0.0], 13);
        let respondents = generate(&spec, &items).unwrap();
        let correct = respondents
            .iter()
            .filter(|r| r.responses["q00"] == Label::Contradiction)
            .count();
        let rate = correct as f64 / 10_000.0;
        let sigma = (0.25 / 10_000.0f64).sqrt();
        assert!((rate - 0.5).abs() < 3.0 * sigma, "rate = {rate}");
    }

    #[test]
    fn standard_normal_ability_on_symmetric_item_scores_half() {
        let items = test_items(1, Label::Neutral);
        let spec = irt_spec(10_000, 0.0, 1.0, &[0.0], 17);
        let respondents = generate(&spec, &items).unwrap();
        let correct = respondents
            .iter()
            .filter(|r| r.responses["q00"] == Label::Neutral)
            .count();
        let rate = correct as f64 / 10_000.0;
        let sigma = (0.25 / 10_000.0f64).sqrt();
        assert!((rate - 0.5).abs() < 3.0 * sigma, "rate = {rate}");
    }

    #[test]
    fn constant_label_hits_matching_gold_only() {
        let mut items = test_items(1, Label::Entailment);
        items.push(ItemRecord {
            item_id: "q01".to_string(),
            category: "PS".to_string(),
            premise: String::new(),
            hypothesis: String::new(),
            gold_label: Label::Neutral,
            is_attention_check: false,
        });
        let spec = PopulationSpec::<f64> {
            population: "const".to_string(),
            architecture: None,
            n_respondents: 25,
            kind: PopulationKind::ConstantLabel {
                label: Label::Entailment,
            },
            seed: 5,
        };
        let respondents = generate(&spec, &items).unwrap();
        let matrix = score(&items, &respondents).unwrap();
        let slice = matrix.slice(&Selector::default()).unwrap();
        let difficulty = ctt::difficulty::<f64>(&matrix, &slice, "PS").unwrap();
        assert_eq!(difficulty.values, vec![1.0, 0.0]);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let items = test_items(6, Label::Entailment);
        let spec = irt_spec(40, 0.3, 1.0, &[0.0; 6], 99);
        let a = generate(&spec, &items).unwrap();
        let b = generate(&spec, &items).unwrap();
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.seed = 100;
        assert_ne!(generate(&other, &items).unwrap(), a);
    }

    #[test]
    fn output_passes_corpus_scoring() {
        let items = test_items(5, Label::Contradiction);
        let spec = irt_spec(30, 0.0, 1.0, &[-1.0, -0.5, 0.0, 0.5, 1.0], 7);
        let respondents = generate(&spec, &items).unwrap();
        let matrix = score(&items, &respondents).unwrap();
        assert_eq!(matrix.respondents().len(), 30);
    }

    #[test]
    fn misaligned_parameter_list_is_rejected() {
        let items = test_items(3, Label::Entailment);
        let spec = irt_spec(10, 0.0, 1.0, &[0.0, 0.0], 1);
        assert!(matches!(
            generate(&spec, &items).unwrap_err(),
            Error::LengthMismatch(2, 3)
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let items = test_items(2, Label::Entailment);
        let mut spec = irt_spec(0, 0.0, 1.0, &[0.0, 0.0], 1);
        assert!(matches!(
            generate(&spec, &items).unwrap_err(),
            Error::InvalidSpec(_)
        ));
        spec = irt_spec(5, 0.0, -1.0, &[0.0, 0.0], 1);
        assert!(matches!(
            generate(&spec, &items).unwrap_err(),
            Error::InvalidSpec(_)
        ));
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let items = test_items(2, Label::Entailment);
        let bad = PopulationSpec::<f64> {
            population: "mix".to_string(),
            architecture: None,
            n_respondents: 5,
            kind: PopulationKind::BadFaithMix {
                components: vec![
                    MixComponent {
                        weight: 0.5,
                        kind: PopulationKind::RandomGuess,
                    },
                    MixComponent {
                        weight: 0.6,
                        kind: PopulationKind::ConstantLabel {
                            label: Label::Neutral,
                        },
                    },
                ],
            },
            seed: 3,
        };
        assert!(matches!(
            generate(&bad, &items).unwrap_err(),
            Error::InvalidSpec(_)
        ));
    }

    #[test]
    fn mixture_blends_component_rates() {
        // Half guess (1/3 correct), half constant-entailment (correct on the
        // entailment-gold item): expected rate 2/3.
        let items = test_items(1, Label::Entailment);
        let spec = PopulationSpec::<f64> {
            population: "mix".to_string(),
            architecture: None,
            n_respondents: 10_000,
            kind: PopulationKind::BadFaithMix {
                components: vec![
                    MixComponent {
                        weight: 0.5,
                        kind: PopulationKind::RandomGuess,
                    },
                    MixComponent {
                        weight: 0.5,
                        kind: PopulationKind::ConstantLabel {
                            label: Label::Entailment,
                        },
                    },
                ],
            },
            seed: 23,
        };
        let respondents = generate(&spec, &items).unwrap();
        let rate = respondents
            .iter()
            .filter(|r| r.responses["q00"] == Label::Entailment)
            .count() as f64
            / 10_000.0;
        let sigma = ((2.0 / 3.0) * (1.0 / 3.0) / 10_000.0f64).sqrt();
        assert!((rate - 2.0 / 3.0).abs() < 3.0 * sigma + 0.01, "rate = {rate}");
    }

    #[test]
    fn planted_blocks_have_exact_structure() {
        let d = planted_distance(&[2, 2], 0.0f64, 2.0).unwrap();
        assert_eq!(d.n(), 4);
        assert_eq!(d.get(0, 1), 0.0);
        assert_eq!(d.get(2, 3), 0.0);
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(1, 3), 2.0);

        let d = planted_distance(&[5], 0.3f64, 1.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { 0.0 } else { 0.3 };
                assert_eq!(d.get(i, j), expected);
            }
        }
    }

    #[test]
    fn planted_three_block_silhouette_matches_closed_form() {
        let d = planted_distance(&[3, 3, 3], 0.1f64, 1.5).unwrap();
        let labels = vec![0, 0, 0, 1, 1, 1, 2, 2, 2];
        let s = cluster::silhouette(&d, &labels).unwrap();
        // Every point: a = 0.1, b = 1.5 → s = (1.5 − 0.1)/1.5 = 14/15.
        assert_abs_diff_eq!(s, 14.0 / 15.0, epsilon = 1e-12);
    }

    #[test]
    fn planted_distance_validates_inputs() {
        assert!(planted_distance::<f64>(&[], 0.0, 1.0).is_err());
        assert!(planted_distance::<f64>(&[2, 0], 0.0, 1.0).is_err());
        assert!(planted_distance(&[2, 2], 1.0f64, 0.5).is_err());
        assert!(planted_distance(&[2, 2], -0.1f64, 0.5).is_err());
        assert!(planted_distance(&[2, 2], 0.5f64, 2.5).is_err());
    }

    fn pool_spec(seed: u64) -> (WorkerPoolSpec<f64>, Vec<ItemRecord>) {
        let items = test_items(15, Label::Entailment);
        let spec = WorkerPoolSpec {
            population: "pool".to_string(),
            n_high: 4,
            n_low: 3,
            n_spammer: 3,
            n_duplicate: 2,
            theta_high: 1.0,
            theta_low: -1.0,
            item_params: vec![ItemParams::rasch(0.0); 15],
            seed,
        };
        (spec, items)
    }

    #[test]
    fn worker_pool_layout_and_roles() {
        let (spec, items) = pool_spec(41);
        let (respondents, roles) = generate_worker_pool(&spec, &items).unwrap();
        assert_eq!(respondents.len(), 12);
        assert_eq!(roles.len(), 12);
        for (r, role) in respondents.iter().zip(&roles) {
            assert_eq!(r.respondent_id, role.respondent_id);
            assert!(r.identity_key.is_some());
            assert_eq!(r.responses.len(), 15);
        }
        // Duplicates come last and reuse high-ability identity keys.
        let dup: Vec<_> = roles
            .iter()
            .enumerate()
            .filter(|(_, r)| r.role == WorkerRole::Duplicate)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(dup, vec![10, 11]);
        assert_eq!(respondents[10].identity_key, respondents[0].identity_key);
        assert_eq!(respondents[11].identity_key, respondents[1].identity_key);
    }

    #[test]
    fn spammers_write_constant_one_word_justifications() {
        let (spec, items) = pool_spec(43);
        let (respondents, roles) = generate_worker_pool(&spec, &items).unwrap();
        for (r, role) in respondents.iter().zip(&roles) {
            match role.role {
                WorkerRole::Spammer => {
                    assert!(r.justifications.values().all(|j| j == "good"));
                }
                _ => {
                    let unique: std::collections::BTreeSet<_> =
                        r.justifications.values().collect();
                    assert_eq!(unique.len(), 15, "good-faith justifications vary");
                    assert!(r.justifications.values().all(|j| j.trim().len() >= 5));
                }
            }
        }
    }

    #[test]
    fn low_ability_rate_matches_forward_model() {
        let items = test_items(15, Label::Entailment);
        let spec = WorkerPoolSpec {
            population: "pool".to_string(),
            n_high: 0,
            n_low: 200,
            n_spammer: 0,
            n_duplicate: 0,
            theta_high: 1.0,
            theta_low: -1.0,
            item_params: vec![ItemParams::rasch(0.0); 15],
            seed: 47,
        };
        let (respondents, _) = generate_worker_pool(&spec, &items).unwrap();
        let trials = 200.0 * 15.0;
        let correct: usize = respondents
            .iter()
            .map(|r| {
                r.responses
                    .values()
                    .filter(|&&l| l == Label::Entailment)
                    .count()
            })
            .sum();
        let p = 1.0 / (1.0 + 1.0f64.exp()); // σ(−1)
        let sigma = (p * (1.0 - p) / trials).sqrt();
        let rate = correct as f64 / trials;
        assert!((rate - p).abs() < 3.0 * sigma, "rate = {rate}, p = {p}");
    }

    #[test]
    fn duplicates_require_an_original() {
        let (mut spec, items) = pool_spec(1);
        spec.n_high = 0;
        assert!(matches!(
            generate_worker_pool(&spec, &items).unwrap_err(),
            Error::InvalidSpec(_)
        ));
    }

    #[test]
    fn worker_pool_is_deterministic() {
        let (spec, items) = pool_spec(53);
        let a = generate_worker_pool(&spec, &items).unwrap();
        let b = generate_worker_pool(&spec, &items).unwrap();
        assert_eq!(a, b);
    }
}
