//! Benchmark networks: birth-death, multi-state bursting gene, compartmental
//! gene expression, repressilator and the time-varying IL1beta model.

use super::definition::{
    InitialState, LinearTermDef, ModelDefinition, ParameterDef, PropensityDef, ReactionDef,
    SignalDef, MODEL_FORMAT_VERSION,
};
use super::{PriorSpec, ReactionNetwork};

/// A compiled benchmark together with its definition and reference parameters.
#[derive(Debug, Clone)]
pub struct BenchmarkModel {
    pub definition: ModelDefinition,
    pub network: ReactionNetwork,
    pub prior: PriorSpec,
    /// Reference ("true") parameters in log10 space.
    pub truth: Vec<f64>,
}

impl BenchmarkModel {
    fn from_definition(definition: ModelDefinition) -> Self {
        let network = definition.network().expect("benchmark network is valid");
        let prior = definition.prior().expect("benchmark prior is valid");
        let truth = definition
            .reference_values()
            .expect("benchmark has reference values");
        BenchmarkModel {
            definition,
            network,
            prior,
            truth,
        }
    }
}

fn p(name: &str, prior_mean: f64, prior_sd: f64, value: f64) -> ParameterDef {
    ParameterDef {
        name: name.into(),
        prior_mean,
        prior_sd,
        value: Some(value),
    }
}

fn mass_action(name: &str, n: usize, from: &[usize], to: &[usize], rate: &str) -> ReactionDef {
    reaction(
        name,
        n,
        from,
        to,
        PropensityDef::MassAction { rate: rate.into() },
    )
}

fn reaction(name: &str, n: usize, from: &[usize], to: &[usize], propensity: PropensityDef) -> ReactionDef {
    let mut reactants = vec![0; n];
    let mut products = vec![0; n];
    for &i in from {
        reactants[i] += 1;
    }
    for &i in to {
        products[i] += 1;
    }
    ReactionDef {
        name: name.into(),
        reactants,
        products,
        propensity,
    }
}

/// `0 -> X` at rate k, `X -> 0` at rate gamma*x; truth k = 10, gamma = 1.
pub fn birth_death() -> BenchmarkModel {
    BenchmarkModel::from_definition(ModelDefinition {
        format_version: MODEL_FORMAT_VERSION,
        name: "birth_death".into(),
        species: vec!["X".into()],
        parameters: vec![p("k", 0.8, 0.5, 1.0), p("gamma", 0.2, 0.5, 0.0)],
        reactions: vec![
            mass_action("birth", 1, &[], &[0], "k"),
            mass_action("death", 1, &[0], &[], "gamma"),
        ],
        initial: vec![InitialState {
            state: vec![0],
            probability: 1.0,
        }],
        observed: None,
    })
}

/// Gene with `n_states` states (G0 silent, G1..G{n-1} transcribing) and a
/// single RNA species. Gene states are hidden; only RNA is observed.
///
/// Parameters, in order: `kon_i` (G{i-1} -> G{i}), `koff_i` (G{i} -> G{i-1}),
/// `r_i` (transcription from G{i}) for i = 1..n-1, then `gamma`.
pub fn bursting_gene(n_states: usize) -> BenchmarkModel {
    assert!(n_states >= 2, "a bursting gene needs at least two states");
    let n = n_states + 1;
    let rna = n_states;
    let mut species: Vec<String> = (0..n_states).map(|i| format!("G{i}")).collect();
    species.push("RNA".into());

    // Reference values for the 2- and 3-state variants; longer chains reuse
    // the last entry.
    let kon = [-0.6, -0.3];
    let koff = [-0.2, -0.5];
    let r = [1.1, 1.4];
    let pick = |v: &[f64], i: usize| v[i.min(v.len() - 1)];

    let mut parameters = Vec::new();
    let mut reactions = Vec::new();
    for i in 1..n_states {
        let name = format!("kon{i}");
        let truth = pick(&kon, i - 1);
        parameters.push(p(&name, truth + 0.25, 0.5, truth));
        reactions.push(mass_action(&format!("G{}_to_G{i}", i - 1), n, &[i - 1], &[i], &name));
    }
    for i in 1..n_states {
        let name = format!("koff{i}");
        let truth = pick(&koff, i - 1);
        parameters.push(p(&name, truth - 0.2, 0.5, truth));
        reactions.push(mass_action(&format!("G{i}_to_G{}", i - 1), n, &[i], &[i - 1], &name));
    }
    for i in 1..n_states {
        let name = format!("r{i}");
        let truth = pick(&r, i - 1);
        parameters.push(p(&name, truth - 0.2, 0.5, truth));
        reactions.push(mass_action(&format!("transcription_G{i}"), n, &[i], &[i, rna], &name));
    }
    parameters.push(p("gamma", 0.2, 0.5, 0.0));
    reactions.push(mass_action("decay", n, &[rna], &[], "gamma"));

    let mut x0 = vec![0; n];
    x0[0] = 1;
    BenchmarkModel::from_definition(ModelDefinition {
        format_version: MODEL_FORMAT_VERSION,
        name: format!("bursting_gene_{n_states}"),
        species,
        parameters,
        reactions,
        initial: vec![InitialState {
            state: x0,
            probability: 1.0,
        }],
        observed: Some(vec!["RNA".into()]),
    })
}

/// Compartmental multi-state gene expression with nuclear and cytoplasmic
/// RNA (transport `k_trans`, cytoplasmic decay `gamma`).
pub fn compartmental_gene(n_states: usize) -> BenchmarkModel {
    assert!(n_states >= 2);
    let n = n_states + 2;
    let nuc = n_states;
    let cyt = n_states + 1;
    let mut species: Vec<String> = (0..n_states).map(|i| format!("G{i}")).collect();
    species.push("RNA_nuc".into());
    species.push("RNA_cyt".into());
    let mut parameters = Vec::new();
    let mut reactions = Vec::new();
    for i in 1..n_states {
        let name = format!("kon{i}");
        parameters.push(p(&name, -0.5, 0.5, -0.7));
        reactions.push(mass_action(&format!("G{}_to_G{i}", i - 1), n, &[i - 1], &[i], &name));
    }
    for i in 1..n_states {
        let name = format!("koff{i}");
        parameters.push(p(&name, -0.5, 0.5, -0.3));
        reactions.push(mass_action(&format!("G{i}_to_G{}", i - 1), n, &[i], &[i - 1], &name));
    }
    for i in 1..n_states {
        let name = format!("r{i}");
        parameters.push(p(&name, 0.8, 0.5, 1.0));
        reactions.push(mass_action(&format!("transcription_G{i}"), n, &[i], &[i, nuc], &name));
    }
    parameters.push(p("k_trans", 0.0, 0.5, 0.3));
    reactions.push(mass_action("transport", n, &[nuc], &[cyt], "k_trans"));
    parameters.push(p("gamma", -0.3, 0.5, -0.5));
    reactions.push(mass_action("decay", n, &[cyt], &[], "gamma"));
    let mut x0 = vec![0; n];
    x0[0] = 1;
    BenchmarkModel::from_definition(ModelDefinition {
        format_version: MODEL_FORMAT_VERSION,
        name: format!("compartmental_gene_{n_states}"),
        species,
        parameters,
        reactions,
        initial: vec![InitialState {
            state: x0,
            probability: 1.0,
        }],
        observed: Some(vec!["RNA_nuc".into(), "RNA_cyt".into()]),
    })
}

/// Three-gene repressilator with Hill-type repression.
///
/// Prior means are log10 of 10 for the `k` parameters and log10 of 0.1 for the
/// rest, all with standard deviation 0.3.
pub fn repressilator() -> BenchmarkModel {
    let names = ["TetR", "lcI", "LacI"];
    // (k, gamma, a, b) per gene, linear units
    let truth = [[10.0, 0.01, 0.1, 2.0], [7.5, 0.02, 0.01, 2.5], [10.0, 0.05, 0.05, 3.0]];
    // gene i is repressed by species (i + 2) % 3
    let mut parameters = Vec::new();
    let mut reactions = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        let k = format!("k{i}");
        let g = format!("gamma{i}");
        let a = format!("a{i}");
        let b = format!("b{i}");
        parameters.push(p(&k, 1.0, 0.3, f64::log10(t[0])));
        parameters.push(p(&g, -1.0, 0.3, f64::log10(t[1])));
        parameters.push(p(&a, -1.0, 0.3, f64::log10(t[2])));
        parameters.push(p(&b, -1.0, 0.3, f64::log10(t[3])));
        reactions.push(reaction(
            &format!("{}_birth", names[i]),
            3,
            &[],
            &[i],
            PropensityDef::Hill {
                numerator: k,
                scale: a,
                exponent: b,
                regulator: names[(i + 2) % 3].into(),
            },
        ));
        reactions.push(mass_action(&format!("{}_decay", names[i]), 3, &[i], &[], &g));
    }
    BenchmarkModel::from_definition(ModelDefinition {
        format_version: MODEL_FORMAT_VERSION,
        name: "repressilator".into(),
        species: names.iter().map(|s| s.to_string()).collect(),
        parameters,
        reactions,
        initial: vec![InitialState {
            state: vec![0, 0, 0],
            probability: 1.0,
        }],
        observed: None,
    })
}

/// Three-state IL1beta transcription model with a signal-modulated
/// deactivation rate. Two gene copies start in G0; RNA is observed.
pub fn il1beta() -> BenchmarkModel {
    let parameters = vec![
        p("r1", -2.0, 0.33, -2.48),
        p("r2", -2.0, 0.33, -2.00),
        p("k01", -3.0, 0.33, -3.26),
        p("a10", -2.0, 0.33, -1.31),
        p("b10", 3.0, 0.33, 3.04),
        p("k12", -3.0, 0.33, -3.08),
        p("k21", -2.0, 0.33, -1.25),
        p("alpha1", -3.0, 0.33, -3.60),
        p("alpha2", 0.0, 0.33, 0.71),
        p("gamma", -4.0, 0.33, -4.56),
        p("T0", 4.0, 0.33, 5.36),
    ];
    let n = 4;
    let reactions = vec![
        mass_action("G0_to_G1", n, &[0], &[1], "k01"),
        mass_action("G1_to_G2", n, &[1], &[2], "k12"),
        mass_action("G2_to_G1", n, &[2], &[1], "k21"),
        reaction(
            "G1_to_G0",
            n,
            &[1],
            &[0],
            PropensityDef::TimeVaryingMax {
                base: "a10".into(),
                signal_coeff: "b10".into(),
                signal: SignalDef {
                    r1: "r1".into(),
                    r2: "r2".into(),
                    t0: "T0".into(),
                },
            },
        ),
        reaction(
            "transcription",
            n,
            &[],
            &[3],
            PropensityDef::Linear {
                terms: vec![
                    LinearTermDef {
                        param: "alpha1".into(),
                        species: "G1".into(),
                    },
                    LinearTermDef {
                        param: "alpha2".into(),
                        species: "G2".into(),
                    },
                ],
            },
        ),
        mass_action("decay", n, &[3], &[], "gamma"),
    ];
    BenchmarkModel::from_definition(ModelDefinition {
        format_version: MODEL_FORMAT_VERSION,
        name: "il1beta".into(),
        species: vec!["G0".into(), "G1".into(), "G2".into(), "RNA".into()],
        parameters,
        reactions,
        initial: vec![InitialState {
            state: vec![2, 0, 0, 0],
            probability: 1.0,
        }],
        observed: Some(vec!["RNA".into()]),
    })
}
