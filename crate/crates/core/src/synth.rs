//! Synthetic arXiv-like metadata and a stand-in sentence encoder.
//!
//! The generator draws abstracts from per-category word pools with Zipfian
//! weights. Some pools are shared between subjects (machine learning under
//! both cs and stat, control under eess and math, ...), records get
//! cross-listed, and each abstract repeats a handful of focus words, so the
//! label boundaries are blurry in the way real metadata is. Nothing here is
//! meant to match arXiv statistics beyond the broad shape: eight top-level
//! subjects with a long tail, abstracts of roughly 120-200 words.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::ArticleRecord;
use crate::error::{Error, Result};
use crate::features::{DenseVector, EmbeddingSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_records: usize,
    pub seed: u64,
    /// Probability that a record carries a second category.
    pub cross_list_rate: f64,
    pub mean_words: f64,
    pub sd_words: f64,
    pub first_year: i32,
    pub last_year: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_records: 20_000,
            seed: 1,
            cross_list_rate: 0.4,
            mean_words: 155.0,
            sd_words: 40.0,
            first_year: 2007,
            last_year: 2024,
        }
    }
}

const ACADEMIC: &[&str] = &[
    "method", "result", "propose", "show", "approach", "paper", "study", "analysis", "model",
    "problem", "new", "based", "performance", "framework", "present", "provide", "novel",
    "demonstrate", "obtain", "general", "case", "previous", "recent", "important", "large",
    "small", "number", "different", "several", "various", "given", "first", "second", "work",
    "also", "use", "using", "used", "results", "methods", "models", "approaches", "studies",
    "problems", "existing", "significant", "effect", "effects", "property", "properties",
    "structure", "condition", "conditions", "order", "term", "terms", "class", "set", "setting",
    "framework", "experiment", "experiments", "numerical", "theoretical", "analytical", "simple",
    "efficient", "accurate", "improve", "improved", "investigate", "consider", "describe",
    "introduce", "develop", "derive", "establish", "finally", "moreover", "furthermore",
    "however", "particular", "specific", "standard", "main", "key", "well", "known", "high",
    "low", "level", "range", "type", "form", "role", "application", "applications", "evidence",
    "quality", "scale", "understanding", "insight", "question", "questions", "impact",
];

const FUNCTION: &[&str] = &[
    "the", "of", "and", "in", "to", "a", "we", "is", "that", "for", "this", "with", "are", "on",
    "by", "as", "an", "be", "from", "which", "our", "these", "it", "can", "such", "at", "its",
    "their", "between", "both", "into", "under", "than", "when", "while", "where", "has", "have",
    "been", "not", "only", "more", "most", "each", "other", "over", "all", "how", "also",
];

/// Top-level subjects with their share of primary listings.
const SUBJECTS: &[(&str, f64)] = &[
    ("cs", 0.30),
    ("physics", 0.25),
    ("math", 0.21),
    ("stat", 0.07),
    ("q-bio", 0.05),
    ("eess", 0.05),
    ("q-fin", 0.035),
    ("econ", 0.035),
];

/// (category code, subject, pool, share within subject)
const CATEGORIES: &[(&str, &str, &str, f64)] = &[
    ("cs.LG", "cs", "learning", 0.30),
    ("cs.CV", "cs", "vision", 0.18),
    ("cs.CL", "cs", "language", 0.14),
    ("cs.DC", "cs", "systems", 0.10),
    ("cs.DS", "cs", "algorithms", 0.10),
    ("cs.IT", "cs", "signal", 0.07),
    ("cs.NE", "cs", "neuro", 0.03),
    ("cs.SY", "cs", "control", 0.04),
    ("cs.GT", "cs", "economics", 0.04),
    ("cond-mat.str-el", "physics", "condensed", 0.28),
    ("astro-ph.GA", "physics", "astro", 0.24),
    ("hep-ph", "physics", "hep", 0.16),
    ("quant-ph", "physics", "quantum", 0.15),
    ("gr-qc", "physics", "gravity", 0.09),
    ("math-ph", "physics", "analysis", 0.04),
    ("physics.bio-ph", "physics", "genomics", 0.02),
    ("physics.data-an", "physics", "computation", 0.02),
    ("math.AG", "math", "algebra", 0.18),
    ("math.AP", "math", "analysis", 0.22),
    ("math.DG", "math", "geometry", 0.17),
    ("math.NT", "math", "number", 0.10),
    ("math.PR", "math", "probability", 0.13),
    ("math.OC", "math", "control", 0.08),
    ("math.ST", "math", "inference", 0.08),
    ("math.CO", "math", "algorithms", 0.04),
    ("stat.ML", "stat", "learning", 0.40),
    ("stat.ME", "stat", "methodology", 0.25),
    ("stat.CO", "stat", "computation", 0.12),
    ("stat.TH", "stat", "inference", 0.15),
    ("stat.AP", "stat", "genomics", 0.08),
    ("q-bio.GN", "q-bio", "genomics", 0.40),
    ("q-bio.NC", "q-bio", "neuro", 0.25),
    ("q-bio.PE", "q-bio", "epidemic", 0.25),
    ("q-bio.QM", "q-bio", "inference", 0.10),
    ("eess.SP", "eess", "signal", 0.50),
    ("eess.SY", "eess", "control", 0.35),
    ("eess.IV", "eess", "vision", 0.15),
    ("q-fin.PR", "q-fin", "pricing", 0.50),
    ("q-fin.RM", "q-fin", "pricing", 0.25),
    ("q-fin.ST", "q-fin", "inference", 0.10),
    ("q-fin.EC", "q-fin", "economics", 0.15),
    ("econ.TH", "econ", "economics", 0.50),
    ("econ.EM", "econ", "inference", 0.30),
    ("econ.GN", "econ", "economics", 0.20),
];

/// Subjects a record of the first subject is commonly cross-listed with.
const AFFINITY: &[(&str, &[&str])] = &[
    ("cs", &["stat", "eess", "math"]),
    ("physics", &["math", "q-bio"]),
    ("math", &["physics", "cs", "stat"]),
    ("stat", &["cs", "math", "q-bio"]),
    ("q-bio", &["physics", "stat", "cs"]),
    ("eess", &["cs", "math"]),
    ("q-fin", &["econ", "stat", "math"]),
    ("econ", &["q-fin", "stat", "cs"]),
];

const POOLS: &[(&str, &[&str])] = &[
    ("learning", &[
        "learning", "neural", "network", "training", "gradient", "classifier", "representation",
        "generalization", "supervised", "embedding", "deep", "regularization", "optimizer",
        "benchmark", "accuracy", "dataset", "feature", "kernel", "reinforcement", "policy",
        "reward", "agent", "transformer", "attention", "layer", "adversarial", "robustness",
        "overfitting", "label", "loss", "prediction", "task", "domain", "transfer", "latent",
    ]),
    ("vision", &[
        "image", "pixel", "segmentation", "detection", "camera", "scene", "object", "video",
        "depth", "pose", "visual", "recognition", "resolution", "texture", "rendering",
        "tracking", "annotation", "frame", "shape", "point", "cloud", "convolutional", "views",
        "reconstruction", "illumination", "generative", "diffusion", "style",
    ]),
    ("language", &[
        "language", "text", "word", "sentence", "translation", "corpus", "token", "parsing",
        "dialogue", "speech", "semantic", "syntactic", "answering", "summarization",
        "vocabulary", "lexical", "entity", "grammar", "prompt", "multilingual", "document",
        "retrieval", "reasoning", "instruction", "pretrained", "fluency",
    ]),
    ("systems", &[
        "distributed", "protocol", "server", "latency", "throughput", "cache", "memory",
        "scheduling", "cloud", "storage", "packet", "routing", "consensus", "fault",
        "replication", "processor", "compiler", "hardware", "software", "program",
        "verification", "security", "attack", "encryption", "privacy", "workload", "cluster",
        "energy", "parallel", "blockchain",
    ]),
    ("algorithms", &[
        "algorithm", "complexity", "graph", "vertex", "edge", "approximation", "polynomial",
        "runtime", "hardness", "bound", "query", "tree", "matching", "streaming", "randomized",
        "combinatorial", "search", "sorting", "instance", "optimal", "linear", "time",
        "subgraph", "coloring", "flow", "cut", "lower", "upper",
    ]),
    ("algebra", &[
        "group", "ring", "module", "algebra", "ideal", "field", "representation",
        "homomorphism", "isomorphism", "category", "functor", "cohomology", "commutative",
        "finite", "generated", "invariant", "quotient", "lattice", "polynomial", "scheme",
        "variety", "sheaf", "moduli", "stack", "derived", "motive",
    ]),
    ("analysis", &[
        "function", "space", "operator", "bounded", "inequality", "norm", "convergence",
        "integral", "measure", "sobolev", "estimate", "solution", "equation", "regularity",
        "domain", "boundary", "hilbert", "banach", "spectrum", "derivative", "nonlinear",
        "elliptic", "parabolic", "existence", "uniqueness", "weak", "blow",
    ]),
    ("geometry", &[
        "manifold", "curvature", "surface", "metric", "geodesic", "riemannian", "symplectic",
        "bundle", "projective", "topology", "homotopy", "knot", "dimension", "embedding",
        "conformal", "flow", "singularity", "compact", "hyperbolic", "minimal", "kähler",
        "connection", "isometric",
    ]),
    ("number", &[
        "prime", "integer", "modular", "arithmetic", "zeta", "conjecture", "congruence",
        "diophantine", "elliptic", "curve", "rational", "divisor", "sieve", "character",
        "residue", "galois", "adelic", "automorphic", "height", "torsion",
    ]),
    ("probability", &[
        "random", "walk", "process", "brownian", "martingale", "stochastic", "probability",
        "limit", "theorem", "percolation", "markov", "chain", "ergodic", "distribution",
        "tail", "large", "deviation", "mixing", "branching", "matrix", "eigenvalue",
    ]),
    ("condensed", &[
        "lattice", "phase", "transition", "spin", "magnetic", "electron", "superconducting",
        "topological", "band", "insulator", "crystal", "phonon", "conductivity", "temperature",
        "ferromagnetic", "doping", "quasiparticle", "hubbard", "correlation", "graphene",
        "order", "fermi", "excitation", "pressure",
    ]),
    ("astro", &[
        "galaxy", "star", "stellar", "redshift", "telescope", "luminosity", "halo",
        "accretion", "supernova", "dark", "matter", "emission", "survey", "cluster", "planet",
        "orbit", "mass", "solar", "gas", "disk", "observation", "formation", "spectra",
        "radio", "ray",
    ]),
    ("hep", &[
        "quark", "gluon", "boson", "collider", "neutrino", "gauge", "symmetry", "decay",
        "scattering", "energy", "higgs", "lepton", "hadron", "string", "supersymmetry",
        "anomaly", "coupling", "cross", "section", "detector", "lhc", "standard", "mass",
        "loop", "flavor",
    ]),
    ("quantum", &[
        "quantum", "qubit", "entanglement", "state", "photon", "coherence", "measurement",
        "gate", "circuit", "hamiltonian", "optical", "cavity", "atom", "laser", "decoherence",
        "teleportation", "fidelity", "superposition", "channel", "error", "correction",
        "noise",
    ]),
    ("gravity", &[
        "gravitational", "wave", "spacetime", "einstein", "relativity", "black", "hole",
        "horizon", "metric", "cosmology", "inflation", "curvature", "singularity",
        "perturbation", "cosmological", "scalar", "merger", "detector", "schwarzschild",
    ]),
    ("methodology", &[
        "missing", "imputation", "causal", "treatment", "observational", "longitudinal",
        "clinical", "trial", "censored", "survival", "hazard", "mixed", "spatial", "temporal",
        "forecasting", "series", "covariate", "propensity", "cohort", "confounding",
        "heterogeneity", "outcome",
    ]),
    ("computation", &[
        "sampling", "monte", "carlo", "mcmc", "variational", "approximate", "posterior",
        "importance", "sequential", "particle", "simulation", "sampler", "hamiltonian",
        "gibbs", "proposal", "acceptance", "chain", "computational", "scalable",
    ]),
    ("inference", &[
        "estimator", "likelihood", "bayesian", "posterior", "prior", "inference", "regression",
        "variance", "bias", "sample", "bootstrap", "confidence", "interval", "hypothesis",
        "test", "asymptotic", "consistency", "parameter", "sparse", "lasso", "penalized",
        "selection", "minimax", "rate", "dimensional",
    ]),
    ("genomics", &[
        "gene", "protein", "genome", "sequence", "expression", "cell", "dna", "rna",
        "mutation", "transcription", "regulatory", "pathway", "phylogenetic", "species",
        "evolution", "population", "fitness", "selection", "sequencing", "tissue", "cancer",
        "molecular", "binding",
    ]),
    ("neuro", &[
        "neuron", "brain", "cortex", "synaptic", "spike", "neural", "firing", "activity",
        "cognitive", "memory", "stimulus", "response", "plasticity", "circuit", "recording",
        "cortical", "behavior", "spiking", "dynamics", "population",
    ]),
    ("epidemic", &[
        "epidemic", "infection", "disease", "transmission", "virus", "vaccination", "host",
        "outbreak", "incidence", "ecological", "predator", "prey", "community", "contact",
        "susceptible", "infected", "pandemic", "mortality", "spread",
    ]),
    ("signal", &[
        "signal", "frequency", "filter", "channel", "wireless", "antenna", "mimo",
        "modulation", "noise", "spectrum", "beamforming", "receiver", "transmitter",
        "estimation", "sensing", "compressive", "radar", "audio", "sampling", "coding",
        "capacity", "interference", "user", "rate",
    ]),
    ("control", &[
        "control", "controller", "feedback", "stability", "system", "robust", "trajectory",
        "actuator", "optimal", "dynamics", "linear", "nonlinear", "observer", "grid", "power",
        "voltage", "battery", "vehicle", "constraint", "predictive", "convex", "optimization",
        "lyapunov",
    ]),
    ("pricing", &[
        "option", "pricing", "volatility", "hedging", "asset", "portfolio", "risk", "return",
        "arbitrage", "market", "stock", "price", "trading", "liquidity", "credit", "default",
        "interest", "bond", "investor", "financial", "equity", "derivative", "exposure",
    ]),
    ("economics", &[
        "economic", "policy", "labor", "wage", "welfare", "household", "firm", "consumer",
        "auction", "equilibrium", "incentive", "game", "player", "mechanism", "tax",
        "employment", "trade", "growth", "inflation", "monetary", "income", "inequality",
        "market", "preference", "utility", "panel",
    ]),
];

/// Words every article in a subject leans on regardless of subfield.
const FLAVOR: &[(&str, &[&str])] = &[
    ("cs", &["implementation", "scalable", "architecture", "computational", "efficient", "code", "system", "evaluation"]),
    ("physics", &["experimental", "observed", "measured", "simulation", "energy", "physical", "theory", "regime"]),
    ("math", &["prove", "theorem", "lemma", "proof", "conjecture", "class", "generalize", "explicit"]),
    ("stat", &["estimator", "data", "simulation", "empirical", "statistical", "procedure", "inference"]),
    ("q-bio", &["biological", "organism", "experimental", "mechanism", "clinical", "population"]),
    ("eess", &["engineering", "hardware", "implementation", "signal", "system", "design"]),
    ("q-fin", &["financial", "market", "empirical", "risk", "investor"]),
    ("econ", &["economic", "empirical", "policy", "agents", "data"]),
];

/// Invented terms per pool, so field vocabularies have a long tail of
/// individually weak terms as real ones do.
const EXTRA_PER_POOL: usize = 250;
const BORROWED_PER_POOL: usize = 15;

struct Pool {
    words: Vec<String>,
    weights: WeightedIndex<f64>,
}

impl Pool {
    fn new(base: &[&str], extra: Vec<String>, rng: &mut ChaCha8Rng) -> Pool {
        let mut words: Vec<String> = base.iter().map(|w| w.to_string()).collect();
        // Random ranks for the curated words; invented ones form the tail.
        for i in (1..words.len()).rev() {
            let j = rng.random_range(0..=i);
            words.swap(i, j);
        }
        words.extend(extra);
        let weights: Vec<f64> = (0..words.len()).map(|r| (r as f64 + 2.7).powf(-0.9)).collect();
        Pool {
            weights: WeightedIndex::new(&weights).expect("positive weights"),
            words,
        }
    }

    fn draw<'a>(&'a self, rng: &mut ChaCha8Rng) -> &'a str {
        &self.words[self.weights.sample(rng)]
    }
}

struct Category {
    code: &'static str,
    pool: usize,
}

/// Sampling tables derived from one seed.
pub struct Generator {
    config: SynthConfig,
    subjects: WeightedIndex<f64>,
    categories: Vec<Category>,
    /// Categories sharing a field draw from the same pool.
    pools: Vec<Pool>,
    by_subject: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    academic: Pool,
    flavor: Vec<Pool>,
    function: Pool,
    surnames: Vec<String>,
}

const ONSETS: &[&str] = &["b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "cr", "st", "tr", "pl", "gr", "ch", "sh"];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "io", "ou"];
const CODAS: &[&str] = &["", "n", "r", "l", "s", "x", "m", "nd", "rt"];
const SUFFIXES: &[&str] = &["ic", "al", "ion", "ity", "ator", "ism", "oid", "ene", "ance", "ogy"];

fn invent_word(rng: &mut ChaCha8Rng, suffix: bool) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(NUCLEI.choose(rng).unwrap());
    }
    w.push_str(CODAS.choose(rng).unwrap());
    if suffix {
        w.push_str(SUFFIXES.choose(rng).unwrap());
    }
    w
}

/// Regular plural, or `None` for words where a naive rule would be wrong.
fn pluralize(w: &str) -> Option<String> {
    if w.len() < 4 || w.ends_with("is") || w.ends_with("us") || w.ends_with("ics") || w.ends_with("ss") {
        return None;
    }
    if w.ends_with('s') {
        return None;
    }
    if w.ends_with('x') || w.ends_with("sh") || w.ends_with("ch") {
        return Some(format!("{w}es"));
    }
    if let Some(stem) = w.strip_suffix('y') {
        if !stem.ends_with(['a', 'e', 'o', 'u']) {
            return Some(format!("{stem}ies"));
        }
    }
    Some(format!("{w}s"))
}

impl Generator {
    pub fn new(config: SynthConfig) -> Result<Generator> {
        if config.n_records == 0 {
            return Err(Error::InvalidParameter("n_records must be positive".into()));
        }
        if !(0.0..=1.0).contains(&config.cross_list_rate) {
            return Err(Error::InvalidParameter(format!("cross_list_rate {} outside [0, 1]", config.cross_list_rate)));
        }
        if !(config.mean_words >= 10.0 && config.sd_words >= 0.0) {
            return Err(Error::InvalidParameter("abstract length parameters out of range".into()));
        }
        if config.first_year > config.last_year {
            return Err(Error::InvalidParameter("first_year after last_year".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f_a11);
        let subjects = WeightedIndex::new(SUBJECTS.iter().map(|s| s.1)).expect("positive shares");

        let pools: Vec<Pool> = POOLS
            .iter()
            .map(|&(_, base)| {
                // Borrow a few words from other fields; vocabularies overlap.
                let mut words: Vec<&str> = base.to_vec();
                for _ in 0..BORROWED_PER_POOL {
                    let other = POOLS.choose(&mut rng).unwrap().1;
                    words.push(other.choose(&mut rng).unwrap());
                }
                let tail = (0..EXTRA_PER_POOL)
                    .map(|_| {
                        let suffix = rng.random_bool(0.4);
                        invent_word(&mut rng, suffix)
                    })
                    .collect();
                Pool::new(&words, tail, &mut rng)
            })
            .collect();
        let categories: Vec<Category> = CATEGORIES
            .iter()
            .map(|&(code, _, pool, _)| Category {
                code,
                pool: POOLS.iter().position(|x| x.0 == pool).expect("known pool"),
            })
            .collect();
        let by_subject = SUBJECTS
            .iter()
            .map(|&(name, _)| {
                let members: Vec<usize> = (0..CATEGORIES.len()).filter(|&c| CATEGORIES[c].1 == name).collect();
                let w = WeightedIndex::new(members.iter().map(|&c| CATEGORIES[c].3)).expect("positive shares");
                (members, w)
            })
            .collect();
        let flavor = SUBJECTS
            .iter()
            .map(|&(name, _)| {
                let words = FLAVOR.iter().find(|f| f.0 == name).expect("flavor for subject").1;
                Pool::new(words, Vec::new(), &mut rng)
            })
            .collect();
        let academic = Pool::new(ACADEMIC, Vec::new(), &mut rng);
        let function = {
            let words: Vec<String> = FUNCTION.iter().map(|w| w.to_string()).collect();
            let weights: Vec<f64> = (0..words.len()).map(|r| 1.0 / (r as f64 + 1.0)).collect();
            Pool {
                weights: WeightedIndex::new(&weights).expect("positive weights"),
                words,
            }
        };
        let surnames = (0..400)
            .map(|_| {
                let mut s = invent_word(&mut rng, false);
                s[..1].make_ascii_uppercase();
                s
            })
            .collect();
        Ok(Generator {
            config,
            subjects,
            categories,
            pools,
            by_subject,
            academic,
            flavor,
            function,
            surnames,
        })
    }

    fn pool(&self, category: usize) -> &Pool {
        &self.pools[self.categories[category].pool]
    }

    fn pick_category(&self, subject: usize, rng: &mut ChaCha8Rng) -> usize {
        let (members, w) = &self.by_subject[subject];
        members[w.sample(rng)]
    }

    fn secondary_subject(&self, primary: usize, rng: &mut ChaCha8Rng) -> usize {
        let name = SUBJECTS[primary].0;
        let partners = AFFINITY.iter().find(|a| a.0 == name).expect("affinity row").1;
        let pick = partners.choose(rng).expect("non-empty affinity");
        SUBJECTS.iter().position(|s| s.0 == *pick).expect("known subject")
    }

    /// Content word for one slot of an abstract.
    fn content_word(&self, doc: &DocPlan, rng: &mut ChaCha8Rng) -> String {
        let u: f64 = rng.random();
        let w = if u < 0.38 {
            self.academic.draw(rng).to_string()
        } else if u < 0.43 {
            self.flavor[doc.flavor_subject(rng)].draw(rng).to_string()
        } else if u < 0.53 {
            // off-topic noise
            let c = rng.random_range(0..self.categories.len());
            self.pool(c).draw(rng).to_string()
        } else if doc.secondary.is_some() && u < 0.53 + 0.47 * doc.secondary_share {
            let c = doc.secondary.unwrap();
            self.pool(c).draw(rng).to_string()
        } else if rng.random_bool(0.35) {
            doc.focus.choose(rng).unwrap().clone()
        } else {
            self.pool(doc.primary).draw(rng).to_string()
        };
        if rng.random_bool(0.2) {
            pluralize(&w).unwrap_or(w)
        } else {
            w
        }
    }

    fn abstract_text(&self, doc: &DocPlan, rng: &mut ChaCha8Rng) -> String {
        let normal = Normal::new(self.config.mean_words, self.config.sd_words).expect("valid normal");
        let target = normal.sample(rng).round().clamp(40.0, 400.0) as usize;
        let mut out = String::with_capacity(target * 8);
        let mut written = 0;
        while written < target {
            let len = rng.random_range(9..=24).min(target - written).max(1);
            for i in 0..len {
                let word = if rng.random_bool(0.4) {
                    self.function.draw(rng).to_string()
                } else if rng.random_bool(0.015) {
                    format!("{}", rng.random_range(2..2000))
                } else {
                    self.content_word(doc, rng)
                };
                if i == 0 {
                    let mut c = word.chars();
                    let first = c.next().unwrap();
                    out.extend(first.to_uppercase());
                    out.push_str(c.as_str());
                } else {
                    out.push(' ');
                    out.push_str(&word);
                }
                if i + 1 < len && i > 2 && rng.random_bool(0.06) {
                    out.push(',');
                }
            }
            out.push_str(". ");
            written += len;
        }
        out.trim_end().to_string()
    }

    fn title(&self, doc: &DocPlan, rng: &mut ChaCha8Rng) -> String {
        let n = rng.random_range(4..=9);
        let words: Vec<String> = (0..n)
            .map(|i| {
                let w = if i % 3 == 2 {
                    self.function.draw(rng).to_string()
                } else {
                    self.pool(doc.primary).draw(rng).to_string()
                };
                let mut c = w.chars();
                let first = c.next().unwrap();
                first.to_uppercase().chain(c).collect()
            })
            .collect();
        words.join(" ")
    }

    /// Generates `n_records` records with raw category codes (labels are
    /// left for [`crate::corpus::normalize_labels`]).
    pub fn generate(&self) -> Vec<ArticleRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let years = (self.config.last_year - self.config.first_year + 1) as usize;
        // Later years are busier.
        let year_w = WeightedIndex::new((0..years).map(|y| 1.0 + 0.12 * y as f64)).expect("positive");
        let mut per_month = std::collections::HashMap::<(i32, u32), u32>::new();
        let mut out = Vec::with_capacity(self.config.n_records);
        for _ in 0..self.config.n_records {
            let subject = self.subjects.sample(&mut rng);
            let primary = self.pick_category(subject, &mut rng);
            let secondary = rng
                .random_bool(self.config.cross_list_rate)
                .then(|| {
                    let s = if rng.random_bool(0.8) {
                        self.secondary_subject(subject, &mut rng)
                    } else {
                        subject
                    };
                    (s, self.pick_category(s, &mut rng))
                })
                .filter(|&(_, c)| c != primary);
            let focus = (0..rng.random_range(4..=9))
                .map(|_| self.pool(primary).draw(&mut rng).to_string())
                .collect();
            let doc = DocPlan {
                subject,
                primary,
                secondary: secondary.map(|x| x.1),
                secondary_subject: secondary.map(|x| x.0),
                secondary_share: rng.random_range(0.2..0.8),
                focus,
            };

            let year = self.config.first_year + year_w.sample(&mut rng) as i32;
            let month = rng.random_range(1..=12u32);
            let day = rng.random_range(1..=28u32);
            let seq = per_month.entry((year, month)).or_insert(0);
            *seq += 1;
            let id = format!("{:02}{:02}.{:05}", year.rem_euclid(100), month, seq);

            let n_auth = rng.random_range(1..=6);
            let authors: Vec<String> = (0..n_auth)
                .map(|_| {
                    let initial = (b'A' + rng.random_range(0..26u8)) as char;
                    format!("{initial}. {}", self.surnames.choose(&mut rng).unwrap())
                })
                .collect();

            let mut categories = vec![self.categories[primary].code.to_string()];
            if let Some((_, c)) = secondary {
                categories.push(self.categories[c].code.to_string());
            }
            out.push(ArticleRecord {
                id,
                title: self.title(&doc, &mut rng),
                abstract_text: self.abstract_text(&doc, &mut rng),
                categories,
                date: NaiveDate::from_ymd_opt(year, month, day),
                authors: Some(authors.join(", ")),
                labels: Vec::new(),
                primary: None,
            });
        }
        out
    }
}

struct DocPlan {
    subject: usize,
    primary: usize,
    secondary: Option<usize>,
    secondary_subject: Option<usize>,
    /// Fraction of topical words drawn from the secondary field. Above one
    /// half the listing order disagrees with the content, as happens when
    /// authors pick a primary category for reasons other than topic.
    secondary_share: f64,
    focus: Vec<String>,
}

impl DocPlan {
    fn flavor_subject(&self, rng: &mut ChaCha8Rng) -> usize {
        match self.secondary_subject {
            Some(s) if rng.random_bool(self.secondary_share / 2.0) => s,
            _ => self.subject,
        }
    }
}

pub fn generate(config: &SynthConfig) -> Result<Vec<ArticleRecord>> {
    Ok(Generator::new(config.clone())?.generate())
}

/// Writes records in the arXiv snapshot layout: space-joined categories
/// and `update_date`.
pub fn write_jsonl(records: &[ArticleRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = json!({
            "id": r.id,
            "title": r.title,
            "authors": r.authors,
            "abstract": r.abstract_text,
            "categories": r.categories.join(" "),
            "update_date": r.date.map(|d| d.format("%Y-%m-%d").to_string()),
        });
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Stand-in for a pretrained sentence encoder: the mean of fixed
/// pseudo-random word vectors (seeded by a hash of the word), L2-normalized.
/// It captures word overlap and nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HashEncoder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashEncoder {
    fn default() -> Self {
        HashEncoder { dim: 64, seed: 7 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashEncoder {
    fn word_vector(&self, word: &str, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(word.as_bytes()) ^ self.seed);
        for o in out.iter_mut() {
            *o += rng.random::<f64>() * 2.0 - 1.0;
        }
    }

    pub fn encode(&self, text: &str) -> DenseVector {
        let mut acc = vec![0.0; self.dim];
        let mut n = 0usize;
        for w in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            self.word_vector(&w.to_lowercase(), &mut acc);
            n += 1;
        }
        if n > 0 {
            let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                acc.iter_mut().for_each(|x| *x /= norm);
            }
        }
        DenseVector(acc)
    }

    pub fn encode_records(&self, records: &[ArticleRecord]) -> Result<EmbeddingSet> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("encoder dim must be positive".into()));
        }
        let mut set = EmbeddingSet::new(self.dim);
        for r in records {
            set.insert(r.id.clone(), self.encode(&r.abstract_text))?;
        }
        Ok(set)
    }
}
