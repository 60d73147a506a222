//! Monte Carlo experiments shared by the command line tool and the test
//! suites.
//!
//! Every experiment draws sample `i` from the sub-seed `derive_seed(seed, i)`,
//! runs samples in parallel and aggregates them in index order, so results
//! do not depend on the number of threads. Each report embeds the exact
//! reference values it was compared against.

use std::collections::HashMap;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::automorphism::{haar_at, restrict_to_shadow, RootedAut, TreeAut};
use crate::dynamics::{classify, fixed_tree, fixed_tree_from, offspring_stats, Kind};
use crate::error::{Error, Result};
use crate::oracle::{densify, enumerate_group, DenseAut};
use crate::perm::LocalPerm;
use crate::prf::derive_seed;
use crate::stats::{
    chi_square_gof, offspring_law, proportion_sigma, root_law, survival_prob_rooted,
    survival_prob_rooted_f64, tv_distance, GofResult,
};
use crate::tree::{DirectedEdge, Tree, Vertex};
use crate::words::{
    edge_sphere_traces, in_omega, radius_m, verify_action_properties, Assignment, Letter,
    TraceContext, Word,
};

/// Summary plus one record per sample.
#[derive(Clone, Debug)]
pub struct Outcome<R> {
    pub report: R,
    pub records: Vec<Value>,
}

fn ratio_string(r: &num_rational::BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(base, i)).collect()
}

// ---------------------------------------------------------------------------
// Sampler exactness

#[derive(Clone, Debug)]
pub struct HaarGofConfig {
    pub d: usize,
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HaarGofReport {
    pub d: usize,
    pub depth: usize,
    pub samples: usize,
    pub cells: usize,
    pub counts: Vec<u64>,
    pub gof: GofResult,
    pub tv_distance: f64,
    pub tv_distance_exact: String,
    pub p_threshold: f64,
    pub tv_threshold: f64,
    pub passed: bool,
}

/// Projects Haar samples to the ball of radius `depth` and compares the
/// frequencies with the uniform law on the enumerated finite group.
pub fn haar_gof(cfg: &HaarGofConfig) -> Result<Outcome<HaarGofReport>> {
    let group = enumerate_group(cfg.d, cfg.depth)?;
    let index: HashMap<&DenseAut, usize> = group.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let cells: Vec<usize> = seeds(cfg.seed, cfg.samples)
        .par_iter()
        .map(|&s| {
            let dense = densify(&RootedAut::haar(cfg.d, s), cfg.depth).unwrap();
            index[&dense]
        })
        .collect();
    let mut counts = vec![0u64; group.len()];
    for &c in &cells {
        counts[c] += 1;
    }
    let uniform = 1.0 / group.len() as f64;
    let gof = chi_square_gof(&counts, &vec![uniform; group.len()])?;
    let exact = num_rational::BigRational::new(1.into(), (group.len() as u64).into());
    let tv = tv_distance(&counts, &vec![exact; group.len()])?;
    let tv_f = tv.to_f64().unwrap();
    let passed = gof.p_value > 0.001 && tv_f < 0.02;
    let records = cells
        .iter()
        .enumerate()
        .map(|(i, c)| json!({"sample": i, "seed": derive_seed(cfg.seed, i as u64), "cell": c}))
        .collect();
    Ok(Outcome {
        report: HaarGofReport {
            d: cfg.d,
            depth: cfg.depth,
            samples: cfg.samples,
            cells: group.len(),
            counts,
            gof,
            tv_distance: tv_f,
            tv_distance_exact: ratio_string(&tv),
            p_threshold: 0.001,
            tv_threshold: 0.02,
            passed,
        },
        records,
    })
}

// ---------------------------------------------------------------------------
// Fixed trees of Haar rooted elements

#[derive(Clone, Debug)]
pub struct GwConfig {
    pub d: usize,
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    /// Depths at which survival is compared with the exact recursion.
    pub survival_depths: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellCheck {
    pub value: usize,
    pub observed: u64,
    pub frequency: f64,
    pub expected: String,
    pub expected_f64: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurvivalCheck {
    pub depth: usize,
    pub hits: u64,
    pub empirical: f64,
    pub exact: String,
    pub exact_f64: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GwReport {
    pub d: usize,
    pub depth: usize,
    pub samples: usize,
    pub offspring_law: Value,
    pub root_law: Value,
    pub offspring: Vec<CellCheck>,
    pub offspring_total: u64,
    pub mean: f64,
    pub mean_se: f64,
    pub mean_z: f64,
    pub root_children: Vec<CellCheck>,
    pub survival: Vec<SurvivalCheck>,
    pub passed: bool,
}

fn cell_checks(counts: &[u64], law: &crate::stats::DiscreteLaw) -> Vec<CellCheck> {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let p = law.prob(k);
            let pf = p.to_f64().unwrap();
            let sigma = proportion_sigma(pf, n);
            let freq = c as f64 / n as f64;
            let z = if sigma > 0.0 {
                (freq - pf) / sigma
            } else if c == 0 {
                0.0
            } else {
                f64::INFINITY
            };
            CellCheck {
                value: k,
                observed: c,
                frequency: freq,
                expected: ratio_string(&p),
                expected_f64: pf,
                sigma,
                z,
            }
        })
        .collect()
}

/// Offspring histogram of non-root fixed vertices, root degree, and
/// survival to the configured depths, from fixed trees grown at `o`.
pub fn gw(cfg: &GwConfig) -> Result<Outcome<GwReport>> {
    let tree = Tree::new(cfg.d)?;
    let d = tree.degree();
    let olaw = offspring_law(cfg.d)?;
    let rlaw = root_law(cfg.d)?;
    let horizon = cfg
        .survival_depths
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(cfg.depth);
    let o = Vertex::root();
    let per_sample: Vec<(Vec<u64>, usize, usize, usize)> = seeds(cfg.seed, cfg.samples)
        .par_iter()
        .map(|&s| {
            let a = RootedAut::haar(cfg.d, s).into_aut();
            let ft = fixed_tree_from(&a, &o, horizon);
            let height = ft.height();
            let size = ft.len();
            let cut = crate::dynamics::FixedTree {
                root: o.clone(),
                members: ft.members.into_iter().filter(|v| v.depth() <= cfg.depth).collect(),
                truncation_depth: cfg.depth,
                hit_boundary: false,
            };
            let st = offspring_stats(&cut, d);
            (st.counts, st.root_children, height, size)
        })
        .collect();

    let mut counts = vec![0u64; d as usize];
    let mut root_counts = vec![0u64; d as usize + 1];
    let mut records = Vec::with_capacity(per_sample.len());
    for (i, (c, rc, height, size)) in per_sample.iter().enumerate() {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
        root_counts[*rc] += 1;
        records.push(json!({
            "sample": i,
            "seed": derive_seed(cfg.seed, i as u64),
            "fixed_size": size,
            "height": height,
            "root_children": rc,
        }));
    }
    let total: u64 = counts.iter().sum();
    let offspring = cell_checks(&counts, &olaw);
    let sum: f64 = counts.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum();
    let sum_sq: f64 = counts.iter().enumerate().map(|(k, &c)| (k * k) as f64 * c as f64).sum();
    let mean = sum / total as f64;
    let var = sum_sq / total as f64 - mean * mean;
    let mean_se = (var / total as f64).sqrt();
    let mean_z = (mean - 1.0) / mean_se;
    let root_children = cell_checks(&root_counts, &rlaw);

    let mut survival = Vec::new();
    for &l in &cfg.survival_depths {
        let hits = per_sample.iter().filter(|s| s.2 >= l).count() as u64;
        let (exact, exact_f64) = match survival_prob_rooted(cfg.d, l) {
            Ok(p) => (ratio_string(&p), p.to_f64().unwrap()),
            Err(_) => {
                let p = survival_prob_rooted_f64(cfg.d, l)?;
                (format!("{p:e}"), p)
            }
        };
        let empirical = hits as f64 / cfg.samples as f64;
        let sigma = proportion_sigma(exact_f64, cfg.samples as u64);
        survival.push(SurvivalCheck {
            depth: l,
            hits,
            empirical,
            exact,
            exact_f64,
            sigma,
            z: (empirical - exact_f64) / sigma,
        });
    }
    let passed = offspring.iter().all(|c| c.z.abs() <= 3.0)
        && mean_z.abs() <= 3.0
        && survival.iter().all(|s| s.z.abs() <= 3.0);
    Ok(Outcome {
        report: GwReport {
            d: cfg.d,
            depth: cfg.depth,
            samples: cfg.samples,
            offspring_law: olaw.to_json(),
            root_law: rlaw.to_json(),
            offspring,
            offspring_total: total,
            mean,
            mean_se,
            mean_z,
            root_children,
            survival,
            passed,
        },
        records,
    })
}

// ---------------------------------------------------------------------------
// Joint uniformity of local permutations in a shadow

/// Index of a tuple of color-0-fixing permutations as a mixed-radix number.
fn tuple_cell(perms: &[LocalPerm], stab: &[LocalPerm]) -> usize {
    perms.iter().fold(0, |acc, p| {
        acc * stab.len() + stab.iter().position(|q| q == p).expect("fixes color 0")
    })
}

fn tuple_cells(d: u8, len: usize) -> Result<(Vec<LocalPerm>, usize)> {
    let stab = LocalPerm::all_fixing_zero(d);
    let cells = (stab.len() as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if cells > 1 << 20 {
        return Err(Error::TooLarge(format!("{cells} cells")));
    }
    Ok((stab, cells as usize))
}

#[derive(Clone, Debug)]
pub struct RestrictionConfig {
    pub d: usize,
    pub edge: DirectedEdge,
    /// Number of shadow vertices whose local permutations form the tuple.
    pub vertices: usize,
    /// Accepted samples wanted.
    pub samples: usize,
    pub seed: u64,
    pub max_attempts: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub cells: usize,
    pub accepted: usize,
    pub attempts: usize,
    pub acceptance_rate: f64,
    pub gof: Option<GofResult>,
    pub p_threshold: f64,
    pub passed: bool,
    pub context: Value,
}

/// Runs `accept` over derived seeds in parallel batches until `want`
/// samples are accepted or `max` attempts are spent; keeps index order.
fn collect_accepted<T, F>(seed: u64, want: usize, max: usize, accept: F) -> (Vec<(usize, T)>, usize)
where
    T: Send,
    F: Fn(usize, u64) -> Option<T> + Sync,
{
    let mut out = Vec::with_capacity(want);
    let mut next = 0usize;
    let batch = 4096.max(want / 4);
    while out.len() < want && next < max {
        let end = (next + batch).min(max);
        let got: Vec<(usize, Option<T>)> = (next..end)
            .into_par_iter()
            .map(|i| (i, accept(i, derive_seed(seed, i as u64))))
            .collect();
        for (i, r) in got {
            if let Some(v) = r {
                out.push((i, v));
                if out.len() == want {
                    return (out, i + 1);
                }
            }
        }
        next = end;
    }
    (out, next)
}

/// Haar rooted elements conditioned to fix `e`; the local permutations of
/// their restriction at the first shadow vertices should be jointly
/// uniform over the color-0 stabilizer.
pub fn restriction_uniformity(cfg: &RestrictionConfig) -> Result<Outcome<UniformityReport>> {
    let tree = Tree::new(cfg.d)?;
    tree.check_edge(&cfg.edge)?;
    if !cfg.edge.is_positive() {
        return Err(Error::NegativeEdge(cfg.edge.to_string()));
    }
    let (stab, cells) = tuple_cells(tree.degree(), cfg.vertices)?;
    let rel: Vec<Vertex> = crate::automorphism::ShadowAut::identity(cfg.d)
        .relative_ball(cfg.vertices)
        .into_iter()
        .take(cfg.vertices)
        .collect();
    let (accepted, attempts) = collect_accepted(cfg.seed, cfg.samples, cfg.max_attempts, |_, s| {
        let b = RootedAut::haar(cfg.d, s).into_aut();
        let y = restrict_to_shadow(&b, &cfg.edge).ok()?;
        let perms: Vec<LocalPerm> = rel.iter().map(|x| y.local_perm(x)).collect();
        Some(tuple_cell(&perms, &stab))
    });
    finish_uniformity(
        cells,
        accepted,
        attempts,
        cfg.seed,
        json!({"edge": cfg.edge, "vertices": rel}),
    )
}

fn finish_uniformity(
    cells: usize,
    accepted: Vec<(usize, usize)>,
    attempts: usize,
    seed: u64,
    context: Value,
) -> Result<Outcome<UniformityReport>> {
    let mut counts = vec![0u64; cells];
    for (_, c) in &accepted {
        counts[*c] += 1;
    }
    let gof = if accepted.is_empty() {
        None
    } else {
        Some(chi_square_gof(&counts, &vec![1.0 / cells as f64; cells])?)
    };
    let passed = gof.as_ref().is_some_and(|g| g.p_value > 0.001);
    let records = accepted
        .iter()
        .map(|(i, c)| json!({"sample": i, "seed": derive_seed(seed, *i as u64), "cell": c}))
        .collect();
    Ok(Outcome {
        report: UniformityReport {
            cells,
            accepted: accepted.len(),
            attempts,
            acceptance_rate: accepted.len() as f64 / attempts.max(1) as f64,
            gof,
            p_threshold: 0.001,
            passed,
            context,
        },
        records,
    })
}

#[derive(Clone, Debug)]
pub struct CocycleConfig {
    pub word: Word,
    pub gens: Vec<TreeAut>,
    /// Fibers `t` is drawn from, cycled by sample index.
    pub targets: Vec<Vertex>,
    pub edge: DirectedEdge,
    /// Number of shadow vertices `x^0, ..., x^J`.
    pub vertices: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_attempts: usize,
}

fn sample_t(d: usize, targets: &[Vertex], i: usize, s: u64) -> TreeAut {
    haar_at(d, &targets[i % targets.len()], s).expect("targets validated")
}

fn check_targets(tree: &Tree, targets: &[Vertex]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Config("no root targets".into()));
    }
    targets.iter().try_for_each(|v| tree.check_vertex(v))
}

/// Conditions on `w(a)` fixing the base vertex and on the edge trace of `e`
/// equal to the first closed simple trace met in index order, then tests
/// the joint law of the local permutations of `w(a)` at the first shadow
/// vertices against the uniform law.
pub fn cocycle_uniformity(cfg: &CocycleConfig) -> Result<Outcome<UniformityReport>> {
    let d = cfg
        .gens
        .first()
        .map(|g| g.degree() as usize)
        .ok_or_else(|| Error::Config("no generators".into()))?;
    let tree = Tree::new(d)?;
    check_targets(&tree, &cfg.targets)?;
    let word = cfg.word.cyclic_reduce();
    if word.is_empty() {
        return Err(Error::Empty);
    }
    let (stab, cells) = tuple_cells(tree.degree(), cfg.vertices)?;
    let assignment = |i: usize, s: u64| Assignment::new(cfg.gens.clone(), sample_t(d, &cfg.targets, i, s));

    // reference context: first sample in the fiber with a usable trace
    let mut reference = None;
    for i in 0..cfg.max_attempts {
        let asg = assignment(i, derive_seed(cfg.seed, i as u64))?;
        if !in_omega(&word, &asg)? {
            continue;
        }
        if let Ok(tc) = TraceContext::new(&word, &asg, &cfg.edge, cfg.vertices) {
            reference = Some(tc);
            break;
        }
    }
    let tc = reference.ok_or_else(|| Error::TraceMismatch("no sample has a closed simple trace".into()))?;
    let (accepted, attempts) = collect_accepted(cfg.seed, cfg.samples, cfg.max_attempts, |i, s| {
        let asg = assignment(i, s).ok()?;
        if !in_omega(&word, &asg).ok()? || !tc.matches(&asg).ok()? {
            return None;
        }
        let total = asg.evaluate(&word).ok()?;
        let perms: Vec<LocalPerm> = tc.shadow.iter().map(|x| total.local_perm(x)).collect();
        Some(tuple_cell(&perms, &stab))
    });
    finish_uniformity(
        cells,
        accepted,
        attempts,
        cfg.seed,
        json!({
            "word": word,
            "edge_trace": tc.edge_trace,
            "special_index": tc.index,
            "tie_break": "smallest eligible index",
            "vertices": tc.shadow,
        }),
    )
}

// ---------------------------------------------------------------------------
// The eta action

#[derive(Clone, Debug)]
pub struct EtaConfig {
    pub words: Vec<Word>,
    pub gens: Vec<TreeAut>,
    pub targets: Vec<Vertex>,
    /// Conditioned samples wanted per word.
    pub samples: usize,
    pub seed: u64,
    pub j_max: usize,
    pub k_bound: usize,
    /// Truncation depth for the radius computation and sphere checks.
    pub depth: usize,
    pub sigmas: Vec<LocalPerm>,
    pub max_attempts: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EtaWordReport {
    pub word: String,
    pub conditioned: usize,
    pub attempts: usize,
    pub outside_omega: usize,
    pub uncertified: usize,
    pub no_closed_trace: usize,
    pub sphere_check_failures: usize,
    pub invariance_failures: usize,
    pub table_checks: usize,
    pub table_failures: usize,
    pub multiplicity_failures: usize,
    pub special_indices: Vec<usize>,
    pub first_failure: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaReport {
    pub words: Vec<EtaWordReport>,
    pub sigmas: Vec<LocalPerm>,
    pub j_max: usize,
    pub k_bound: usize,
    pub tie_break: &'static str,
    pub passed: bool,
}

enum EtaSample {
    OutsideOmega,
    Uncertified,
    NoClosedTrace,
    Checked(Box<EtaChecked>),
}

struct EtaChecked {
    record: Value,
    sphere_failed: bool,
    invariance: usize,
    checks: usize,
    table: usize,
    multiplicity: usize,
    index: usize,
    failure: Option<String>,
}

fn eta_sample(cfg: &EtaConfig, word: &Word, asg: &Assignment) -> Result<EtaSample> {
    if !in_omega(word, asg)? {
        return Ok(EtaSample::OutsideOmega);
    }
    let r = radius_m(word, asg, cfg.depth)?;
    if !r.certified {
        return Ok(EtaSample::Uncertified);
    }
    let sphere = edge_sphere_traces(word, asg, r.m, cfg.depth)?;
    let count = cfg.j_max.max(cfg.k_bound) + 1;
    let tc = sphere
        .closed_edges()
        .find_map(|(e, _)| TraceContext::new(word, asg, e, count).ok());
    let Some(tc) = tc else {
        return Ok(EtaSample::NoClosedTrace);
    };
    let mut out = EtaChecked {
        record: Value::Null,
        sphere_failed: !sphere.all_checks_pass(),
        invariance: 0,
        checks: 0,
        table: 0,
        multiplicity: 0,
        index: tc.index,
        failure: None,
    };
    for sigma in &cfg.sigmas {
        for j in 0..=cfg.j_max {
            let rep = verify_action_properties(&tc, asg, sigma, j, cfg.k_bound)?;
            out.checks += rep.table_checks;
            if !rep.omega_invariant {
                out.invariance += 1;
            }
            out.table += rep.table_failures.len();
            if rep.multiplicity != 1 {
                out.multiplicity += 1;
            }
            if !rep.ok() && out.failure.is_none() {
                out.failure = Some(format!("sigma={sigma} j={j}: {:?}", rep.table_failures.first()));
            }
        }
    }
    out.record = json!({
        "m": r.m,
        "edge": tc.edge,
        "edge_trace": tc.edge_trace,
        "special_index": tc.index,
        "checks": out.checks,
        "failures": out.table + out.invariance + out.multiplicity,
    });
    Ok(EtaSample::Checked(Box::new(out)))
}

/// For each word, conditions on `o^(w(a)) = o`, takes the first closed edge
/// trace on the sphere of radius `M`, and checks invariance of the trace
/// and the transformation rule of the cocycle values under `sigma *^j`.
pub fn eta_verify(cfg: &EtaConfig) -> Result<Outcome<EtaReport>> {
    let d = cfg
        .gens
        .first()
        .map(|g| g.degree() as usize)
        .ok_or_else(|| Error::Config("no generators".into()))?;
    check_targets(&Tree::new(d)?, &cfg.targets)?;
    let mut words = Vec::new();
    let mut records = Vec::new();
    for (wi, raw) in cfg.words.iter().enumerate() {
        let word = raw.cyclic_reduce();
        if word.is_empty() {
            return Err(Error::Empty);
        }
        Assignment::new(cfg.gens.clone(), TreeAut::identity(d))?.check_word(&word)?;
        let wseed = derive_seed(cfg.seed, wi as u64);
        let mut rep = EtaWordReport {
            word: word.to_string(),
            ..Default::default()
        };
        let mut next = 0usize;
        while rep.conditioned < cfg.samples && next < cfg.max_attempts {
            let end = (next + 256).min(cfg.max_attempts);
            let batch: Vec<(usize, Result<EtaSample>)> = (next..end)
                .into_par_iter()
                .map(|i| {
                    let s = derive_seed(wseed, i as u64);
                    let asg = Assignment::new(cfg.gens.clone(), sample_t(d, &cfg.targets, i, s));
                    (i, asg.and_then(|a| eta_sample(cfg, &word, &a)))
                })
                .collect();
            for (i, r) in batch {
                if rep.conditioned == cfg.samples {
                    break;
                }
                rep.attempts = i + 1;
                match r? {
                    EtaSample::OutsideOmega => rep.outside_omega += 1,
                    EtaSample::Uncertified => rep.uncertified += 1,
                    EtaSample::NoClosedTrace => rep.no_closed_trace += 1,
                    EtaSample::Checked(c) => {
                        rep.conditioned += 1;
                        rep.sphere_check_failures += c.sphere_failed as usize;
                        rep.invariance_failures += c.invariance;
                        rep.table_checks += c.checks;
                        rep.table_failures += c.table;
                        rep.multiplicity_failures += c.multiplicity;
                        if !rep.special_indices.contains(&c.index) {
                            rep.special_indices.push(c.index);
                        }
                        if rep.first_failure.is_none() {
                            rep.first_failure = c.failure.clone();
                        }
                        let mut rec = c.record;
                        rec["word"] = json!(rep.word);
                        rec["sample"] = json!(i);
                        rec["seed"] = json!(derive_seed(wseed, i as u64));
                        records.push(rec);
                    }
                }
            }
            next = end;
        }
        rep.passed = rep.conditioned == cfg.samples
            && rep.sphere_check_failures == 0
            && rep.invariance_failures == 0
            && rep.table_failures == 0
            && rep.multiplicity_failures == 0;
        words.push(rep);
    }
    let passed = words.iter().all(|w| w.passed);
    Ok(Outcome {
        report: EtaReport {
            words,
            sigmas: cfg.sigmas.clone(),
            j_max: cfg.j_max,
            k_bound: cfg.k_bound,
            tie_break: "smallest eligible index",
            passed,
        },
        records,
    })
}

// ---------------------------------------------------------------------------
// Relations and fixed trees in groups generated by Haar elements

#[derive(Clone, Debug)]
pub struct AlmostFreeConfig {
    pub d: usize,
    pub generators: usize,
    /// Fibers of the generators, cycled by generator index.
    pub targets: Vec<Vertex>,
    pub max_len: usize,
    pub samples: usize,
    pub seed: u64,
    /// Radius of the ball on which a word image is compared with the identity.
    pub ball_depth: usize,
    /// Fixed trees reaching this distance from their witness count as deep.
    pub fixed_depth: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlmostFreeReport {
    pub d: usize,
    pub generators: usize,
    pub targets: Vec<Vertex>,
    pub max_len: usize,
    pub samples: usize,
    pub words_per_sample: usize,
    pub relation_candidates: Vec<Value>,
    pub elliptic: u64,
    pub inversions: u64,
    pub hyperbolic: u64,
    pub deep_fixed: u64,
    pub deep_fraction: f64,
    pub survival_bound: String,
    pub survival_bound_f64: f64,
    pub sigma: f64,
    /// Elliptic and deep counts split by the shape of the cyclically
    /// reduced word: a single letter, a proper power, or anything else.
    pub by_shape: Vec<ShapeCount>,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ShapeCount {
    pub shape: &'static str,
    pub words: u64,
    pub elliptic: u64,
    pub deep_fixed: u64,
    pub deep_fraction: f64,
}

/// `letter`, `power` or `other`, for the cyclic reduction of `w`.
pub fn word_shape(w: &Word) -> &'static str {
    let ls = w.cyclic_reduce().letters();
    let n = ls.len();
    if n == 1 {
        return "letter";
    }
    let periodic = (1..n).any(|p| n.is_multiple_of(p) && (p..n).all(|i| ls[i] == ls[i - p]));
    if periodic {
        "power"
    } else {
        "other"
    }
}

/// All freely reduced words of length `1..=max_len` in `n` generators, in
/// length-lexicographic order.
pub fn reduced_words(n: usize, max_len: usize) -> Vec<Word> {
    let alphabet: Vec<Letter> = (0..n)
        .flat_map(|i| [Letter::gen(i), Letter::gen(i).inverse()])
        .collect();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &l in &alphabet {
                if w.last() == Some(&l.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().map(|w| Word::normalize(w)));
        layer = next;
    }
    out
}

struct WordOutcome {
    relation: bool,
    kind: Kind,
    deep: bool,
}

pub fn almost_free(cfg: &AlmostFreeConfig) -> Result<Outcome<AlmostFreeReport>> {
    let tree = Tree::new(cfg.d)?;
    check_targets(&tree, &cfg.targets)?;
    let words = reduced_words(cfg.generators, cfg.max_len);
    let per_sample: Vec<Vec<WordOutcome>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let base = derive_seed(cfg.seed, i as u64);
            let gens: Vec<TreeAut> = (0..cfg.generators)
                .map(|g| sample_t(cfg.d, &cfg.targets, g, derive_seed(base, g as u64)))
                .collect();
            let asg = Assignment::new(gens, TreeAut::identity(cfg.d)).unwrap();
            words
                .iter()
                .map(|w| {
                    let a = asg.evaluate(w).unwrap();
                    let relation = a.is_identity_to_depth(cfg.ball_depth);
                    let kind = classify(&a).kind;
                    let deep = kind == Kind::Elliptic
                        && fixed_tree(&a, cfg.fixed_depth).unwrap().hit_boundary;
                    WordOutcome { relation, kind, deep }
                })
                .collect()
        })
        .collect();

    let mut relation_candidates = Vec::new();
    let (mut ell, mut inv, mut hyp, mut deep) = (0u64, 0u64, 0u64, 0u64);
    let mut records = Vec::new();
    let shapes: Vec<&'static str> = words.iter().map(word_shape).collect();
    let mut by_shape: Vec<ShapeCount> = ["letter", "power", "other"]
        .into_iter()
        .map(|shape| ShapeCount {
            shape,
            ..Default::default()
        })
        .collect();
    for (i, outs) in per_sample.iter().enumerate() {
        let mut s_ell = 0;
        let mut s_deep = 0;
        for ((w, o), shape) in words.iter().zip(outs).zip(&shapes) {
            let sc = by_shape.iter_mut().find(|c| c.shape == *shape).unwrap();
            sc.words += 1;
            sc.elliptic += (o.kind == Kind::Elliptic) as u64;
            sc.deep_fixed += o.deep as u64;
            if o.relation {
                relation_candidates.push(json!({"sample": i, "word": w}));
            }
            match o.kind {
                Kind::Elliptic => {
                    ell += 1;
                    s_ell += 1;
                }
                Kind::Inversion => inv += 1,
                Kind::Hyperbolic => hyp += 1,
            }
            if o.deep {
                deep += 1;
                s_deep += 1;
            }
        }
        records.push(json!({
            "sample": i,
            "seed": derive_seed(cfg.seed, i as u64),
            "elliptic": s_ell,
            "deep_fixed": s_deep,
            "relations": outs.iter().filter(|o| o.relation).count(),
        }));
    }
    let bound = survival_prob_rooted(cfg.d, cfg.fixed_depth)
        .map(|p| (ratio_string(&p), p.to_f64().unwrap()))
        .or_else(|_| survival_prob_rooted_f64(cfg.d, cfg.fixed_depth).map(|p| (format!("{p:e}"), p)))?;
    let fraction = if ell > 0 { deep as f64 / ell as f64 } else { 0.0 };
    for sc in &mut by_shape {
        sc.deep_fraction = if sc.elliptic > 0 {
            sc.deep_fixed as f64 / sc.elliptic as f64
        } else {
            0.0
        };
    }
    let sigma = proportion_sigma(bound.1, ell.max(1));
    let passed = relation_candidates.is_empty() && fraction <= bound.1 + 3.0 * sigma;
    Ok(Outcome {
        report: AlmostFreeReport {
            d: cfg.d,
            generators: cfg.generators,
            targets: cfg.targets.clone(),
            max_len: cfg.max_len,
            samples: cfg.samples,
            words_per_sample: words.len(),
            relation_candidates,
            elliptic: ell,
            inversions: inv,
            hyperbolic: hyp,
            deep_fixed: deep,
            deep_fraction: fraction,
            survival_bound: bound.0,
            survival_bound_f64: bound.1,
            sigma,
            by_shape,
            passed,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_enumeration_counts() {
        let ws = reduced_words(2, 5);
        assert_eq!(ws.len(), 4 + 12 + 36 + 108 + 324);
        let distinct: std::collections::HashSet<_> = ws.iter().collect();
        assert_eq!(distinct.len(), ws.len());
        assert!(ws.iter().all(|w| !w.contains_t() && w.len() == 1));
        let shape = |s: &str| word_shape(&Word::parse(s).unwrap());
        assert_eq!(shape("g1"), "letter");
        assert_eq!(shape("g0 g1 g0^-1"), "letter");
        assert_eq!(shape("g0 g0"), "power");
        assert_eq!(shape("g1 g0 g1 g0"), "power");
        assert_eq!(shape("g1 g0 g0"), "other");
    }

    #[test]
    fn small_haar_gof() {
        let out = haar_gof(&HaarGofConfig {
            d: 3,
            depth: 1,
            samples: 6000,
            seed: 1,
        })
        .unwrap();
        assert_eq!(out.report.cells, 6);
        assert!(out.report.passed, "{:?}", out.report);
        assert_eq!(out.records.len(), 6000);
    }

    #[test]
    fn gw_is_reproducible() {
        let cfg = GwConfig {
            d: 3,
            depth: 6,
            samples: 500,
            seed: 5,
            survival_depths: vec![2, 4],
        };
        let a = gw(&cfg).unwrap();
        let b = gw(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.report.survival[0].exact, "19/48");
    }

    #[test]
    fn accepted_samples_keep_order() {
        let (got, attempts) = collect_accepted(3, 10, 1000, |i, _| (i % 3 == 0).then_some(i));
        assert_eq!(got.iter().map(|p| p.1).collect::<Vec<_>>(), (0..10).map(|k| 3 * k).collect::<Vec<_>>());
        assert_eq!(attempts, 28);
    }
}
