use std::collections::BTreeMap;

use anyhow::{bail, Result};
use arbor_core::automorphism::PortraitFile;
use arbor_core::dynamics::{fixed_tree, offspring_stats};
use arbor_core::experiment::{
    almost_free, cocycle_uniformity, eta_verify, gw, haar_gof, AlmostFreeConfig, CocycleConfig, EtaConfig,
    GwConfig, HaarGofConfig,
};
use arbor_core::prf::derive_seed;
use arbor_core::stats::survival_prob_rooted;
use arbor_core::words::{edge_sphere_traces, in_omega, radius_m, special_index, trace_vertex};
use arbor_core::{
    classify, haar_at, Assignment, FinitaryPortrait, Kind, OffspringStats, RootedAut, Tree, TreeAut, Vertex,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Settings;

/// Result of a command: summary, per-sample records, and whether the
/// experiment's own pass condition held.
pub struct Produced {
    pub summary: Value,
    pub records: Vec<Value>,
    pub passed: bool,
}

fn produced(summary: Value, records: Vec<Value>) -> Produced {
    Produced {
        summary,
        records,
        passed: true,
    }
}

/// Where the elements for `classify` and `fixtree` come from.
enum Source {
    Word(Box<TreeAut>, String),
    Portrait(Box<TreeAut>),
    Haar(Vec<Vertex>, u64),
}

impl Source {
    fn from_settings(s: &Settings, d: usize) -> Result<Source> {
        let tree = Tree::new(d)?;
        if s.word.is_some() {
            let w = s.single_word()?;
            let asg = Assignment::load(s.assignment_path()?)?;
            return Ok(Source::Word(Box::new(asg.evaluate(&w)?), w.to_string()));
        }
        if let Some(path) = &s.portrait {
            let p = FinitaryPortrait::from_json(&std::fs::read_to_string(path)?)?;
            if p.degree() as usize != d {
                bail!("portrait has degree {}, expected {d}", p.degree());
            }
            return Ok(Source::Portrait(Box::new(RootedAut::from_portrait(p).into_aut())));
        }
        Ok(Source::Haar(s.targets(&tree, &["o"])?, s.seed.unwrap_or(0)))
    }

    fn samples(&self, requested: Option<usize>) -> usize {
        match self {
            Source::Haar(..) => requested.unwrap_or(1),
            _ => 1,
        }
    }

    fn element(&self, d: usize, i: usize) -> Result<(TreeAut, Value)> {
        Ok(match self {
            Source::Word(a, w) => ((**a).clone(), json!({"sample": i, "word": w})),
            Source::Portrait(a) => ((**a).clone(), json!({"sample": i})),
            Source::Haar(targets, base) => {
                let seed = derive_seed(*base, i as u64);
                let target = &targets[i % targets.len()];
                (haar_at(d, target, seed)?, json!({"sample": i, "seed": seed, "target": target}))
            }
        })
    }
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

pub fn sample(s: &Settings) -> Result<Produced> {
    let d = s.degree(3)?;
    let depth = s.depth.unwrap_or(3);
    let tree = Tree::new(d)?;
    let targets = s.targets(&tree, &["o"])?;
    let base = s.seed.unwrap_or(0);
    let n = s.samples.unwrap_or(1);
    let records: Vec<Value> = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(base, i as u64);
            let target = &targets[i % targets.len()];
            let (v, r) = haar_at(d, target, seed)?.decompose();
            let portrait = FinitaryPortrait::new(d, r.portrait(depth))?;
            Ok(json!({
                "sample": i,
                "seed": seed,
                "target": v,
                "portrait": PortraitFile::from(&portrait),
            }))
        })
        .collect::<Result<_>>()?;
    let summary = json!({"d": d, "depth": depth, "samples": n, "records": records});
    Ok(produced(summary, records))
}

fn class_json(a: &TreeAut) -> Value {
    serde_json::to_value(classify(a)).expect("serializable")
}

pub fn classify_cmd(s: &Settings) -> Result<Produced> {
    let d = s.degree(3)?;
    let src = Source::from_settings(s, d)?;
    let n = src.samples(s.samples);
    let records: Vec<Value> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, head) = src.element(d, i)?;
            Ok(with(head, class_json(&a)))
        })
        .collect::<Result<_>>()?;
    let mut kinds: BTreeMap<String, u64> = BTreeMap::new();
    for r in &records {
        *kinds.entry(r["kind"].as_str().unwrap_or_default().to_string()).or_default() += 1;
    }
    let summary = json!({"d": d, "samples": n, "kinds": kinds, "records": records});
    Ok(produced(summary, records))
}

pub fn fixtree(s: &Settings) -> Result<Produced> {
    let d = s.degree(3)?;
    let depth = s.depth.unwrap_or(8);
    let src = Source::from_settings(s, d)?;
    let n = src.samples(s.samples);
    let per: Vec<(Value, Option<(OffspringStats, bool)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, head) = src.element(d, i)?;
            let cls = classify(&a);
            if cls.kind != Kind::Elliptic {
                return Ok((with(head, json!({"kind": cls.kind})), None));
            }
            let ft = fixed_tree(&a, depth)?;
            let off = offspring_stats(&ft, d as u8);
            let rec = with(
                head,
                json!({
                    "kind": cls.kind,
                    "fixed_tree": ft.to_json(),
                    "size": ft.len(),
                    "height": ft.height(),
                    "survives": ft.hit_boundary,
                    "offspring": off,
                }),
            );
            Ok((rec, Some((off, ft.hit_boundary))))
        })
        .collect::<Result<_>>()?;
    let mut merged = OffspringStats {
        counts: vec![0; d],
        root_children: 0,
    };
    let mut elliptic = 0u64;
    let mut survivors = 0u64;
    for (_, o) in &per {
        if let Some((off, survives)) = o {
            merged.merge(off);
            elliptic += 1;
            survivors += *survives as u64;
        }
    }
    let exact = survival_prob_rooted(d, depth)?;
    let records: Vec<Value> = per.into_iter().map(|(r, _)| r).collect();
    let summary = json!({
        "d": d,
        "depth": depth,
        "samples": n,
        "elliptic": elliptic,
        "survivors": survivors,
        "survival_fraction": if elliptic > 0 { survivors as f64 / elliptic as f64 } else { 0.0 },
        "haar_rooted_survival": format!("{}/{}", exact.numer(), exact.denom()),
        "offspring_counts": merged.counts,
        "records": if n <= 64 { Value::Array(records.clone()) } else { Value::Null },
    });
    Ok(produced(summary, records))
}

pub fn word(s: &Settings) -> Result<Produced> {
    let w = s.single_word()?;
    let asg = Assignment::load(s.assignment_path()?)?;
    asg.check_word(&w)?;
    let depth = s.depth.unwrap_or(8);
    let reduced = w.cyclic_reduce();
    let value = asg.evaluate(&reduced)?;
    let mut summary = json!({
        "word": w.to_string(),
        "canonical": w.block_string(),
        "cyclic_reduction": reduced.to_string(),
        "length": reduced.len(),
        "eligible_indices": reduced.eligible_indices(),
        "class": class_json(&value),
        "fixes_base_vertex": in_omega(&reduced, &asg)?,
        "base_trace": trace_vertex(&reduced, &asg, &Vertex::root())?,
    });
    if reduced.contains_t() && !reduced.is_empty() {
        let rm = radius_m(&reduced, &asg, depth)?;
        let sphere = edge_sphere_traces(&reduced, &asg, rm.m, depth)?;
        let closed: Vec<Value> = sphere
            .closed_edges()
            .map(|(e, tr)| {
                let index = if e.is_positive() && tr.is_simple() {
                    special_index(tr, &reduced).ok()
                } else {
                    None
                };
                json!({"edge": e, "trace": tr, "special_index": index})
            })
            .collect();
        summary["radius"] = serde_json::to_value(&rm)?;
        summary["sphere"] = json!({
            "m": sphere.m,
            "edges": sphere.traces.len(),
            "closed": closed,
            "negative_closed": sphere.negative_closed,
            "fixed_in_open": sphere.fixed_in_open,
            "nesting_failures": sphere.nesting_failures,
            "all_checks_pass": sphere.all_checks_pass(),
        });
    }
    Ok(produced(summary.clone(), vec![summary]))
}

fn finish<R: serde::Serialize>(report: &R, passed: bool, records: Vec<Value>) -> Result<Produced> {
    Ok(Produced {
        summary: serde_json::to_value(report)?,
        records,
        passed,
    })
}

pub fn haar_gof_cmd(s: &Settings) -> Result<Produced> {
    let out = haar_gof(&HaarGofConfig {
        d: s.degree(3)?,
        depth: s.depth.unwrap_or(2),
        samples: s.samples.unwrap_or(48_000),
        seed: s.seed.unwrap_or(0),
    })?;
    finish(&out.report, out.report.passed, out.records)
}

pub fn gw_cmd(s: &Settings) -> Result<Produced> {
    let out = gw(&GwConfig {
        d: s.degree(3)?,
        depth: s.depth.unwrap_or(16),
        samples: s.samples.unwrap_or(100_000),
        seed: s.seed.unwrap_or(0),
        survival_depths: s.survival_depths.clone().unwrap_or_default(),
    })?;
    finish(&out.report, out.report.passed, out.records)
}

pub fn almost_free_cmd(s: &Settings) -> Result<Produced> {
    let d = s.degree(3)?;
    let out = almost_free(&AlmostFreeConfig {
        d,
        generators: s.generators.unwrap_or(2),
        targets: s.targets(&Tree::new(d)?, &["o", "o.1"])?,
        max_len: s.max_len.unwrap_or(5),
        samples: s.samples.unwrap_or(100),
        seed: s.seed.unwrap_or(0),
        ball_depth: s.ball_depth.unwrap_or(8),
        fixed_depth: s.fixed_depth.unwrap_or(16),
    })?;
    finish(&out.report, out.report.passed, out.records)
}

fn generators(s: &Settings, d: usize) -> Result<Vec<TreeAut>> {
    let asg = Assignment::load(s.assignment_path()?)?;
    if asg.degree() as usize != d {
        bail!("assignment has degree {}, expected {d}", asg.degree());
    }
    Ok(asg.gens().to_vec())
}

pub fn eta_verify_cmd(s: &Settings) -> Result<Produced> {
    let d = s.degree(3)?;
    let words = s.words()?;
    if words.is_empty() {
        bail!("--word is required");
    }
    let out = eta_verify(&EtaConfig {
        words,
        gens: generators(s, d)?,
        targets: s.targets(&Tree::new(d)?, &["o"])?,
        samples: s.samples.unwrap_or(100),
        seed: s.seed.unwrap_or(0),
        j_max: s.j_max.unwrap_or(10),
        k_bound: s.k_bound.unwrap_or(10),
        depth: s.depth.unwrap_or(10),
        sigmas: s.sigmas(d)?,
        max_attempts: s.max_attempts.unwrap_or(200_000),
    })?;
    finish(&out.report, out.report.passed, out.records)
}

pub fn cocycle_uniformity_cmd(s: &Settings) -> Result<Produced> {
    let d = s.degree(3)?;
    let tree = Tree::new(d)?;
    let out = cocycle_uniformity(&CocycleConfig {
        word: s.single_word()?,
        gens: generators(s, d)?,
        targets: s.targets(&tree, &["o"])?,
        edge: s.edge(&tree, "o:1")?,
        vertices: s.vertices.unwrap_or(8),
        samples: s.samples.unwrap_or(25_600),
        seed: s.seed.unwrap_or(0),
        max_attempts: s.max_attempts.unwrap_or(1_000_000),
    })?;
    finish(&out.report, out.report.passed, out.records)
}
