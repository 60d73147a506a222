//! Run settings from flags and an optional JSON config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use arbor_core::{DirectedEdge, LocalPerm, Tree, Vertex, Word};
use clap::Args;
use serde::{Deserialize, Serialize};

/// A string or a list of strings in the config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<String>>, D::Error> {
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    }))
}

/// Every field is optional so that a config file and the command line can
/// be layered; flags win.
#[derive(Args, Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// JSON file with any of these settings (same names, snake_case).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Tree degree.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Truncation depth L.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Word literal such as "g0 t g1^-1 t^-1"; repeat for several words.
    #[arg(long, global = true)]
    #[serde(deserialize_with = "one_or_many")]
    pub word: Option<Vec<String>>,
    /// Assignment file for the generators and t.
    #[arg(long, global = true)]
    pub assignment: Option<PathBuf>,
    /// Root targets for fiber-conditioned sampling, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Output directory for records.jsonl, summary.json and summary.csv.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Portrait file for a finitary rooted element.
    #[arg(long, global = true)]
    pub portrait: Option<PathBuf>,
    /// Directed edge literal such as "o:1".
    #[arg(long, global = true)]
    pub edge: Option<String>,
    /// Number of shadow vertices in uniformity tests.
    #[arg(long, global = true)]
    pub vertices: Option<usize>,
    /// Number of generators.
    #[arg(long, global = true)]
    pub generators: Option<usize>,
    /// Maximal word length in the almost-free search.
    #[arg(long, global = true)]
    pub max_len: Option<usize>,
    /// Ball radius for the identity test in the almost-free search.
    #[arg(long, global = true)]
    pub ball_depth: Option<usize>,
    /// Depth at which a fixed tree counts as deep.
    #[arg(long, global = true)]
    pub fixed_depth: Option<usize>,
    /// Depths compared with the exact survival recursion, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub survival_depths: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub j_max: Option<usize>,
    #[arg(long, global = true)]
    pub k_bound: Option<usize>,
    /// Local permutation as comma separated images, e.g. "0,2,1"; repeatable.
    #[arg(long, global = true)]
    #[serde(deserialize_with = "one_or_many")]
    pub sigma: Option<Vec<String>>,
    /// Cap on rejection sampling attempts.
    #[arg(long, global = true)]
    pub max_attempts: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    /// Config file values overridden by any flag given on the command line.
    pub fn resolve(flags: &Settings) -> Result<Settings> {
        let mut s = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<Settings>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => Settings::default(),
        };
        overlay!(s, flags; d, depth, samples, seed, word, assignment, targets, out, threads, portrait,
            edge, vertices, generators, max_len, ball_depth, fixed_depth, survival_depths, j_max,
            k_bound, sigma, max_attempts);
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("depth", self.depth),
            ("samples", self.samples),
            ("threads", self.threads),
            ("vertices", self.vertices),
            ("generators", self.generators),
            ("max_len", self.max_len),
            ("ball_depth", self.ball_depth),
            ("fixed_depth", self.fixed_depth),
            ("max_attempts", self.max_attempts),
        ];
        for (name, v) in positive {
            if v == Some(0) {
                bail!("{name} must be positive");
            }
        }
        if let Some(d) = self.d {
            Tree::new(d)?;
        }
        for w in self.word.iter().flatten() {
            Word::parse(w)?;
        }
        Ok(())
    }

    pub fn degree(&self, default: usize) -> Result<usize> {
        let d = self.d.unwrap_or(default);
        Tree::new(d)?;
        Ok(d)
    }

    pub fn words(&self) -> Result<Vec<Word>> {
        self.word
            .iter()
            .flatten()
            .map(|w| Ok(Word::parse(w)?))
            .collect()
    }

    pub fn single_word(&self) -> Result<Word> {
        match self.words()?.as_slice() {
            [w] => Ok(w.clone()),
            [] => bail!("--word is required"),
            _ => bail!("exactly one --word expected"),
        }
    }

    pub fn targets(&self, tree: &Tree, default: &[&str]) -> Result<Vec<Vertex>> {
        let given: Vec<String> = match &self.targets {
            Some(t) => t.clone(),
            None => default.iter().map(|s| s.to_string()).collect(),
        };
        if given.is_empty() {
            bail!("targets must not be empty");
        }
        given.iter().map(|s| Ok(tree.parse_addr(s.trim())?)).collect()
    }

    pub fn edge(&self, tree: &Tree, default: &str) -> Result<DirectedEdge> {
        Ok(tree.parse_edge(self.edge.as_deref().unwrap_or(default))?)
    }

    pub fn sigmas(&self, d: usize) -> Result<Vec<LocalPerm>> {
        match &self.sigma {
            None => Ok(vec![LocalPerm::transposition(d as u8, 1, 2)]),
            Some(list) => list.iter().map(|s| parse_perm(s, d)).collect(),
        }
    }

    pub fn assignment_path(&self) -> Result<&Path> {
        self.assignment.as_deref().context("--assignment is required")
    }
}

fn parse_perm(text: &str, d: usize) -> Result<LocalPerm> {
    let images = text
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("bad permutation {text:?}"))?;
    if images.len() != d {
        bail!("permutation {text:?} has {} entries, expected {d}", images.len());
    }
    Ok(LocalPerm::from_images(&images)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"d": 4, "samples": 10, "word": "t g0", "targets": ["o", "o.1"]}"#).unwrap();
        let flags = Settings {
            config: Some(path),
            samples: Some(20),
            ..Default::default()
        };
        let s = Settings::resolve(&flags).unwrap();
        assert_eq!(s.d, Some(4));
        assert_eq!(s.samples, Some(20));
        assert_eq!(s.word, Some(vec!["t g0".to_string()]));
        assert_eq!(s.targets.unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |s: Settings| Settings::resolve(&s).is_err();
        assert!(bad(Settings { d: Some(2), ..Default::default() }));
        assert!(bad(Settings { samples: Some(0), ..Default::default() }));
        assert!(bad(Settings { word: Some(vec!["g0 x".into()]), ..Default::default() }));
        assert!(parse_perm("0,2", 3).is_err());
        assert_eq!(parse_perm("0,2,1", 3).unwrap().images(), &[0, 2, 1]);
    }
}
