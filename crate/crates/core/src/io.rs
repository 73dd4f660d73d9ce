//! JSON documents for trees, states and thresholds, and the state shorthand
//! accepted on the command line.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{NamedState, PureState};
use crate::tensor::C64;
use crate::tree::RootedTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyDoc {
    pub id: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    2
}

/// `{ "parties": [{"id", "dim"}], "edges": [[a, b]], "root": id }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub parties: Vec<PartyDoc>,
    pub edges: Vec<(String, String)>,
    pub root: String,
}

impl TreeDoc {
    pub fn from_tree(t: &RootedTree) -> Self {
        Self {
            parties: t
                .names()
                .iter()
                .zip(t.dims())
                .map(|(id, &dim)| PartyDoc { id: id.clone(), dim })
                .collect(),
            edges: t
                .undirected_edges()
                .iter()
                .map(|(a, b)| (t.name(*a).to_string(), t.name(*b).to_string()))
                .collect(),
            root: t.name(t.root()).to_string(),
        }
    }

    pub fn build(&self, root: Option<&str>) -> Result<RootedTree> {
        let parties: Vec<(String, usize)> = self.parties.iter().map(|p| (p.id.clone(), p.dim)).collect();
        RootedTree::root_and_relabel(&parties, &self.edges, root.unwrap_or(&self.root))
    }
}

pub fn parse_tree(json: &str, root: Option<&str>) -> Result<RootedTree> {
    serde_json::from_str::<TreeDoc>(json)?.build(root)
}

pub fn load_tree(path: &Path, root: Option<&str>) -> Result<RootedTree> {
    parse_tree(&std::fs::read_to_string(path)?, root)
}

/// `{"named": "w", "n": 4}` or `{"dims": [...], "amplitudes": [[re, im], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateDoc {
    Named {
        named: String,
        #[serde(default)]
        n: Option<usize>,
    },
    Dense {
        dims: Vec<usize>,
        amplitudes: Vec<[f64; 2]>,
    },
}

impl StateDoc {
    pub fn from_state(s: &PureState) -> Self {
        Self::Dense {
            dims: s.dims().to_vec(),
            amplitudes: s.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    /// The state on `tree`'s parties; its dimensions must match the tree.
    pub fn build(&self, tree: &RootedTree) -> Result<PureState> {
        let s = match self {
            Self::Named { named, n } => {
                if let Some(n) = n {
                    check_count(*n, tree)?;
                }
                named_state(named, tree)?
            }
            Self::Dense { dims, amplitudes } => {
                let amps = amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
                PureState::new(dims.clone(), amps)?
            }
        };
        if s.dims() != tree.dims() {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?} vs tree dims {:?}",
                s.dims(),
                tree.dims()
            )));
        }
        Ok(s)
    }
}

fn check_count(n: usize, tree: &RootedTree) -> Result<()> {
    if n != tree.n() {
        return Err(Error::DimensionMismatch(format!("state has {n} parties, tree has {}", tree.n())));
    }
    Ok(())
}

/// Family name with an optional party count suffix (`w4`, `ghz5`, `product`),
/// or `random:SEED` / `dicke:K`.
fn named_state(spec: &str, tree: &RootedTree) -> Result<PureState> {
    let lower = spec.trim().to_ascii_lowercase();
    for family in ["w", "ghz", "bell", "product"] {
        if let Some(rest) = lower.strip_prefix(family) {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let n: usize = rest.parse().map_err(|_| Error::Parse(format!("party count in `{spec}`")))?;
                check_count(n, tree)?;
                return family.parse::<NamedState>()?.build(tree.dims());
            }
        }
    }
    lower.parse::<NamedState>()?.build(tree.dims())
}

/// A path to a state JSON document, or a family shorthand.
pub fn load_state(spec: &str, tree: &RootedTree) -> Result<PureState> {
    let path = Path::new(spec);
    if path.is_file() {
        let doc: StateDoc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        return doc.build(tree);
    }
    named_state(spec, tree)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ThresholdDoc {
    List(Vec<f64>),
    Map(BTreeMap<String, f64>),
    Wrapped { thresholds: Box<ThresholdDoc> },
}

/// Per-edge thresholds by edge position, from a list in label order or a map
/// keyed `e1`/`1`; edges missing from a map get zero.
pub fn parse_thresholds(json: &str, edges: usize) -> Result<Vec<f64>> {
    let mut doc: ThresholdDoc = serde_json::from_str(json)?;
    while let ThresholdDoc::Wrapped { thresholds } = doc {
        doc = *thresholds;
    }
    match doc {
        ThresholdDoc::List(v) => {
            if v.len() != edges {
                return Err(Error::DimensionMismatch(format!("{} thresholds for {edges} edges", v.len())));
            }
            Ok(v)
        }
        ThresholdDoc::Map(m) => {
            let mut out = vec![0.0; edges];
            for (key, value) in m {
                let label: usize = key
                    .trim_start_matches(['e', 'E'])
                    .parse()
                    .map_err(|_| Error::Parse(format!("threshold key `{key}`")))?;
                if label == 0 || label > edges {
                    return Err(Error::UnknownEdge(key));
                }
                out[label - 1] = value;
            }
            Ok(out)
        }
        ThresholdDoc::Wrapped { .. } => unreachable!(),
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_pretty_json(value)?)?;
    Ok(())
}
