//! JSON schemas for chain and collection input files, and serializers for
//! the analysis types.
//!
//! Matrices are row-major arrays of rows; permutations are 0-based index
//! maps where `map[i]` is the column holding the one in row `i`.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::birkhoff::PermComponent;
use crate::chain::{Chain, Flavor, PermChain};
use crate::matrix::{Permutation, StochMatrix};
use crate::switching::{Collection, CollectionFlavor};
use crate::{Error, Result, Settings};

type Rows = Vec<Vec<f64>>;

/// On-disk form of a chain, optionally with a permutation chain and an
/// initial vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub dim: usize,
    #[serde(default = "default_flavor")]
    pub flavor: Flavor,
    #[serde(default)]
    pub prefix: Vec<Rows>,
    pub cycle: Vec<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm_prefix: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm_cycle: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

fn default_flavor() -> Flavor {
    Flavor::Stochastic
}

fn parse_matrices(dim: usize, raw: &[Rows], tol: f64) -> Result<Vec<StochMatrix>> {
    raw.iter()
        .map(|rows| {
            let a = StochMatrix::from_rows(rows, tol)?;
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.dim(),
                });
            }
            Ok(a)
        })
        .collect()
}

fn parse_perms(dim: usize, raw: &[Vec<usize>]) -> Result<Vec<Permutation>> {
    raw.iter()
        .map(|map| {
            if map.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: map.len(),
                });
            }
            Permutation::new(map.clone())
        })
        .collect()
}

impl ChainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_chain(chain: &Chain) -> Self {
        let pres = chain.presentation();
        Self {
            dim: chain.dim(),
            flavor: chain.flavor(),
            prefix: pres.prefix().iter().map(StochMatrix::to_rows).collect(),
            cycle: pres.cycle().iter().map(StochMatrix::to_rows).collect(),
            perm_prefix: None,
            perm_cycle: None,
            x0: None,
        }
    }

    pub fn to_chain(&self, settings: &Settings) -> Result<Chain> {
        let prefix = parse_matrices(self.dim, &self.prefix, settings.tol_stoch)?;
        let cycle = parse_matrices(self.dim, &self.cycle, settings.tol_stoch)?;
        Chain::new(prefix, cycle, self.flavor, settings)
    }

    /// The permutation chain, when `perm_cycle` is present.
    pub fn perm_chain(&self) -> Result<Option<PermChain>> {
        let Some(cycle) = &self.perm_cycle else {
            if self.perm_prefix.is_some() {
                return Err(Error::Invalid("perm_prefix given without perm_cycle".into()));
            }
            return Ok(None);
        };
        let prefix = parse_perms(self.dim, self.perm_prefix.as_deref().unwrap_or(&[]))?;
        let cycle = parse_perms(self.dim, cycle)?;
        PermChain::new(prefix, cycle).map(Some)
    }
}

/// On-disk form of a finite matrix collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionSpec {
    pub dim: usize,
    pub flavor: CollectionFlavor,
    pub matrices: Vec<Rows>,
}

impl CollectionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_collection(&self, settings: &Settings) -> Result<Collection> {
        let mats = parse_matrices(self.dim, &self.matrices, settings.tol_stoch)?;
        Collection::new(mats, self.flavor, settings)
    }
}

pub(crate) fn serialize_perm<S: Serializer>(
    p: &Permutation,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(p.map())
}

impl Serialize for Chain {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChainSpec::from_chain(self).serialize(serializer)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_perm(self, serializer)
    }
}

impl Serialize for PermChain {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pres = self.presentation();
        let mut st = serializer.serialize_struct("PermChain", 2)?;
        st.serialize_field("perm_prefix", pres.prefix())?;
        st.serialize_field("perm_cycle", pres.cycle())?;
        st.end()
    }
}

impl Serialize for PermComponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PermComponent", 4)?;
        st.serialize_field("gamma", &self.gamma)?;
        st.serialize_field("degenerate", &self.degenerate)?;
        st.serialize_field("permutation_component", &self.pchain)?;
        st.serialize_field("residual_chain", &self.residual_chain)?;
        st.end()
    }
}
