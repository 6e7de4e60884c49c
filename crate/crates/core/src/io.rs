//! Loading the JSON input formats with diagnostics that name the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poset::{validate_poset, Mask, Poset, RawPoset};
use crate::products::FilterProduct;
use crate::structure::{validate_structure, RawStructure, Structure};
use crate::systems::{
    validate_omega_chain, validate_system, OmegaChain, OrderedSystem, RawOmegaChain, RawSystem,
};

fn located(path: &Path, e: Error) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}

/// Reads and deserializes a JSON file, reporting syntax and shape errors
/// as `file:line:column: message`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("{}: cannot read: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        Error::Input(format!(
            "{}:{}:{}: {msg}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

pub fn load_structure(path: &Path) -> Result<Structure> {
    let raw: RawStructure = read_json(path)?;
    validate_structure(&raw).map_err(|e| located(path, e))
}

pub fn load_poset(path: &Path) -> Result<Poset> {
    let raw: RawPoset = read_json(path)?;
    validate_poset(&raw).map_err(|e| located(path, e))
}

pub fn load_system(path: &Path) -> Result<OrderedSystem> {
    let raw: RawSystem = read_json(path)?;
    validate_system(&raw).map_err(|e| located(path, e))
}

pub fn load_omega_chain(path: &Path) -> Result<OmegaChain> {
    let raw: RawOmegaChain = read_json(path)?;
    validate_omega_chain(&raw).map_err(|e| located(path, e))
}

/// Chains of structures and an ultrafilter over their positions, given as
/// lists of chain positions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBundleInput {
    pub chains: Vec<RawSystem>,
    pub ultrafilter: Vec<Vec<usize>>,
}

pub fn load_bundle(path: &Path) -> Result<(Vec<OrderedSystem>, Vec<Mask>)> {
    let raw: RawBundleInput = read_json(path)?;
    let chains = raw
        .chains
        .iter()
        .map(validate_system)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| located(path, e))?;
    let mut u = Vec::new();
    for set in &raw.ultrafilter {
        let mut m: Mask = 0;
        for &alpha in set {
            if alpha >= chains.len() {
                return Err(located(
                    path,
                    Error::Precondition(format!("ultrafilter mentions chain {alpha}")),
                ));
            }
            m |= 1 << alpha;
        }
        u.push(m);
    }
    Ok((chains, u))
}

/// A section as written in output files.
#[derive(Clone, Debug, Serialize)]
pub struct RawSection {
    pub domain: Vec<String>,
    pub values: BTreeMap<String, String>,
}

/// A product structure with the representative section of each element.
#[derive(Clone, Debug, Serialize)]
pub struct ProductFile {
    #[serde(flatten)]
    pub structure: RawStructure,
    pub provenance: BTreeMap<String, RawSection>,
}

pub fn product_file(fp: &FilterProduct) -> ProductFile {
    let sys = fp.system();
    let idx = sys.index();
    let provenance = (0..fp.len())
        .map(|c| {
            let s = fp.representative(c);
            let domain: Vec<usize> = (0..idx.len())
                .filter(|&x| s.domain & (1 << x) != 0)
                .collect();
            let section = RawSection {
                domain: domain.iter().map(|&x| idx.name(x).to_string()).collect(),
                values: domain
                    .iter()
                    .map(|&x| {
                        (
                            idx.name(x).to_string(),
                            sys.structure(x).name(s.value(x)).to_string(),
                        )
                    })
                    .collect(),
            };
            (fp.structure().name(c).to_string(), section)
        })
        .collect();
    ProductFile {
        structure: fp.structure().to_raw(),
        provenance,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}
