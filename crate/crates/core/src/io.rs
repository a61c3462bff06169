//! JSON network and action files.
//!
//! ```json
//! {
//!   "schema": "diffusion-network/1",
//!   "items": 1,
//!   "seller_neighbors": [0],
//!   "buyers": [
//!     { "id": 0, "label": "A", "valuation": "7", "neighbors": [1] },
//!     { "id": 1, "valuation": "2.5", "neighbors": [0] }
//!   ],
//!   "actions": [ { "id": 0, "valuation": "7", "invited": [] }, { "id": 1, "nil": true } ]
//! }
//! ```
//!
//! Valuations are decimal strings (or `p/q` ratios) so exact values survive a
//! round trip. Buyers without an action record act truthfully.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{truthful_profile, Action, ActionProfile, BuyerId, BuyerType, Network, NetworkError};
use crate::value::Value;

pub const NETWORK_SCHEMA: &str = "diffusion-network/1";
pub const ACTIONS_SCHEMA: &str = "diffusion-actions/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FileError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("invalid network: {0}")]
    Network(#[from] NetworkError),
}

impl FileError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        FileError::Field { path: path.into(), message: message.into() }
    }
}

impl From<serde_json::Error> for FileError {
    fn from(e: serde_json::Error) -> Self {
        FileError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyerRecord {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub valuation: String,
    pub neighbors: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRecord {
    pub id: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub nil: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invited: Option<Vec<u32>>,
}

/// On-disk network description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub schema: String,
    pub items: usize,
    pub seller_neighbors: Vec<u32>,
    pub buyers: Vec<BuyerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<ActionRecord>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionsFile {
    schema: String,
    actions: Vec<ActionRecord>,
}

/// Display names of buyers; unlabeled buyers print as their id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels(BTreeMap<BuyerId, String>);

impl Labels {
    pub fn name(&self, id: BuyerId) -> String {
        self.0.get(&id).cloned().unwrap_or_else(|| id.to_string())
    }

    pub fn get(&self, id: BuyerId) -> Option<&str> {
        self.0.get(&id).map(String::as_str)
    }

    /// Reverse lookup by label.
    pub fn id_of(&self, label: &str) -> Option<BuyerId> {
        self.0.iter().find(|(_, l)| l.as_str() == label).map(|(&id, _)| id)
    }
}

impl FromIterator<(BuyerId, String)> for Labels {
    fn from_iter<T: IntoIterator<Item = (BuyerId, String)>>(iter: T) -> Self {
        Labels(iter.into_iter().collect())
    }
}

/// A parsed network file.
#[derive(Debug, Clone)]
pub struct LoadedNetwork<V> {
    pub network: Network<V>,
    pub labels: Labels,
    /// Profile from the embedded action records, if any.
    pub profile: Option<ActionProfile<V>>,
}

impl<V: Value> LoadedNetwork<V> {
    /// Embedded profile, or the truthful one.
    pub fn profile_or_truthful(&self) -> ActionProfile<V> {
        self.profile.clone().unwrap_or_else(|| truthful_profile(&self.network))
    }
}

fn parse_value<V: Value>(s: &str, path: String) -> Result<V, FileError> {
    V::parse_decimal(s).ok_or_else(|| FileError::field(path, format!("`{s}` is not a decimal value")))
}

pub fn parse_network<V: Value>(text: &str) -> Result<LoadedNetwork<V>, FileError> {
    let file: NetworkFile = serde_json::from_str(text)?;
    network_from_file(&file)
}

pub fn network_from_file<V: Value>(file: &NetworkFile) -> Result<LoadedNetwork<V>, FileError> {
    if file.schema != NETWORK_SCHEMA {
        return Err(FileError::field("schema", format!("expected `{NETWORK_SCHEMA}`, found `{}`", file.schema)));
    }
    if file.items == 0 {
        return Err(FileError::field("items", "must be at least 1"));
    }
    let mut buyers = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for (k, rec) in file.buyers.iter().enumerate() {
        let id = BuyerId(rec.id);
        if id.is_seller() {
            return Err(FileError::field(format!("buyers[{k}].id"), "reserved for the seller"));
        }
        let valuation: V = parse_value(&rec.valuation, format!("buyers[{k}].valuation"))?;
        if valuation.is_negative() {
            return Err(FileError::field(format!("buyers[{k}].valuation"), "must be non-negative"));
        }
        let neighbors = rec.neighbors.iter().map(|&n| BuyerId(n)).collect();
        if buyers.insert(id, BuyerType { valuation, neighbors }).is_some() {
            return Err(FileError::field(format!("buyers[{k}].id"), format!("duplicate id {id}")));
        }
        if let Some(l) = &rec.label {
            labels.insert(id, l.clone());
        }
    }
    let seller_neighbors: BTreeSet<BuyerId> = file.seller_neighbors.iter().map(|&n| BuyerId(n)).collect();
    let network = Network::new(seller_neighbors, buyers, file.items)?;
    let profile = match &file.actions {
        Some(records) => Some(profile_from_records(&network, records, "actions")?),
        None => None,
    };
    Ok(LoadedNetwork { network, labels: Labels(labels), profile })
}

/// Parses a standalone action file against `net`.
pub fn parse_actions<V: Value>(text: &str, net: &Network<V>) -> Result<ActionProfile<V>, FileError> {
    let file: ActionsFile = serde_json::from_str(text)?;
    if file.schema != ACTIONS_SCHEMA {
        return Err(FileError::field("schema", format!("expected `{ACTIONS_SCHEMA}`, found `{}`", file.schema)));
    }
    profile_from_records(net, &file.actions, "actions")
}

fn profile_from_records<V: Value>(
    net: &Network<V>,
    records: &[ActionRecord],
    field: &str,
) -> Result<ActionProfile<V>, FileError> {
    let mut profile = truthful_profile(net);
    for (k, rec) in records.iter().enumerate() {
        let id = BuyerId(rec.id);
        if net.buyer(id).is_none() {
            return Err(FileError::field(format!("{field}[{k}].id"), format!("unknown buyer {id}")));
        }
        let action = if rec.nil {
            if rec.valuation.is_some() || rec.invited.is_some() {
                return Err(FileError::field(format!("{field}[{k}]"), "a nil action carries no report"));
            }
            Action::Nil
        } else {
            let Some(v) = &rec.valuation else {
                return Err(FileError::field(format!("{field}[{k}].valuation"), "missing"));
            };
            let valuation: V = parse_value(v, format!("{field}[{k}].valuation"))?;
            if valuation.is_negative() {
                return Err(FileError::field(format!("{field}[{k}].valuation"), "must be non-negative"));
            }
            let invited = rec.invited.iter().flatten().map(|&n| BuyerId(n)).collect();
            Action::Report { valuation, invited }
        };
        profile.set(id, action);
    }
    Ok(profile)
}

pub fn action_records<V: Value>(profile: &ActionProfile<V>) -> Vec<ActionRecord> {
    profile
        .actions()
        .iter()
        .map(|(id, a)| match a {
            Action::Nil => ActionRecord { id: id.0, nil: true, valuation: None, invited: None },
            Action::Report { valuation, invited } => ActionRecord {
                id: id.0,
                nil: false,
                valuation: Some(valuation.to_decimal_string()),
                invited: Some(invited.iter().map(|n| n.0).collect()),
            },
        })
        .collect()
}

pub fn network_to_file<V: Value>(net: &Network<V>, labels: &Labels, profile: Option<&ActionProfile<V>>) -> NetworkFile {
    NetworkFile {
        schema: NETWORK_SCHEMA.to_string(),
        items: net.item_count(),
        seller_neighbors: net.seller_neighbors().iter().map(|n| n.0).collect(),
        buyers: net
            .buyers()
            .iter()
            .map(|(&id, b)| BuyerRecord {
                id: id.0,
                label: labels.get(id).map(str::to_string),
                valuation: b.valuation.to_decimal_string(),
                neighbors: b.neighbors.iter().filter(|n| !n.is_seller()).map(|n| n.0).collect(),
            })
            .collect(),
        actions: profile.map(action_records),
    }
}

/// Pretty JSON with a trailing newline; identical inputs give identical bytes.
pub fn write_network<V: Value>(net: &Network<V>, labels: &Labels, profile: Option<&ActionProfile<V>>) -> String {
    let mut s = serde_json::to_string_pretty(&network_to_file(net, labels, profile)).expect("serializable");
    s.push('\n');
    s
}

pub fn write_actions<V: Value>(profile: &ActionProfile<V>) -> String {
    let file = ActionsFile { schema: ACTIONS_SCHEMA.to_string(), actions: action_records(profile) };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::check_feasible;
    use crate::value::Exact;

    const SMALL: &str = r#"{
  "schema": "diffusion-network/1",
  "items": 2,
  "seller_neighbors": [0],
  "buyers": [
    { "id": 0, "label": "A", "valuation": "7", "neighbors": [1] },
    { "id": 1, "valuation": "2.5", "neighbors": [0] }
  ]
}"#;

    #[test]
    fn parses_small_file() {
        let loaded: LoadedNetwork<Exact> = parse_network(SMALL).unwrap();
        assert_eq!(loaded.network.item_count(), 2);
        assert_eq!(loaded.network.valuation(BuyerId(1)), Some(&Exact::new(5, 2)));
        assert_eq!(loaded.labels.name(BuyerId(0)), "A");
        assert_eq!(loaded.labels.name(BuyerId(1)), "1");
        assert!(loaded.profile.is_none());
    }

    #[test]
    fn syntax_errors_carry_locations() {
        let err = parse_network::<Exact>("{\n  \"schema\": \n}").unwrap_err();
        assert!(matches!(err, FileError::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn field_errors_carry_paths() {
        let bad = SMALL.replace("\"2.5\"", "\"two\"");
        let err = parse_network::<Exact>(&bad).unwrap_err();
        assert_eq!(
            err,
            FileError::Field { path: "buyers[1].valuation".into(), message: "`two` is not a decimal value".into() }
        );
        let bad = SMALL.replace("diffusion-network/1", "v0");
        assert!(matches!(parse_network::<Exact>(&bad), Err(FileError::Field { .. })));
        let bad = SMALL.replace("\"neighbors\": [0]", "\"neighbors\": []");
        assert!(matches!(parse_network::<Exact>(&bad), Err(FileError::Network(NetworkError::Asymmetric(..)))));
    }

    #[test]
    fn actions_override_truthful() {
        let loaded: LoadedNetwork<Exact> = parse_network(SMALL).unwrap();
        let text =
            r#"{"schema":"diffusion-actions/1","actions":[{"id":0,"valuation":"3","invited":[]},{"id":1,"nil":true}]}"#;
        let p = parse_actions(text, &loaded.network).unwrap();
        assert_eq!(p.reported(BuyerId(0)), Some(&Exact::from_int(3)));
        assert!(p.action(BuyerId(1)).is_nil());
        assert_eq!(check_feasible(&loaded.network, &p), Ok(()));
        let back = parse_actions(&write_actions(&p), &loaded.network).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn round_trip() {
        let loaded: LoadedNetwork<Exact> = parse_network(SMALL).unwrap();
        let text = write_network(&loaded.network, &loaded.labels, None);
        let again: LoadedNetwork<Exact> = parse_network(&text).unwrap();
        assert_eq!(again.network, loaded.network);
        assert_eq!(again.labels, loaded.labels);
        assert_eq!(write_network(&again.network, &again.labels, None), text);
    }
}
