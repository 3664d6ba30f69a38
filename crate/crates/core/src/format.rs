//! On-disk formats: tree JSON documents and trajectory CSV.
//!
//! A raw tree document:
//!
//! ```json
//! {"classes": ["apples", "citrus"],
//!  "states": [{"id": "psi1", "prob": "1/3",
//!              "alternatives": [{"id": "apples", "class": "apples", "payoff": 3}]}]}
//! ```
//!
//! A reduced tree document sets `"reduced": true` and lists states as
//! `{"classes": [...], "prob": ..., "payoffs": {"<class>": number}}`.
//! Probabilities are numbers or `"a/b"` strings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Event, Trajectory};
use crate::error::{CpalError, Result};
use crate::tree::{
    reduce, Probability, RawAlternative, RawState, RawTree, ReducedState, ReducedTree,
};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeDocument {
    Raw(RawTree),
    Reduced(ReducedTree),
}

impl TreeDocument {
    pub fn into_reduced(self) -> Result<ReducedTree> {
        match self {
            TreeDocument::Raw(raw) => reduce(&raw),
            TreeDocument::Reduced(t) => Ok(t),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ProbField {
    Number(f64),
    Text(String),
}

impl ProbField {
    fn parse(&self) -> Result<Probability> {
        match self {
            ProbField::Number(x) => Ok(Probability::new(*x)),
            ProbField::Text(s) => Probability::parse(s),
        }
    }

    fn from_probability(p: Probability) -> Self {
        match p.exact() {
            Some(r) if *r.denom() != 1 => ProbField::Text(format!("{}/{}", r.numer(), r.denom())),
            _ => ProbField::Number(p.value()),
        }
    }
}

#[derive(Debug, Deserialize)]
struct Document {
    classes: Vec<String>,
    #[serde(default)]
    reduced: bool,
    states: Vec<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawStateDoc {
    id: String,
    prob: ProbField,
    alternatives: Vec<RawAltDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawAltDoc {
    id: String,
    class: String,
    payoff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReducedStateDoc {
    classes: Vec<String>,
    prob: ProbField,
    payoffs: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
struct ReducedDoc {
    reduced: bool,
    classes: Vec<String>,
    states: Vec<ReducedStateDoc>,
}

#[derive(Debug, Serialize)]
struct RawDoc {
    classes: Vec<String>,
    states: Vec<RawStateDoc>,
}

pub fn parse_tree(text: &str) -> Result<TreeDocument> {
    let doc: Document = serde_json::from_str(text)?;
    if doc.reduced {
        let index = |name: &str, k: usize| {
            doc.classes.iter().position(|c| c == name).ok_or_else(|| {
                CpalError::validation(format!("states[{k}]: unknown class {name:?}"))
            })
        };
        let mut states = Vec::with_capacity(doc.states.len());
        for (k, value) in doc.states.iter().enumerate() {
            let st: ReducedStateDoc = serde_json::from_value(value.clone())
                .map_err(|e| CpalError::validation(format!("states[{k}]: {e}")))?;
            let mut members = Vec::with_capacity(st.classes.len());
            let mut payoffs = Vec::with_capacity(st.classes.len());
            for name in &st.classes {
                members.push(index(name, k)?);
                let x = st.payoffs.get(name).ok_or_else(|| {
                    CpalError::validation(format!("states[{k}]: no payoff for class {name:?}"))
                })?;
                payoffs.push(*x);
            }
            if st.payoffs.len() != st.classes.len() {
                return Err(CpalError::validation(format!(
                    "states[{k}]: payoffs given for classes not offered at the state"
                )));
            }
            states.push(ReducedState::new(members, st.prob.parse()?, payoffs));
        }
        Ok(TreeDocument::Reduced(ReducedTree::new(doc.classes, states)?))
    } else {
        let mut states = Vec::with_capacity(doc.states.len());
        for (k, value) in doc.states.iter().enumerate() {
            let st: RawStateDoc = serde_json::from_value(value.clone())
                .map_err(|e| CpalError::validation(format!("states[{k}]: {e}")))?;
            states.push(RawState {
                id: st.id,
                prob: st.prob.parse()?,
                alternatives: st
                    .alternatives
                    .into_iter()
                    .map(|a| RawAlternative {
                        id: a.id,
                        class: a.class,
                        payoff: a.payoff,
                    })
                    .collect(),
            });
        }
        Ok(TreeDocument::Raw(RawTree::new(doc.classes, states)?))
    }
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<TreeDocument> {
    let text = std::fs::read_to_string(path)?;
    parse_tree(&text)
}

pub fn reduced_to_json(t: &ReducedTree) -> String {
    let doc = ReducedDoc {
        reduced: true,
        classes: t.classes().to_vec(),
        states: t
            .states()
            .iter()
            .map(|st| ReducedStateDoc {
                classes: st.members().iter().map(|&c| t.classes()[c].clone()).collect(),
                prob: ProbField::from_probability(st.probability()),
                payoffs: st
                    .members()
                    .iter()
                    .zip(st.payoffs())
                    .map(|(&c, &x)| (t.classes()[c].clone(), x))
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

pub fn raw_to_json(t: &RawTree) -> String {
    let doc = RawDoc {
        classes: t.classes().to_vec(),
        states: t
            .states()
            .iter()
            .map(|st| RawStateDoc {
                id: st.id.clone(),
                prob: ProbField::from_probability(st.prob),
                alternatives: st
                    .alternatives
                    .iter()
                    .map(|a| RawAltDoc {
                        id: a.id.clone(),
                        class: a.class.clone(),
                        payoff: a.payoff,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// Fixed 17-significant-digit float formatting used by every CSV writer.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `t,v_<class>,...` rows.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    classes: &[String],
    traj: &Trajectory,
) -> std::io::Result<()> {
    write!(out, "t")?;
    for c in classes {
        write!(out, ",v_{c}")?;
    }
    writeln!(out)?;
    for (t, v) in traj.times.iter().zip(&traj.snapshots) {
        write!(out, "{}", fmt_float(*t))?;
        for x in v.iter() {
            write!(out, ",{}", fmt_float(*x))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `k,omega,chosen,payoff,alpha` rows. `omega` is the state's classes
/// joined by `|`.
pub fn write_events_csv<W: Write>(
    out: &mut W,
    tree: &ReducedTree,
    events: &[Event],
) -> std::io::Result<()> {
    writeln!(out, "k,omega,chosen,payoff,alpha")?;
    for e in events {
        let omega: Vec<&str> = tree.states()[e.state]
            .members()
            .iter()
            .map(|&c| tree.classes()[c].as_str())
            .collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            e.k,
            omega.join("|"),
            tree.classes()[e.chosen],
            fmt_float(e.payoff),
            fmt_float(e.alpha)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const BOB: &str = r#"{
      "classes": ["apples", "citrus"],
      "states": [
        {"id": "psi1", "prob": "1/3", "alternatives": [
          {"id": "apples", "class": "apples", "payoff": 3},
          {"id": "limes", "class": "citrus", "payoff": 2}]},
        {"id": "psi2", "prob": "1/3", "alternatives": [
          {"id": "lemons", "class": "citrus", "payoff": 3},
          {"id": "limes", "class": "citrus", "payoff": 1}]},
        {"id": "psi3", "prob": "1/3", "alternatives": [
          {"id": "lemons", "class": "citrus", "payoff": 4},
          {"id": "apples", "class": "apples", "payoff": 1}]}
      ]
    }"#;

    #[test]
    fn parses_raw_bob() {
        let doc = parse_tree(BOB).unwrap();
        assert_eq!(doc, TreeDocument::Raw(fixtures::bob_raw()));
    }

    #[test]
    fn reduced_rewrite_is_stable() {
        let t = parse_tree(BOB).unwrap().into_reduced().unwrap();
        let once = reduced_to_json(&t);
        let again = reduced_to_json(&parse_tree(&once).unwrap().into_reduced().unwrap());
        assert_eq!(once, again);
        assert!(once.contains("\"2/3\""));
    }

    #[test]
    fn raw_round_trip() {
        let raw = fixtures::bob_raw();
        let back = parse_tree(&raw_to_json(&raw)).unwrap();
        assert_eq!(back, TreeDocument::Raw(raw));
    }

    #[test]
    fn malformed_json_is_an_error() {
        let err = parse_tree("{\"classes\": [").unwrap_err();
        assert!(matches!(err, CpalError::Json(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_payoff_is_reported() {
        let text = r#"{"reduced": true, "classes": ["a", "b"],
            "states": [{"classes": ["a", "b"], "prob": 1, "payoffs": {"a": 1}}]}"#;
        let err = parse_tree(text).unwrap_err();
        assert!(err.to_string().contains("states[0]"));
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(1.0 / 3.0), "3.3333333333333331e-1");
    }
}
