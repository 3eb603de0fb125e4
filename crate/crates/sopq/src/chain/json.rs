//! JSON chain schema.
//!
//! ```text
//! {"p":2,"q":3,"g":2,
//!  "nodes":[{"side":"V","weight":1,"line":{"atom":"L","power":1,"kExp":0}}, ...],
//!  "arrows":[[["W",0],["V",1]], ...]}
//! ```
//!
//! Optional top-level keys: `kind` (`"split-isotropic"`), `twist` (exponent of
//! `K` in the twisting bundle, default 1) and `atoms` (declarations of atoms
//! other than the built-ins `O` and `I`). Endpoints may carry a third element,
//! the index among nodes at the same `(side, weight)`, and a fourth, the
//! sub-chain label.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::*;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainDoc {
    p: u32,
    q: u32,
    g: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    twist: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    atoms: Vec<AtomDoc>,
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    arrows: Vec<[Value; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDoc {
    name: String,
    #[serde(default)]
    degree: i64,
    #[serde(default)]
    torsion: u8,
    #[serde(default)]
    sw1: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    side: String,
    weight: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    sub: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line: Option<LineDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot: Option<SlotDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bundle: Option<BundleDoc>,
}

fn is_zero(x: &u8) -> bool {
    *x == 0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDoc {
    atom: String,
    power: i64,
    #[serde(rename = "kExp")]
    k_exp: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct SlotDoc {
    rank: u32,
    det_atom: String,
    sw2: u8,
    stability: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleDoc {
    rank: u32,
    degree: i64,
}

fn builtin(name: &str) -> Option<Atom> {
    match name {
        "O" => Some(Atom::trivial()),
        "I" => Some(Atom::two_torsion("I")),
        _ => None,
    }
}

fn parse_side(s: &str) -> Result<Side, ChainError> {
    match s {
        "V" => Ok(Side::V),
        "W" => Ok(Side::W),
        other => Err(ChainError::Schema(format!(
            "side must be \"V\" or \"W\", got {other:?}"
        ))),
    }
}

fn parse_endpoint(v: &Value) -> Result<NodeRef, ChainError> {
    let bad = || ChainError::Schema(format!("bad arrow endpoint {v}"));
    let arr = v.as_array().ok_or_else(bad)?;
    if !(2..=4).contains(&arr.len()) {
        return Err(bad());
    }
    let side = parse_side(arr[0].as_str().ok_or_else(bad)?)?;
    let weight = arr[1].as_i64().ok_or_else(bad)?;
    let index = match arr.get(2) {
        Some(x) => x.as_u64().ok_or_else(bad)? as usize,
        None => 0,
    };
    let sub = match arr.get(3) {
        Some(x) => u8::try_from(x.as_u64().ok_or_else(bad)?).map_err(|_| bad())?,
        None => 0,
    };
    Ok(NodeRef {
        side,
        weight,
        index,
        sub,
    })
}

fn emit_endpoint(r: NodeRef) -> Value {
    let mut v = vec![Value::from(r.side.as_str()), Value::from(r.weight)];
    if r.index != 0 || r.sub != 0 {
        v.push(Value::from(r.index as u64));
    }
    if r.sub != 0 {
        v.push(Value::from(r.sub as u64));
    }
    Value::Array(v)
}

/// Parses a chain from its JSON form and validates it.
pub fn parse_chain(text: &str) -> Result<FixedPointChain, ChainError> {
    let doc: ChainDoc =
        serde_json::from_str(text).map_err(|e| ChainError::Schema(e.to_string()))?;
    let mut atoms: BTreeMap<String, Atom> = BTreeMap::new();
    for a in &doc.atoms {
        let atom = Atom {
            name: a.name.clone(),
            degree: a.degree,
            torsion_order: a.torsion,
            sw1_nonzero: a.sw1,
        };
        if atoms.insert(a.name.clone(), atom).is_some() {
            return Err(ChainError::Schema(format!(
                "atom {} declared twice",
                a.name
            )));
        }
    }
    let lookup = |name: &str| -> Result<Atom, ChainError> {
        atoms
            .get(name)
            .cloned()
            .or_else(|| builtin(name))
            .ok_or_else(|| ChainError::Schema(format!("undeclared atom {name:?}")))
    };

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in &doc.nodes {
        let side = parse_side(&n.side)?;
        let payload = match (&n.line, &n.slot, &n.bundle) {
            (Some(l), None, None) => {
                Payload::Line(LineClass::new(lookup(&l.atom)?, l.power, l.k_exp))
            }
            (None, Some(s), None) => Payload::Slot(OrthoSlot {
                rank: s.rank,
                det_atom: lookup(&s.det_atom)?,
                sw2: s.sw2,
                stability: SlotStability::parse(&s.stability).ok_or_else(|| {
                    ChainError::Schema(format!("unknown slot stability {:?}", s.stability))
                })?,
            }),
            (None, None, Some(b)) => Payload::Bundle(BundleClass {
                rank: b.rank,
                degree: b.degree,
            }),
            _ => {
                return Err(ChainError::Schema(
                    "each node needs exactly one of \"line\", \"slot\", \"bundle\"".into(),
                ))
            }
        };
        nodes.push(NodeSpec {
            side,
            weight: n.weight,
            sub: n.sub,
            payload,
        });
    }
    let mut arrows = Vec::with_capacity(doc.arrows.len());
    for [a, b] in &doc.arrows {
        arrows.push((parse_endpoint(a)?, parse_endpoint(b)?));
    }
    let kind = match doc.kind.as_deref() {
        None | Some("integral") => ChainKind::Integral,
        Some("split-isotropic") => ChainKind::SplitIsotropic,
        Some(other) => return Err(ChainError::Schema(format!("unknown chain kind {other:?}"))),
    };
    let mut b = ChainBuilder::new(doc.p, doc.q, doc.g)
        .kind(kind)
        .nodes(nodes)
        .arrows(arrows);
    if let Some(t) = doc.twist {
        b = b.twist(t);
    }
    b.build()
}

fn emit_doc(c: &FixedPointChain) -> ChainDoc {
    let mut atoms: BTreeMap<String, Atom> = BTreeMap::new();
    let mut note = |a: &Atom| {
        if builtin(&a.name).as_ref() != Some(a) {
            atoms.insert(a.name.clone(), a.clone());
        }
    };
    for n in c.nodes() {
        match &n.payload {
            Payload::Line(l) => note(&l.atom),
            Payload::Slot(s) => note(&s.det_atom),
            Payload::Bundle(_) => {}
        }
    }
    let nodes = c
        .nodes()
        .iter()
        .map(|n| {
            let mut d = NodeDoc {
                side: n.side.as_str().into(),
                weight: n.weight,
                sub: n.sub,
                line: None,
                slot: None,
                bundle: None,
            };
            match &n.payload {
                Payload::Line(l) => {
                    d.line = Some(LineDoc {
                        atom: l.atom.name.clone(),
                        power: l.atom_power,
                        k_exp: l.k_exp,
                    })
                }
                Payload::Slot(s) => {
                    d.slot = Some(SlotDoc {
                        rank: s.rank,
                        det_atom: s.det_atom.name.clone(),
                        sw2: s.sw2,
                        stability: s.stability.as_str().into(),
                    })
                }
                Payload::Bundle(b) => {
                    d.bundle = Some(BundleDoc {
                        rank: b.rank,
                        degree: b.degree,
                    })
                }
            }
            d
        })
        .collect();
    let arrows = c
        .arrows()
        .iter()
        .map(|a| {
            [
                emit_endpoint(c.node_ref(a.from)),
                emit_endpoint(c.node_ref(a.to)),
            ]
        })
        .collect();
    ChainDoc {
        p: c.p(),
        q: c.q(),
        g: c.g(),
        kind: (c.kind() == ChainKind::SplitIsotropic).then(|| "split-isotropic".to_string()),
        twist: (c.twist() != 1).then_some(c.twist()),
        atoms: atoms
            .into_values()
            .map(|a| AtomDoc {
                name: a.name,
                degree: a.degree,
                torsion: a.torsion_order,
                sw1: a.sw1_nonzero,
            })
            .collect(),
        nodes,
        arrows,
    }
}

/// Compact JSON with a fixed key order.
pub fn emit_chain(c: &FixedPointChain) -> String {
    serde_json::to_string(&emit_doc(c)).expect("chain documents always serialise")
}

/// The JSON document as a value, for embedding in larger outputs.
pub fn chain_value(c: &FixedPointChain) -> Value {
    serde_json::to_value(emit_doc(c)).expect("chain documents always serialise")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SO23: &str = r#"{"p":2,"q":3,"g":2,"atoms":[{"name":"L","degree":-1,"torsion":0,"sw1":false}],"nodes":[{"side":"V","weight":-1,"line":{"atom":"L","power":-1,"kExp":0}},{"side":"V","weight":1,"line":{"atom":"L","power":1,"kExp":0}},{"side":"W","weight":0,"slot":{"rank":3,"detAtom":"O","sw2":0,"stability":"stable"}}],"arrows":[[["V",-1],["W",0]],[["W",0],["V",1]]]}"#;

    #[test]
    fn emitted_form_is_a_fixed_point() {
        let c = parse_chain(SO23).unwrap();
        assert_eq!(emit_chain(&c), SO23);
    }

    #[test]
    fn missing_dual_arrow_is_filled_in() {
        let text = SO23.replace(r#"[["V",-1],["W",0]],"#, "");
        let c = parse_chain(&text).unwrap();
        assert_eq!(emit_chain(&c), SO23);
    }

    #[test]
    fn schema_errors() {
        assert_eq!(parse_chain("{").unwrap_err().name(), "Schema");
        let text = SO23.replace("\"L\",\"power\":1", "\"Z\",\"power\":1");
        assert_eq!(parse_chain(&text).unwrap_err().name(), "Schema");
    }

    #[test]
    fn indexed_endpoints() {
        let text = r#"{"p":2,"q":2,"g":2,"nodes":[{"side":"V","weight":0,"line":{"atom":"I","power":1,"kExp":0}},{"side":"V","weight":0,"line":{"atom":"O","power":0,"kExp":0}},{"side":"W","weight":-1,"line":{"atom":"O","power":0,"kExp":1}},{"side":"W","weight":1,"line":{"atom":"O","power":0,"kExp":-1}}],"arrows":[[["V",0,1],["W",1]]]}"#;
        // Arrow O -> K^-1 ⊗ K is a unit; det V = I is not matched by det W.
        assert_eq!(parse_chain(text).unwrap_err().name(), "DeterminantMismatch");
        let fixed = text.replace(r#""atom":"I","power":1"#, r#""atom":"O","power":0"#);
        let c = parse_chain(&fixed).unwrap();
        assert_eq!(c.arrows().len(), 2);
        assert_eq!(parse_chain(&emit_chain(&c)).unwrap(), c);
    }
}
