//! Random edits to a filled Spec IR: ones the validator must flag and ones
//! confined to fill slots that it must accept.

use rand::Rng;
use serde_json::{json, Value};

use ds2sc::spec_ir::{is_anchor, JsonPath, PathSeg, SpecIrTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    RenameKey,
    DeleteKey,
    AddKey,
    ChangeLeaf,
    ChangeType,
    ResizeArray,
    /// Puts a fill slot back to its marker.
    Unfill,
}

#[derive(Debug, Default)]
struct Sites {
    /// Object member paths outside fill slots.
    keys: Vec<JsonPath>,
    objects: Vec<JsonPath>,
    leaves: Vec<JsonPath>,
    arrays: Vec<JsonPath>,
    /// Whole-value fill slots and whether each is a list fill.
    slots: Vec<(JsonPath, bool)>,
}

fn is_list_fill(items: &[Value]) -> bool {
    items.len() == 1 && items[0].as_str().and_then(is_anchor).is_some()
}

fn walk(v: &Value, path: &JsonPath, s: &mut Sites) {
    match v {
        Value::String(x) if is_anchor(x).is_some() => s.slots.push((path.clone(), false)),
        Value::Array(items) if is_list_fill(items) => s.slots.push((path.clone(), true)),
        Value::Object(map) => {
            s.objects.push(path.clone());
            for (k, item) in map {
                let p = path.key(k);
                s.keys.push(p.clone());
                walk(item, &p, s);
            }
        }
        Value::Array(items) => {
            s.arrays.push(path.clone());
            for (i, item) in items.iter().enumerate() {
                walk(item, &path.index(i), s);
            }
        }
        _ => s.leaves.push(path.clone()),
    }
}

fn sites(tpl: &SpecIrTemplate) -> Sites {
    let mut s = Sites::default();
    walk(&tpl.root, &JsonPath::root(), &mut s);
    s
}

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn split(path: &JsonPath) -> (JsonPath, String) {
    let mut parent = path.clone();
    match parent.0.pop() {
        Some(PathSeg::Key(k)) => (parent, k),
        other => panic!("not an object member: {other:?}"),
    }
}

/// Applies one edit the validator must flag: a structural change, a
/// pre-filled value change or an anchor put back unfilled.
pub fn tamper<R: Rng>(tpl: &SpecIrTemplate, doc: &Value, rng: &mut R) -> (Value, Mutation, String) {
    let s = sites(tpl);
    let mut out = doc.clone();
    let kinds = [
        Mutation::RenameKey,
        Mutation::DeleteKey,
        Mutation::AddKey,
        Mutation::ChangeLeaf,
        Mutation::ChangeType,
        Mutation::ResizeArray,
        Mutation::Unfill,
    ];
    let kind = *pick(rng, &kinds);
    let path = match kind {
        Mutation::RenameKey | Mutation::DeleteKey => {
            let path = pick(rng, &s.keys).clone();
            let (parent, key) = split(&path);
            let obj = parent.lookup_mut(&mut out).unwrap().as_object_mut().unwrap();
            let val = obj.remove(&key).unwrap();
            if kind == Mutation::RenameKey {
                let renamed = match rng.random_range(0..3) {
                    0 => key.to_uppercase() + "_",
                    1 => format!("{key}s"),
                    _ => format!("x_{key}"),
                };
                obj.insert(renamed, val);
            }
            path
        }
        Mutation::AddKey => {
            let path = pick(rng, &s.objects).clone();
            let obj = path.lookup_mut(&mut out).unwrap().as_object_mut().unwrap();
            obj.insert(format!("extra_{}", rng.random_range(0..1000)), json!("added"));
            path
        }
        Mutation::ChangeLeaf | Mutation::ChangeType => {
            let path = pick(rng, &s.leaves).clone();
            let v = path.lookup_mut(&mut out).unwrap();
            *v = if kind == Mutation::ChangeLeaf {
                match v.clone() {
                    Value::String(x) => Value::String(x + " "),
                    Value::Number(n) => json!(n.as_f64().unwrap() + 1.0),
                    Value::Bool(b) => json!(!b),
                    _ => json!("was null"),
                }
            } else {
                match v {
                    Value::String(x) => json!([x.clone()]),
                    Value::Number(n) => json!(n.to_string()),
                    Value::Bool(b) => json!(if *b { 1 } else { 0 }),
                    _ => json!(0),
                }
            };
            path
        }
        Mutation::ResizeArray => {
            let path = pick(rng, &s.arrays).clone();
            let arr = path.lookup_mut(&mut out).unwrap().as_array_mut().unwrap();
            if arr.is_empty() || rng.random_bool(0.5) {
                arr.push(arr.last().cloned().unwrap_or(json!(0)));
            } else {
                arr.pop();
            }
            path
        }
        Mutation::Unfill => {
            let (path, _) = pick(rng, &s.slots).clone();
            *path.lookup_mut(&mut out).unwrap() = path.lookup(&tpl.root).unwrap().clone();
            path
        }
    };
    (out, kind, path.to_string())
}

fn random_text<R: Rng>(rng: &mut R) -> String {
    const WORDS: [&str; 10] = ["10", "mV", "gain", "-3.5", "V/V", "clamp", "{", "\"", "null", "<FILL"];
    (0..rng.random_range(1..5)).map(|_| *pick(rng, &WORDS)).collect::<Vec<_>>().join(" ")
}

fn random_fill<R: Rng>(rng: &mut R, list: bool) -> Value {
    if list {
        return match rng.random_range(0..3) {
            0 => json!("null"),
            _ => Value::Array((0..rng.random_range(0..6)).map(|_| json!(random_text(rng).replace('<', "["))).collect()),
        };
    }
    match rng.random_range(0..5) {
        0 => json!("null"),
        1 => json!(rng.random_range(-1e3..1e3)),
        2 => json!(rng.random_bool(0.5)),
        3 => json!({"note": random_text(rng).replace('<', "[")}),
        _ => json!(random_text(rng).replace('<', "[")),
    }
}

/// Rewrites a random non-empty subset of fill slots with arbitrary legal values.
pub fn anchor_only_edit<R: Rng>(tpl: &SpecIrTemplate, doc: &Value, rng: &mut R) -> Value {
    let s = sites(tpl);
    let mut out = doc.clone();
    let first = rng.random_range(0..s.slots.len());
    for (i, (path, list)) in s.slots.iter().enumerate() {
        if i == first || rng.random_bool(0.4) {
            *path.lookup_mut(&mut out).unwrap() = random_fill(rng, *list);
        }
    }
    out
}
