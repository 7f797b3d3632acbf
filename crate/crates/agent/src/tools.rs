//! Tool registry: descriptors published by `tools/list` and argument
//! validation for `tools/call`. Both are driven by the same parameter table
//! so the advertised schema and the accepted inputs cannot drift apart.

use serde_json::{json, Map, Value};
use swarm_tuner_core::HyperParams;

use crate::protocol::RpcError;

pub const RUN_TOOL: &str = "run_ws_pso_cm";
pub const SCENARIO_TOOL: &str = "get_scenario";
pub const HISTORY_TOOL: &str = "get_history";

pub const DEFAULT_P_ITER: u64 = 50;
pub const DEFAULT_HISTORY_LIMIT: u64 = 20;
pub const MAX_P_ITER: u64 = 10_000;
pub const MAX_P_NUM: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Integer,
    Number,
}

#[derive(Debug, Clone, Copy)]
struct ParamSpec {
    name: &'static str,
    kind: Kind,
    min: f64,
    max: Option<f64>,
    default: Option<u64>,
    description: &'static str,
}

const fn int(name: &'static str, min: f64, max: f64, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        kind: Kind::Integer,
        min,
        max: Some(max),
        default: None,
        description,
    }
}

const fn num(name: &'static str, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        kind: Kind::Number,
        min: 0.0,
        max: None,
        default: None,
        description,
    }
}

const RUN_PARAMS: [ParamSpec; 10] = [
    int("p_num", 2.0, MAX_P_NUM as f64, "Number of particles."),
    num("omega", "Inertia weight."),
    num("c1", "Cognitive coefficient (pull toward the particle's own best)."),
    num("c2", "Social coefficient (pull toward the swarm best)."),
    num("k1", "Weight of the min-sum-rate objective."),
    num("k2", "Weight of the speed-violation penalty."),
    num("k3", "Weight of the turning-angle penalty."),
    num("k4", "Weight of the building penalty."),
    ParamSpec {
        default: Some(DEFAULT_P_ITER),
        ..int("p_iter", 0.0, MAX_P_ITER as f64, "Optimizer iterations.")
    },
    ParamSpec {
        default: Some(0),
        ..int("seed", 0.0, u64::MAX as f64, "Seed of the optimizer's random generator.")
    },
];

const HISTORY_PARAMS: [ParamSpec; 1] = [ParamSpec {
    default: Some(DEFAULT_HISTORY_LIMIT),
    ..int("limit", 1.0, 10_000.0, "Maximum number of records, newest first.")
}];

fn schema(specs: &[ParamSpec]) -> Value {
    let mut properties = Map::new();
    let mut required = Vec::new();
    for s in specs {
        let mut p = Map::new();
        p.insert(
            "type".into(),
            json!(if s.kind == Kind::Integer { "integer" } else { "number" }),
        );
        p.insert("minimum".into(), json!(s.min));
        if let Some(max) = s.max.filter(|m| *m < u64::MAX as f64) {
            p.insert("maximum".into(), json!(max));
        }
        match s.default {
            Some(d) => {
                p.insert("default".into(), json!(d));
            }
            None => required.push(s.name),
        }
        p.insert("description".into(), json!(s.description));
        properties.insert(s.name.into(), Value::Object(p));
    }
    json!({
        "type": "object",
        "properties": properties,
        "required": required,
        "additionalProperties": false,
    })
}

/// Descriptors in the order `tools/list` returns them.
pub fn descriptors() -> Vec<Value> {
    vec![
        json!({
            "name": RUN_TOOL,
            "description": "Run the warm-started particle swarm with crossover and mutation on the \
                loaded scenario and radio map. Returns the min-sum-rate, the fitness and its \
                penalty terms, and the id of the persisted run record.",
            "inputSchema": schema(&RUN_PARAMS),
        }),
        json!({
            "name": SCENARIO_TOOL,
            "description": "Describe the loaded scenario: fleet sizes, horizon, limits and the radio map seed.",
            "inputSchema": schema(&[]),
        }),
        json!({
            "name": HISTORY_TOOL,
            "description": "Most recent optimizer run records, newest first.",
            "inputSchema": schema(&HISTORY_PARAMS),
        }),
    ]
}

fn field_error(field: &str, message: String) -> RpcError {
    let mut e = RpcError::invalid_params(format!("invalid params: {message}"));
    e.data = Some(json!({ "field": field }));
    e
}

/// Checks `args` against `specs` and returns one number per spec, in order.
/// Integers come back exact through the `u64` slot.
fn validate(args: &Value, specs: &[ParamSpec]) -> Result<Vec<(f64, u64)>, RpcError> {
    let empty = Map::new();
    let obj = match args {
        Value::Null => &empty,
        Value::Object(o) => o,
        _ => return Err(RpcError::invalid_params("invalid params: arguments must be an object")),
    };
    if let Some(unknown) = obj.keys().find(|k| !specs.iter().any(|s| s.name == k.as_str())) {
        return Err(field_error(unknown, format!("unknown field `{unknown}`")));
    }
    specs
        .iter()
        .map(|s| {
            let Some(v) = obj.get(s.name) else {
                return match s.default {
                    Some(d) => Ok((d as f64, d)),
                    None => Err(field_error(s.name, format!("missing field `{}`", s.name))),
                };
            };
            let (as_f, as_u) = match s.kind {
                Kind::Integer => {
                    let u = v.as_u64().ok_or_else(|| {
                        field_error(s.name, format!("`{}` must be a non-negative integer", s.name))
                    })?;
                    (u as f64, u)
                }
                Kind::Number => {
                    let f = v
                        .as_f64()
                        .filter(|f| f.is_finite())
                        .ok_or_else(|| field_error(s.name, format!("`{}` must be a number", s.name)))?;
                    (f, 0)
                }
            };
            if as_f < s.min {
                return Err(field_error(
                    s.name,
                    format!("{} ≥ {} required, got {v}", s.name, s.min),
                ));
            }
            if let Some(max) = s.max {
                if as_f > max {
                    return Err(field_error(
                        s.name,
                        format!("{} ≤ {max} required, got {v}", s.name),
                    ));
                }
            }
            Ok((as_f, as_u))
        })
        .collect()
}

/// Validated arguments of [`RUN_TOOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunArgs {
    pub hyper: HyperParams,
    pub p_iter: usize,
    pub seed: u64,
}

impl RunArgs {
    /// Arguments object accepted by [`parse_run_args`].
    pub fn to_arguments(&self) -> Value {
        let h = &self.hyper;
        json!({
            "p_num": h.p_num, "omega": h.omega, "c1": h.c1, "c2": h.c2,
            "k1": h.k1, "k2": h.k2, "k3": h.k3, "k4": h.k4,
            "p_iter": self.p_iter, "seed": self.seed,
        })
    }
}

pub fn parse_run_args(args: &Value) -> Result<RunArgs, RpcError> {
    let v = validate(args, &RUN_PARAMS)?;
    let hyper = HyperParams {
        p_num: v[0].1 as usize,
        omega: v[1].0,
        c1: v[2].0,
        c2: v[3].0,
        k1: v[4].0,
        k2: v[5].0,
        k3: v[6].0,
        k4: v[7].0,
    };
    hyper
        .validate()
        .map_err(|e| RpcError::invalid_params(format!("invalid params: {e}")))?;
    Ok(RunArgs {
        hyper,
        p_iter: v[8].1 as usize,
        seed: v[9].1,
    })
}

pub fn parse_history_args(args: &Value) -> Result<usize, RpcError> {
    Ok(validate(args, &HISTORY_PARAMS)?[0].1 as usize)
}

pub fn parse_no_args(args: &Value) -> Result<(), RpcError> {
    validate(args, &[]).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline1_args() -> Value {
        json!({"p_num": 100, "omega": 0.5, "c1": 2, "c2": 2, "k1": 2, "k2": 0.5, "k3": 5, "k4": 5})
    }

    #[test]
    fn baseline_arguments_parse_with_defaults() {
        let r = parse_run_args(&baseline1_args()).unwrap();
        assert_eq!(r.hyper, HyperParams::baseline1());
        assert_eq!((r.p_iter, r.seed), (50, 0));
        assert_eq!(parse_run_args(&r.to_arguments()).unwrap(), r);
    }

    #[test]
    fn p_num_below_two_cites_the_bound() {
        let mut a = baseline1_args();
        a["p_num"] = json!(1);
        let e = parse_run_args(&a).unwrap_err();
        assert_eq!(e.code, crate::protocol::INVALID_PARAMS);
        assert!(e.message.contains("p_num ≥ 2"), "{}", e.message);
        assert_eq!(e.data, Some(json!({"field": "p_num"})));
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("omega", json!(-1.0)),
            ("c2", json!("fast")),
            ("p_num", json!(2.5)),
            ("seed", json!(-3)),
            ("p_iter", json!(1_000_000)),
        ];
        for (field, value) in cases {
            let mut a = baseline1_args();
            a[field] = value;
            let e = parse_run_args(&a).unwrap_err();
            assert_eq!(e.data, Some(json!({ "field": field })), "{}", e.message);
        }
        let mut a = baseline1_args();
        a.as_object_mut().unwrap().remove("k3");
        assert!(parse_run_args(&a).unwrap_err().message.contains("missing field `k3`"));
        a["k3"] = json!(1);
        a["bogus"] = json!(1);
        assert!(parse_run_args(&a).unwrap_err().message.contains("unknown field `bogus`"));
        assert!(parse_run_args(&json!([1, 2])).is_err());
    }

    #[test]
    fn large_seeds_survive_exactly() {
        let mut a = baseline1_args();
        a["seed"] = json!(u64::MAX);
        assert_eq!(parse_run_args(&a).unwrap().seed, u64::MAX);
    }

    #[test]
    fn schema_lists_required_hyper_params() {
        let d = descriptors();
        assert_eq!(d.len(), 3);
        let req = d[0]["inputSchema"]["required"].as_array().unwrap();
        let names: Vec<&str> = req.iter().map(|v| v.as_str().unwrap()).collect();
        assert_eq!(names, HyperParams::NAMES);
        assert_eq!(parse_history_args(&Value::Null).unwrap(), 20);
        assert_eq!(parse_history_args(&json!({"limit": 2})).unwrap(), 2);
        assert!(parse_history_args(&json!({"limit": 0})).is_err());
    }
}
