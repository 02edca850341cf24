use serde_json::{json, Value};

fn number_array() -> Value {
    json!({ "type": "array", "items": { "type": "number" } })
}

pub fn model() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "LossModel",
        "description": "One loss polynomial in motor torque (N·m → W) per motor speed slice (rad/s). Coefficients are in ascending powers.",
        "type": "object",
        "required": ["speeds", "polys", "fit_meta", "torque_range", "degree", "epsilon", "constrained"],
        "properties": {
            "speeds": number_array(),
            "polys": { "type": "array", "items": number_array() },
            "fit_meta": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "omega": { "type": "number" },
                        "rmse": { "type": "number" },
                        "min_derivative": { "type": "number" },
                        "monotone": { "type": "boolean" },
                        "status": { "type": "string", "enum": ["OPTIMAL", "NEAR_OPTIMAL"] }
                    }
                }
            },
            "torque_range": { "type": "array", "items": { "type": "number" }, "minItems": 2, "maxItems": 2 },
            "degree": { "type": "integer", "minimum": 1, "maximum": 12 },
            "epsilon": { "type": "number", "minimum": 0 },
            "constrained": { "type": "boolean" },
            "blend": { "type": "string", "enum": ["linear", "nearest"], "default": "linear" }
        }
    })
}

fn motor() -> Value {
    json!({
        "type": "object",
        "required": ["label", "gear_ratio", "loss_map"],
        "additionalProperties": false,
        "properties": {
            "label": { "type": "string" },
            "gear_ratio": { "type": "number", "exclusiveMinimum": 0 },
            "loss_map": { "type": "string", "description": "loss map CSV, relative to the config file" },
            "max_torque_curve": {
                "type": "array",
                "description": "(motor speed rad/s, max torque N·m) points",
                "items": { "type": "array", "items": { "type": "number" }, "minItems": 2, "maxItems": 2 }
            }
        }
    })
}

pub fn config() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "SimulationConfig",
        "type": "object",
        "required": ["config", "front", "rear"],
        "additionalProperties": false,
        "properties": {
            "vehicle": {
                "type": "object",
                "properties": {
                    "m": { "type": "number" }, "R": { "type": "number" }, "R_r": { "type": "number" },
                    "C_d": { "type": "number" }, "A_f": { "type": "number" }, "rho_air": { "type": "number" },
                    "g": { "type": "number" }, "h1": { "type": "number" }, "h2": { "type": "number" }
                }
            },
            "config": { "type": "string", "enum": ["EQUAL", "UNEQUAL"] },
            "front": motor(),
            "rear": motor(),
            "methods": { "type": "array", "items": { "type": "string", "enum": ["GS", "UP", "PP", "UP_KKT", "PP_KKT"] } },
            "cycles": { "type": "array", "items": { "type": "string", "description": "t_s,v_mps CSV, relative to the config file" } },
            "degree": { "type": "integer", "minimum": 1, "maximum": 12, "default": 10 },
            "epsilon": { "type": "number", "default": 1e-3 },
            "grid_step": { "type": "number", "default": 1e-3 },
            "seed": { "type": "integer", "minimum": 0, "default": 0 },
            "sampling": { "type": "string", "enum": ["step_start", "midpoint"], "default": "step_start" },
            "blend": { "type": "string", "enum": ["linear", "nearest"], "default": "linear" },
            "output_dir": { "type": "string", "default": "out" }
        }
    })
}
