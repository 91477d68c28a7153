//! Canonical JSON interchange format:
//! `{"qubits": n, "ops": [["cx", 0, 1], ["rz", [0.5], 2], ...]}`.

use serde_json::{json, Value};

use super::{check_instruction, Circuit, CircuitError, GateKind, GateTag, Instruction};

pub fn parse_json(text: &str) -> Result<Circuit, CircuitError> {
    let root: Value = serde_json::from_str(text).map_err(|e| CircuitError::Json(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| CircuitError::Json("top level must be an object".into()))?;
    let num_qubits = obj
        .get("qubits")
        .and_then(Value::as_u64)
        .ok_or_else(|| CircuitError::Json("missing non-negative integer field `qubits`".into()))?
        as usize;
    if num_qubits == 0 {
        return Err(CircuitError::NoQubits);
    }
    let ops = obj
        .get("ops")
        .and_then(Value::as_array)
        .ok_or_else(|| CircuitError::Json("missing array field `ops`".into()))?;

    let mut instructions = Vec::with_capacity(ops.len());
    for (id, op) in ops.iter().enumerate() {
        let items = op
            .as_array()
            .ok_or_else(|| CircuitError::Json(format!("instruction {id}: expected an array")))?;
        let name = items
            .first()
            .and_then(Value::as_str)
            .ok_or_else(|| CircuitError::Json(format!("instruction {id}: missing gate tag")))?;
        let tag: GateTag = name.parse().map_err(|tag| CircuitError::UnknownGate { instr: id, tag })?;
        let mut rest = &items[1..];
        let mut params = Vec::new();
        if let Some(Value::Array(ps)) = rest.first() {
            for p in ps {
                params.push(p.as_f64().ok_or_else(|| {
                    CircuitError::Json(format!("instruction {id}: non-numeric parameter"))
                })?);
            }
            rest = &rest[1..];
        }
        let qubits = rest
            .iter()
            .map(|q| {
                q.as_u64().map(|q| q as usize).ok_or_else(|| {
                    CircuitError::Json(format!("instruction {id}: qubit indices must be non-negative integers"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let kind = GateKind::with_params(tag, params);
        check_instruction(id, &kind, &qubits, num_qubits)?;
        if tag == GateTag::Swap {
            return Err(CircuitError::SwapInLogicalInput { instr: id });
        }
        instructions.push(Instruction { id, kind, qubits });
    }
    Ok(Circuit {
        num_qubits,
        instructions,
    })
}

pub fn to_json(circuit: &Circuit) -> String {
    let ops: Vec<Value> = circuit
        .instructions()
        .iter()
        .map(|instr| {
            let mut row = vec![Value::from(instr.kind.tag.name())];
            if !instr.kind.params.is_empty() {
                row.push(json!(instr.kind.params));
            }
            row.extend(instr.qubits.iter().map(|&q| Value::from(q)));
            Value::Array(row)
        })
        .collect();
    json!({ "qubits": circuit.num_qubits(), "ops": ops }).to_string()
}
