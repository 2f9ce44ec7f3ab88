//! Layered Boolean circuits over residue variables and their translation
//! into a net plus an EF formula whose modality prefix mirrors the layers.

use std::fmt::Write as _;

use crate::arith::CrrAssignment;
use crate::ctl::Ctl;
use crate::ocp::OcpBuilder;
use crate::text::content_lines;

use super::crr::{GadgetOcn, ResidueNet, GAMMA};
use super::formula::CrrVar;
use super::GadgetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
}

/// Gate layers from the output downwards, then the input layer. Each gate
/// lists its children as indices into the next layer (the input layer for
/// the last gate layer). With no gate layers the single input is the output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayeredCircuit {
    layers: Vec<(GateKind, Vec<Vec<usize>>)>,
    inputs: Vec<CrrVar>,
}

impl LayeredCircuit {
    pub fn new(
        layers: Vec<(GateKind, Vec<Vec<usize>>)>,
        inputs: Vec<CrrVar>,
    ) -> Result<Self, GadgetError> {
        let bad = |msg: &str| Err(GadgetError::InvalidCircuit(msg.to_string()));
        let top_width = layers.first().map_or(inputs.len(), |(_, g)| g.len());
        if top_width != 1 {
            return bad("the first layer must hold exactly one output gate");
        }
        for (k, (_, gates)) in layers.iter().enumerate() {
            let below = layers.get(k + 1).map_or(inputs.len(), |(_, g)| g.len());
            for children in gates {
                if children.is_empty() {
                    return bad("every gate needs at least one child");
                }
                if children.iter().any(|&c| c >= below) {
                    return bad("child index out of range");
                }
            }
        }
        Ok(LayeredCircuit { layers, inputs })
    }

    /// Number of gate layers `k`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[(GateKind, Vec<Vec<usize>>)] {
        &self.layers
    }

    pub fn inputs(&self) -> &[CrrVar] {
        &self.inputs
    }

    pub fn num_gates(&self) -> usize {
        self.inputs.len() + self.layers.iter().map(|(_, g)| g.len()).sum::<usize>()
    }

    /// Every gate except the output has a parent.
    pub fn is_connected(&self) -> bool {
        (0..self.layers.len()).all(|k| {
            let below = self.layers.get(k + 1).map_or(self.inputs.len(), |(_, g)| g.len());
            (0..below).all(|c| self.layers[k].1.iter().any(|ch| ch.contains(&c)))
        })
    }

    pub fn eval(&self, a: &CrrAssignment) -> bool {
        let mut values: Vec<bool> = self.inputs.iter().map(|v| a.x(v.i, v.r)).collect();
        for (kind, gates) in self.layers.iter().rev() {
            values = gates
                .iter()
                .map(|children| match kind {
                    GateKind::And => children.iter().all(|&c| values[c]),
                    GateKind::Or => children.iter().any(|&c| values[c]),
                })
                .collect();
        }
        values[0]
    }
}

fn gate_name(layer: usize, j: usize) -> String {
    format!("g{layer}.{j}")
}

/// Gates become locations with 0-steps to their children; every input gate
/// `x_{i,r}` gets the residue branch of the formula nets. The entry is the
/// output gate; there is no exit.
pub fn ocn_of_circuit(c: &LayeredCircuit, primes: &[u64]) -> Result<GadgetOcn, GadgetError> {
    if primes.is_empty() {
        return Err(GadgetError::NoPrimes);
    }
    for v in &c.inputs {
        super::formula::CrrFormula::Var(*v).validate(primes)?;
    }
    let mut net = ResidueNet::new(primes);
    let k = c.layers.len();
    for (layer, (_, gates)) in c.layers.iter().enumerate() {
        for (j, children) in gates.iter().enumerate() {
            let g = gate_name(layer + 1, j);
            net.spec.location(&g);
            for &child in children {
                net.spec.both(&g, 0, &gate_name(layer + 2, child));
            }
        }
    }
    for (j, v) in c.inputs.iter().enumerate() {
        let g = gate_name(k + 1, j);
        net.spec.location(&g);
        net.branch(&g, v.i, v.r);
    }
    let ocp = net.finish()?.ocp;
    Ok(GadgetOcn {
        input: ocp.loc(&gate_name(1, 0))?,
        output: None,
        ocp,
    })
}

/// `M_1 ... M_k EX EF ~EX gamma` with `M_i = EX` for OR layers and `AX` for
/// AND layers.
pub fn ef_of_circuit(c: &LayeredCircuit) -> Ctl {
    let mut phi = Ctl::atom(GAMMA).ex().not().ef().ex();
    for (kind, _) in c.layers.iter().rev() {
        phi = match kind {
            GateKind::Or => phi.ex(),
            GateKind::And => phi.ax(),
        };
    }
    phi
}

/// Copies a circuit net into `b` under `prefix`; returns the entry.
pub(crate) fn embed_circuit(
    b: &mut OcpBuilder,
    prefix: &str,
    c: &LayeredCircuit,
    primes: &[u64],
) -> Result<crate::ocp::LocId, GadgetError> {
    let g = ocn_of_circuit(c, primes)?;
    let map = b.embed(prefix, &g.ocp);
    Ok(map[g.input.index()])
}

/// ```text
/// circuit
/// inputs x1_0 x1_1 x2_2
/// layer or 0,1        # output layer; children index the next layer
/// layer and 0,1 1,2   # children index the inputs
/// ```
pub fn parse_circuit(text: &str) -> Result<LayeredCircuit, GadgetError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, w)) if w == ["circuit"] => {}
        _ => {
            return Err(GadgetError::Syntax {
                line: 1,
                msg: "expected `circuit` header".into(),
            })
        }
    }
    let mut inputs = None;
    let mut layers = Vec::new();
    for (line, w) in lines {
        let err = |msg: String| GadgetError::Syntax { line, msg };
        match w[0] {
            "inputs" => {
                let vars = w[1..]
                    .iter()
                    .map(|s| match super::formula::parse_crr_formula(s) {
                        Ok(super::formula::Formula::Var(v)) => Ok(v),
                        _ => Err(err(format!("`{s}` is not a residue variable"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                inputs = Some(vars);
            }
            "layer" if w.len() >= 3 => {
                let kind = match w[1] {
                    "and" | "AND" => GateKind::And,
                    "or" | "OR" => GateKind::Or,
                    other => return Err(err(format!("unknown gate kind `{other}`"))),
                };
                let gates = w[2..]
                    .iter()
                    .map(|g| {
                        g.split(',')
                            .map(|c| c.parse::<usize>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| err(format!("bad child list `{g}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                layers.push((kind, gates));
            }
            other => return Err(err(format!("malformed `{other}` line"))),
        }
    }
    let inputs = inputs.ok_or_else(|| GadgetError::Syntax {
        line: 1,
        msg: "missing `inputs` line".into(),
    })?;
    LayeredCircuit::new(layers, inputs)
}

pub fn write_circuit(c: &LayeredCircuit) -> String {
    let mut out = String::from("circuit\ninputs");
    for v in &c.inputs {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    for (kind, gates) in &c.layers {
        out.push_str(match kind {
            GateKind::And => "layer and",
            GateKind::Or => "layer or",
        });
        for children in gates {
            let list: Vec<String> = children.iter().map(usize::to_string).collect();
            let _ = write!(out, " {}", list.join(","));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::crr;
    use crate::checker::BoundedOracle;
    use num_bigint::BigUint;

    fn holds(c: &LayeredCircuit, primes: &[u64], m: usize) -> bool {
        let g = ocn_of_circuit(c, primes).unwrap();
        let mut oracle = BoundedOracle::new(&g.ocp, &ef_of_circuit(c), m.max(1));
        oracle.query(g.input, m).verdict.definite().unwrap()
    }

    fn v(i: usize, r: u64) -> CrrVar {
        CrrVar { i, r }
    }

    #[test]
    fn single_input() {
        let c = LayeredCircuit::new(vec![], vec![v(1, 0)]).unwrap();
        assert!(holds(&c, &[2], 0));
        assert!(!holds(&c, &[2], 1));
        assert_eq!(ef_of_circuit(&c).to_string(), "EX EF ~EX gamma");
    }

    #[test]
    fn or_and_and_of_complementary_residues() {
        let or = LayeredCircuit::new(vec![(GateKind::Or, vec![vec![0, 1]])], vec![v(1, 0), v(1, 1)])
            .unwrap();
        let and = LayeredCircuit::new(vec![(GateKind::And, vec![vec![0, 1]])], vec![v(1, 0), v(1, 1)])
            .unwrap();
        for m in 0..4 {
            assert!(holds(&or, &[2], m));
            assert!(!holds(&and, &[2], m));
        }
    }

    #[test]
    fn evaluation_and_text() {
        let c = LayeredCircuit::new(
            vec![
                (GateKind::Or, vec![vec![0, 1]]),
                (GateKind::And, vec![vec![0, 1], vec![2]]),
            ],
            vec![v(1, 1), v(2, 2), v(2, 0)],
        )
        .unwrap();
        assert!(c.is_connected());
        let primes = [2, 3];
        for m in 0u32..6 {
            let a = crr(&primes, &BigUint::from(m)).unwrap();
            assert_eq!(c.eval(&a), m == 5 || m % 3 == 0, "M = {m}");
        }
        let text = write_circuit(&c);
        assert_eq!(parse_circuit(&text).unwrap(), c);
        assert_eq!(
            ef_of_circuit(&c).to_string(),
            "EX AX EX EF ~EX gamma"
        );
    }

    #[test]
    fn invalid_circuits() {
        assert!(LayeredCircuit::new(vec![], vec![v(1, 0), v(1, 1)]).is_err());
        assert!(LayeredCircuit::new(vec![(GateKind::Or, vec![vec![]])], vec![v(1, 0)]).is_err());
        assert!(LayeredCircuit::new(vec![(GateKind::Or, vec![vec![3]])], vec![v(1, 0)]).is_err());
    }
}
