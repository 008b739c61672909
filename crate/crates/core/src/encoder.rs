//! Lowering a ReLU network and a box property to LP form.
//!
//! Column layout of an encoded query:
//!
//! | columns                | meaning                                        |
//! |------------------------|------------------------------------------------|
//! | `x1 .. xk`             | network inputs                                 |
//! | `b1 .. bh`             | hidden pre-activations, layer-major            |
//! | `f1 .. fh`             | hidden post-activations, same order as `b`     |
//! | `y` or `y1 .. yo`      | network outputs                                |
//! | `one`                  | constant 1, present only if some bias is not 0 |
//!
//! Each hidden neuron contributes the row `(sum_l w_l src_l + bias) - b`, each
//! output the row `y - (sum_l w_l src_l + bias)`. Internal bounds come from
//! exact interval propagation, widened by any user overrides; pre-activation
//! bounds are further widened to contain 0 so both ReLU phases stay open.

use thiserror::Error;

use crate::linalg::{Backend, DimensionError, Tableau, Vector};
use crate::proof::{Query, ReluConstraint, VarIndex};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("{what}: expected {expected}, found {found}")]
    Shape {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("network has no layers")]
    NoLayers,
    #[error("empty interval for {0}")]
    EmptyInterval(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("bound override on {0:?}: only hidden b/f variables can be overridden")]
    OverrideNotInternal(String),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
}

fn shape(what: impl Into<String>, expected: usize, found: usize) -> Result<(), EncodeError> {
    if expected == found {
        Ok(())
    } else {
        Err(EncodeError::Shape {
            what: what.into(),
            expected,
            found,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    /// `weights[j][l]`: weight from source `l` into neuron `j`.
    pub weights: Vec<Vec<Rational>>,
    pub biases: Vec<Rational>,
}

impl Layer {
    pub fn size(&self) -> usize {
        self.weights.len()
    }

    fn affine(&self, src: &[Rational]) -> Vec<Rational> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, bias)| row.iter().zip(src).map(|(w, v)| w * v).sum::<Rational>() + bias)
            .collect()
    }
}

/// Feed-forward network: ReLU on every layer but the last, identity on the
/// last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    input_size: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_size: usize, layers: Vec<Layer>) -> Result<Network, EncodeError> {
        if layers.is_empty() {
            return Err(EncodeError::NoLayers);
        }
        let mut prev = input_size;
        for (i, layer) in layers.iter().enumerate() {
            shape(format!("layer {i} biases"), layer.size(), layer.biases.len())?;
            for (j, row) in layer.weights.iter().enumerate() {
                shape(format!("layer {i} neuron {j} weights"), prev, row.len())?;
            }
            prev = layer.size();
        }
        Ok(Network { input_size, layers })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, Layer::size)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn hidden_layers(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("validated non-empty")
    }

    pub fn num_relus(&self) -> usize {
        self.hidden_layers().iter().map(Layer::size).sum()
    }

    pub fn has_bias(&self) -> bool {
        self.layers
            .iter()
            .any(|l| l.biases.iter().any(|b| !b.is_zero()))
    }

    /// Exact forward pass.
    pub fn forward(&self, x: &[Rational]) -> Result<Activations, DimensionError> {
        if x.len() != self.input_size {
            return Err(DimensionError {
                expected: self.input_size,
                found: x.len(),
            });
        }
        let mut pre = Vec::new();
        let mut post = Vec::new();
        let mut src = x.to_vec();
        for layer in self.hidden_layers() {
            let b = layer.affine(&src);
            let f: Vec<Rational> = b
                .iter()
                .map(|v| Rational::max_of(v.clone(), Rational::zero()))
                .collect();
            pre.extend(b);
            post.extend(f.iter().cloned());
            src = f;
        }
        let outputs = self.output_layer().affine(&src);
        Ok(Activations {
            inputs: x.to_vec(),
            pre,
            post,
            outputs,
        })
    }

    pub fn evaluate(&self, x: &Vector) -> Result<Vector, DimensionError> {
        let acts = self.forward(&x.to_values())?;
        Ok(Vector::from_values(acts.outputs, x.backend()))
    }
}

/// Every value computed by a forward pass, hidden neurons flattened in
/// layer-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activations {
    pub inputs: Vec<Rational>,
    pub pre: Vec<Rational>,
    pub post: Vec<Rational>,
    pub outputs: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lower: Rational,
    pub upper: Rational,
}

impl Interval {
    pub fn new(lower: Rational, upper: Rational) -> Interval {
        Interval { lower, upper }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        self.lower <= *v && *v <= self.upper
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lower: Rational::min_of(self.lower.clone(), other.lower.clone()),
            upper: Rational::max_of(self.upper.clone(), other.upper.clone()),
        }
    }

    fn scaled(&self, w: &Rational) -> Interval {
        if w.is_negative() {
            Interval::new(w * &self.upper, w * &self.lower)
        } else {
            Interval::new(w * &self.lower, w * &self.upper)
        }
    }
}

/// Widens the computed interval of one hidden variable, by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundOverride {
    pub var: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxProperty {
    pub inputs: Vec<Interval>,
    pub outputs: Vec<Interval>,
    pub overrides: Vec<BoundOverride>,
}

impl BoxProperty {
    pub fn new(inputs: Vec<Interval>, outputs: Vec<Interval>) -> Result<BoxProperty, EncodeError> {
        for (i, iv) in inputs.iter().enumerate() {
            if iv.lower > iv.upper {
                return Err(EncodeError::EmptyInterval(format!("input {i}")));
            }
        }
        for (i, iv) in outputs.iter().enumerate() {
            if iv.lower > iv.upper {
                return Err(EncodeError::EmptyInterval(format!("output {i}")));
            }
        }
        Ok(BoxProperty {
            inputs,
            outputs,
            overrides: Vec::new(),
        })
    }

    pub fn with_overrides(mut self, overrides: Vec<BoundOverride>) -> BoxProperty {
        self.overrides = overrides;
        self
    }

    fn check_dims(&self, net: &Network) -> Result<(), EncodeError> {
        shape("property input bounds", net.input_size(), self.inputs.len())?;
        shape("property output bounds", net.output_size(), self.outputs.len())
    }
}

/// Column indices of an encoded query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub num_inputs: usize,
    pub num_hidden: usize,
    pub num_outputs: usize,
    pub has_one: bool,
}

impl Layout {
    pub fn for_network(net: &Network) -> Layout {
        Layout {
            num_inputs: net.input_size(),
            num_hidden: net.num_relus(),
            num_outputs: net.output_size(),
            has_one: net.has_bias(),
        }
    }

    pub fn input(&self, i: usize) -> VarIndex {
        i
    }

    pub fn pre(&self, k: usize) -> VarIndex {
        self.num_inputs + k
    }

    pub fn post(&self, k: usize) -> VarIndex {
        self.num_inputs + self.num_hidden + k
    }

    pub fn output(&self, o: usize) -> VarIndex {
        self.num_inputs + 2 * self.num_hidden + o
    }

    pub fn one(&self) -> Option<VarIndex> {
        self.has_one
            .then(|| self.num_inputs + 2 * self.num_hidden + self.num_outputs)
    }

    pub fn num_vars(&self) -> usize {
        self.num_inputs + 2 * self.num_hidden + self.num_outputs + usize::from(self.has_one)
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.num_inputs).map(|i| format!("x{i}")).collect();
        names.extend((1..=self.num_hidden).map(|k| format!("b{k}")));
        names.extend((1..=self.num_hidden).map(|k| format!("f{k}")));
        if self.num_outputs == 1 {
            names.push("y".into());
        } else {
            names.extend((1..=self.num_outputs).map(|o| format!("y{o}")));
        }
        if self.has_one {
            names.push("one".into());
        }
        names
    }

    /// Full assignment for the columns from a forward pass.
    pub fn assignment(&self, acts: &Activations, backend: Backend) -> Vector {
        let mut values = Vec::with_capacity(self.num_vars());
        values.extend(acts.inputs.iter().cloned());
        values.extend(acts.pre.iter().cloned());
        values.extend(acts.post.iter().cloned());
        values.extend(acts.outputs.iter().cloned());
        if self.has_one {
            values.push(Rational::one());
        }
        Vector::from_values(values, backend)
    }

    /// The network inputs inside a full assignment.
    pub fn inputs_of(&self, assignment: &Vector) -> Vector {
        assignment.truncated(self.num_inputs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub query: Query,
    pub layout: Layout,
}

/// Interval enclosures of every hidden pre-activation (before any widening).
pub fn propagate_intervals(net: &Network, inputs: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut src = inputs.to_vec();
    for layer in net.hidden_layers() {
        let pre = affine_interval(layer, &src);
        src = pre
            .iter()
            .map(|iv| {
                Interval::new(
                    Rational::zero(),
                    Rational::max_of(iv.upper.clone(), Rational::zero()),
                )
            })
            .collect();
        out.extend(pre);
    }
    out
}

fn affine_interval(layer: &Layer, src: &[Interval]) -> Vec<Interval> {
    layer
        .weights
        .iter()
        .zip(&layer.biases)
        .map(|(row, bias)| {
            row.iter().zip(src).fold(
                Interval::new(bias.clone(), bias.clone()),
                |acc, (w, iv)| {
                    let t = iv.scaled(w);
                    Interval::new(acc.lower + t.lower, acc.upper + t.upper)
                },
            )
        })
        .collect()
}

pub fn encode(net: &Network, prop: &BoxProperty) -> Result<Encoding, EncodeError> {
    encode_with_backend(net, prop, Backend::Dense)
}

pub fn encode_with_backend(
    net: &Network,
    prop: &BoxProperty,
    backend: Backend,
) -> Result<Encoding, EncodeError> {
    prop.check_dims(net)?;
    let layout = Layout::for_network(net);
    let names = layout.names();
    let n = layout.num_vars();

    let mut b_over: Vec<Vec<&BoundOverride>> = vec![Vec::new(); layout.num_hidden];
    let mut f_over: Vec<Vec<&BoundOverride>> = vec![Vec::new(); layout.num_hidden];
    for o in &prop.overrides {
        let idx = names
            .iter()
            .position(|nm| *nm == o.var)
            .ok_or_else(|| EncodeError::UnknownVariable(o.var.clone()))?;
        if (layout.pre(0)..layout.post(0)).contains(&idx) {
            b_over[idx - layout.pre(0)].push(o);
        } else if (layout.post(0)..layout.output(0)).contains(&idx) {
            f_over[idx - layout.post(0)].push(o);
        } else {
            return Err(EncodeError::OverrideNotInternal(o.var.clone()));
        }
    }

    let mut upper = vec![Rational::zero(); n];
    let mut lower = vec![Rational::zero(); n];
    for (i, iv) in prop.inputs.iter().enumerate() {
        lower[layout.input(i)] = iv.lower.clone();
        upper[layout.input(i)] = iv.upper.clone();
    }
    for (o, iv) in prop.outputs.iter().enumerate() {
        lower[layout.output(o)] = iv.lower.clone();
        upper[layout.output(o)] = iv.upper.clone();
    }
    if let Some(one) = layout.one() {
        lower[one] = Rational::one();
        upper[one] = Rational::one();
    }

    let mut rows = Vec::new();
    let mut constraints = Vec::new();
    let mut src_vars: Vec<VarIndex> = (0..layout.num_inputs).map(|i| layout.input(i)).collect();
    let mut src_bounds = prop.inputs.clone();
    let mut k = 0;
    for layer in net.hidden_layers() {
        let pre = affine_interval(layer, &src_bounds);
        let mut next_vars = Vec::new();
        let mut next_bounds = Vec::new();
        for (j, iv) in pre.into_iter().enumerate() {
            let (b, f) = (layout.pre(k), layout.post(k));
            let mut row = affine_row(n, layer, j, &src_vars, layout.one());
            row[b] = Rational::from(-1);
            rows.push(Vector::from_values(row, backend));

            let f_iv = Interval::new(
                Rational::zero(),
                Rational::max_of(iv.upper.clone(), Rational::zero()),
            );
            let mut f_iv = widen(f_iv, &f_over[k]);
            f_iv.lower = Rational::zero();
            let b_iv = widen(iv, &b_over[k]).hull(&Interval::new(Rational::zero(), Rational::zero()));
            lower[b] = b_iv.lower;
            upper[b] = b_iv.upper;
            lower[f] = f_iv.lower.clone();
            upper[f] = f_iv.upper.clone();

            constraints.push(ReluConstraint { id: k, b, f });
            next_vars.push(f);
            next_bounds.push(f_iv);
            k += 1;
        }
        src_vars = next_vars;
        src_bounds = next_bounds;
    }
    let out_layer = net.output_layer();
    for o in 0..out_layer.size() {
        let mut row: Vec<Rational> = affine_row(n, out_layer, o, &src_vars, layout.one())
            .into_iter()
            .map(|v| -v)
            .collect();
        row[layout.output(o)] = Rational::one();
        rows.push(Vector::from_values(row, backend));
    }

    let query = Query {
        tableau: Tableau::new(n, rows)?,
        upper: Vector::from_values(upper, backend),
        lower: Vector::from_values(lower, backend),
        constraints,
        var_names: Some(names),
    };
    Ok(Encoding { query, layout })
}

fn widen(iv: Interval, overrides: &[&BoundOverride]) -> Interval {
    overrides.iter().fold(iv, |acc, o| Interval {
        lower: match &o.lower {
            Some(l) => Rational::min_of(acc.lower, l.clone()),
            None => acc.lower,
        },
        upper: match &o.upper {
            Some(u) => Rational::max_of(acc.upper, u.clone()),
            None => acc.upper,
        },
    })
}

fn affine_row(
    n: usize,
    layer: &Layer,
    neuron: usize,
    src_vars: &[VarIndex],
    one: Option<VarIndex>,
) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); n];
    for (w, &v) in layer.weights[neuron].iter().zip(src_vars) {
        row[v] += w;
    }
    let bias = &layer.biases[neuron];
    if !bias.is_zero() {
        row[one.expect("bias implies a constant column")] += bias;
    }
    row
}

/// Whether `x` is a counterexample: inside the input box with the network's
/// output inside the output box.
pub fn check_sat_witness(
    net: &Network,
    prop: &BoxProperty,
    x: &Vector,
) -> Result<bool, EncodeError> {
    prop.check_dims(net)?;
    let values = x.to_values();
    shape("witness", net.input_size(), values.len())?;
    if !prop.inputs.iter().zip(&values).all(|(iv, v)| iv.contains(v)) {
        return Ok(false);
    }
    let outputs = net.forward(&values)?.outputs;
    Ok(prop.outputs.iter().zip(&outputs).all(|(iv, v)| iv.contains(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worked_example;

    fn q(n: i64) -> Rational {
        Rational::from(n)
    }

    fn xs(v: &[i64]) -> Vector {
        Vector::from_ints(v, Backend::Dense)
    }

    #[test]
    fn forward_pass_by_hand() {
        let net = worked_example::network();
        // x = (1, 1): b1 = 2, f1 = 2, b2 = 1, f2 = 1, b3 = -1, f3 = 0.
        let acts = net.forward(&[q(1), q(1)]).unwrap();
        assert_eq!(acts.pre, vec![q(2), q(1), q(-1)]);
        assert_eq!(acts.post, vec![q(2), q(1), q(0)]);
        assert_eq!(acts.outputs, vec![q(0)]);
        assert_eq!(net.evaluate(&xs(&[0, 0])).unwrap(), xs(&[0]));
        assert_eq!(net.evaluate(&xs(&[0, 1])).unwrap(), xs(&[1]));
        assert!(net.evaluate(&xs(&[0])).is_err());
    }

    #[test]
    fn example_encoding_matches_literal_query() {
        let enc = encode(&worked_example::network(), &worked_example::property()).unwrap();
        assert_eq!(enc.query, worked_example::query());
    }

    #[test]
    fn overrides_only_widen() {
        let net = worked_example::network();
        let plain = encode(&net, &worked_example::property().with_overrides(vec![])).unwrap();
        // Propagation alone gives b3 in [-2, 1] and f3 in [0, 1].
        assert_eq!(*plain.query.upper.get(4), q(1));
        assert_eq!(*plain.query.upper.get(7), q(1));
        let tight = worked_example::property().with_overrides(vec![BoundOverride {
            var: "b3".into(),
            lower: Some(q(0)),
            upper: Some(q(0)),
        }]);
        let enc = encode(&net, &tight).unwrap();
        assert_eq!((&*enc.query.lower.get(4), &*enc.query.upper.get(4)), (&q(-2), &q(1)));
    }

    #[test]
    fn bad_overrides() {
        let net = worked_example::network();
        let p = |var: &str| {
            worked_example::property().with_overrides(vec![BoundOverride {
                var: var.into(),
                lower: None,
                upper: Some(q(5)),
            }])
        };
        assert_eq!(encode(&net, &p("z9")), Err(EncodeError::UnknownVariable("z9".into())));
        assert_eq!(encode(&net, &p("x1")), Err(EncodeError::OverrideNotInternal("x1".into())));
        assert_eq!(encode(&net, &p("y")), Err(EncodeError::OverrideNotInternal("y".into())));
    }

    #[test]
    fn affine_network_has_no_constraints() {
        let net = Network::new(
            2,
            vec![Layer {
                weights: vec![vec![q(1), q(-3)]],
                biases: vec![q(0)],
            }],
        )
        .unwrap();
        let prop = BoxProperty::new(
            vec![Interval::new(q(0), q(1)); 2],
            vec![Interval::new(q(-1), q(1))],
        )
        .unwrap();
        let enc = encode(&net, &prop).unwrap();
        assert!(enc.query.constraints.is_empty());
        assert_eq!(enc.query.tableau.num_rows(), 1);
        assert_eq!(enc.query.tableau.row(0), &xs(&[-1, 3, 1]));
    }

    #[test]
    fn biases_use_a_constant_column() {
        let net = Network::new(
            1,
            vec![
                Layer {
                    weights: vec![vec![q(2)]],
                    biases: vec![q(3)],
                },
                Layer {
                    weights: vec![vec![q(1)]],
                    biases: vec![q(-1)],
                },
            ],
        )
        .unwrap();
        let prop = BoxProperty::new(vec![Interval::new(q(-2), q(1))], vec![Interval::new(q(0), q(9))])
            .unwrap();
        let enc = encode(&net, &prop).unwrap();
        assert_eq!(enc.layout.names(), vec!["x1", "b1", "f1", "y", "one"]);
        assert_eq!(enc.query.tableau.row(0), &xs(&[2, -1, 0, 0, 3]));
        assert_eq!(enc.query.tableau.row(1), &xs(&[0, 0, -1, 1, 1]));
        // b1 = 2x + 3 ranges over [-1, 5]; f1 over [0, 5].
        assert_eq!(enc.query.lower, xs(&[-2, -1, 0, 0, 1]));
        assert_eq!(enc.query.upper, xs(&[1, 5, 5, 9, 1]));
        // Every forward pass satisfies the rows.
        for x in -2..=1 {
            let acts = net.forward(&[q(x)]).unwrap();
            let a = enc.layout.assignment(&acts, Backend::Dense);
            assert!(enc.query.tableau.apply(&a).unwrap().iter().all(Rational::is_zero));
        }
    }

    #[test]
    fn pre_activation_bounds_straddle_zero() {
        let net = Network::new(
            1,
            vec![
                Layer {
                    weights: vec![vec![q(1)]],
                    biases: vec![q(5)],
                },
                Layer {
                    weights: vec![vec![q(1)]],
                    biases: vec![q(0)],
                },
            ],
        )
        .unwrap();
        let prop = BoxProperty::new(vec![Interval::new(q(0), q(1))], vec![Interval::new(q(0), q(1))])
            .unwrap();
        let enc = encode(&net, &prop).unwrap();
        assert_eq!((&*enc.query.lower.get(1), &*enc.query.upper.get(1)), (&q(0), &q(6)));
        assert_eq!((&*enc.query.lower.get(2), &*enc.query.upper.get(2)), (&q(0), &q(6)));
    }

    #[test]
    fn sat_witnesses() {
        let net = worked_example::network();
        let prop = worked_example::property();
        assert!(!check_sat_witness(&net, &prop, &xs(&[1, 1])).unwrap());
        assert!(!check_sat_witness(&net, &prop, &xs(&[2, 0])).unwrap());
        let zero_box = BoxProperty::new(
            vec![Interval::new(q(-1), q(1)); 2],
            vec![Interval::new(q(0), q(0))],
        )
        .unwrap();
        assert!(check_sat_witness(&net, &zero_box, &xs(&[0, 0])).unwrap());
        assert!(check_sat_witness(&net, &zero_box, &xs(&[0])).is_err());
    }

    #[test]
    fn shape_errors() {
        assert_eq!(Network::new(2, vec![]), Err(EncodeError::NoLayers));
        let bad = Network::new(
            2,
            vec![Layer {
                weights: vec![vec![q(1)]],
                biases: vec![q(0)],
            }],
        );
        assert!(matches!(bad, Err(EncodeError::Shape { .. })));
        assert!(BoxProperty::new(vec![Interval::new(q(1), q(0))], vec![]).is_err());
    }
}
