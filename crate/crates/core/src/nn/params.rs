use std::collections::HashMap;

use crate::autograd::{BnState, Graph, Mode, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BnId(usize);

/// Named trainable tensors plus batch-norm running statistics, in creation order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    names: Vec<String>,
    values: Vec<Tensor<T>>,
    bn_names: Vec<String>,
    bn: Vec<BnState<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            values: Vec::new(),
            bn_names: Vec::new(),
            bn: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Registers a trainable tensor. Panics on a duplicate name.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        self.index.insert(name.clone(), self.values.len());
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn add_bn(&mut self, name: impl Into<String>, channels: usize) -> BnId {
        self.bn_names.push(name.into());
        self.bn.push(BnState::new(channels));
        BnId(self.bn.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.values[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor<T>> {
        self.index.get(name).map(|&i| &self.values[i])
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.index.get(name).map(|&i| &mut self.values[i])
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn bn(&self, id: BnId) -> &BnState<T> {
        &self.bn[id.0]
    }

    pub fn bn_mut(&mut self, id: BnId) -> &mut BnState<T> {
        &mut self.bn[id.0]
    }

    pub fn total_elements(&self) -> usize {
        self.values.iter().map(Tensor::numel).sum()
    }

    /// Every stored tensor under a unique name: trainable parameters first,
    /// then `<bn>.running_mean` / `<bn>.running_var` pairs.
    pub fn records(&self) -> Vec<(String, Tensor<T>)> {
        let mut out: Vec<(String, Tensor<T>)> =
            self.iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
        for (name, st) in self.bn_names.iter().zip(&self.bn) {
            let c = st.channels();
            out.push((
                format!("{name}.running_mean"),
                Tensor::new(vec![c], st.running_mean.clone()).expect("bn shape"),
            ));
            out.push((
                format!("{name}.running_var"),
                Tensor::new(vec![c], st.running_var.clone()).expect("bn shape"),
            ));
        }
        out
    }

    /// Overwrites stored values from `records`, which must cover exactly the
    /// names of [`ParamStore::records`] with the same element counts.
    pub fn load_records(&mut self, records: Vec<(String, Vec<T>)>) -> Result<()> {
        let expected = self.records();
        if records.len() != expected.len() {
            return Err(Error::contract(
                "load checkpoint",
                format!("expected {} tensors, found {}", expected.len(), records.len()),
            ));
        }
        let mut by_name: HashMap<String, Vec<T>> = HashMap::new();
        for (name, data) in records {
            by_name.insert(name, data);
        }
        for (name, t) in &expected {
            let data = by_name.get(name).ok_or_else(|| {
                Error::contract("load checkpoint", format!("missing tensor {name}"))
            })?;
            if data.len() != t.numel() {
                return Err(Error::contract(
                    "load checkpoint",
                    format!("{name}: expected {} values, found {}", t.numel(), data.len()),
                ));
            }
        }
        for i in 0..self.values.len() {
            let data = by_name.remove(&self.names[i]).expect("validated above");
            let shape = self.values[i].shape().to_vec();
            self.values[i] = Tensor::new(shape, data)?;
        }
        for i in 0..self.bn.len() {
            let name = &self.bn_names[i];
            self.bn[i].running_mean =
                by_name.remove(&format!("{name}.running_mean")).expect("validated above");
            self.bn[i].running_var =
                by_name.remove(&format!("{name}.running_var")).expect("validated above");
        }
        Ok(())
    }

    /// Registers every trainable tensor as a graph leaf and wraps the graph
    /// for a forward pass in `mode`.
    pub fn session(&mut self, mode: Mode) -> Session<'_, T> {
        let mut graph = Graph::new();
        let vars = self.values.iter().map(|t| graph.param(t.clone())).collect();
        Session { graph, store: self, vars, mode }
    }
}

/// One forward/backward pass over a [`ParamStore`].
pub struct Session<'a, T> {
    pub graph: Graph<T>,
    store: &'a mut ParamStore<T>,
    vars: Vec<Var>,
    mode: Mode,
}

impl<'a, T: Scalar> Session<'a, T> {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn bn_state(&mut self, id: BnId) -> &mut BnState<T> {
        self.store.bn_mut(id)
    }

    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var, id: BnId) -> Result<Var> {
        let state = self.store.bn_mut(id);
        self.graph.batch_norm(x, gamma, beta, state, self.mode)
    }

    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.graph.input(t)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        self.graph.value(v)
    }

    /// Gradient of each stored parameter, aligned with [`ParamStore::ids`].
    pub fn grads(&self) -> Vec<Option<Tensor<T>>> {
        self.vars.iter().map(|&v| self.graph.grad(v).cloned()).collect()
    }
}
