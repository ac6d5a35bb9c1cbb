use rayon::prelude::*;

use super::{check_shape, closed_form_accumulate, Gradient, MessageState, RowMatrix};
use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::mdd::{build_atomic_with, BuildLimits, Mdd, VariableOrder};
use crate::model::{ConstraintBody, Instance, StructuredKind};

/// A constraint ready for evaluation.
#[derive(Clone, Debug)]
pub enum Compiled {
    Mdd(Mdd),
    Closed(StructuredKind),
}

#[derive(Clone, Debug, Default)]
pub struct CompileOptions {
    pub order: VariableOrder,
    pub limits: BuildLimits,
    /// Compile structured kinds to diagrams instead of closed forms.
    pub structured_as_mdd: bool,
    /// Evaluate diagrams with the level-synchronous batch engine.
    pub batch: bool,
}

#[derive(Clone, Debug)]
pub struct Term {
    pub compiled: Compiled,
    pub weight: f64,
    pub soft: bool,
}

/// Weighted sum of constraint COPs, `sum_c w_c * COP_c(P)`.
///
/// Evaluation splits the terms into a fixed number of contiguous chunks
/// (independent of the thread count), evaluates chunks in parallel and sums
/// the partial results in chunk order, so results are bit-reproducible.
#[derive(Clone, Debug)]
pub struct Objective {
    shape: Vec<usize>,
    terms: Vec<Term>,
    total_weight: f64,
    /// Diagram terms grouped by edge count, when batching is enabled.
    batches: Vec<(Batch, Vec<f64>)>,
}

const MAX_CHUNKS: usize = 64;
const MIN_CHUNK: usize = 32;

impl Objective {
    pub fn compile(instance: &Instance, options: &CompileOptions) -> Result<Self> {
        let vars = instance.variables();
        let terms = instance
            .constraints()
            .par_iter()
            .map(|c| {
                let compiled = match &c.body {
                    ConstraintBody::Structured(kind) if !options.structured_as_mdd => {
                        Compiled::Closed(kind.clone())
                    }
                    _ => Compiled::Mdd(build_atomic_with(c, vars, &options.order, &options.limits)?),
                };
                Ok(Term {
                    compiled,
                    weight: c.weight,
                    soft: c.soft,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut obj = Self::from_terms(instance.shape(), terms)?;
        if options.batch {
            obj.enable_batch()?;
        }
        Ok(obj)
    }

    pub fn from_terms(shape: Vec<usize>, terms: Vec<Term>) -> Result<Self> {
        let probe = RowMatrix::zeros(&shape);
        for t in &terms {
            if let Compiled::Mdd(m) = &t.compiled {
                check_shape(m, &probe)?;
            }
            if !(t.weight.is_finite() && t.weight > 0.0) {
                return Err(Error::Instance(format!("invalid weight {}", t.weight)));
            }
        }
        let total_weight = terms.iter().map(|t| t.weight).sum();
        Ok(Self {
            shape,
            terms,
            total_weight,
            batches: Vec::new(),
        })
    }

    /// Routes diagram terms through the batch engine, one batch per distinct
    /// edge count.
    pub fn enable_batch(&mut self) -> Result<()> {
        let mut classes: std::collections::BTreeMap<usize, (Vec<Mdd>, Vec<f64>)> = Default::default();
        for t in &self.terms {
            if let Compiled::Mdd(m) = &t.compiled {
                let e = classes.entry(m.edge_count()).or_default();
                e.0.push(m.clone());
                e.1.push(t.weight);
            }
        }
        self.batches = classes
            .into_values()
            .map(|(mdds, w)| Ok((Batch::pack(&mdds, &self.shape)?, w)))
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn is_batched(&self) -> bool {
        !self.batches.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `W`, the sum of weights and the maximum objective value.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// `N`, the number of probability entries.
    pub fn total_domain_size(&self) -> usize {
        self.shape.iter().sum()
    }

    fn check_point(&self, p: &RowMatrix) -> Result<()> {
        if p.shape() != self.shape {
            return Err(Error::Shape(format!(
                "point shape {:?} differs from instance shape",
                p.shape()
            )));
        }
        Ok(())
    }

    fn chunk_len(&self) -> usize {
        self.terms.len().div_ceil(MAX_CHUNKS).max(MIN_CHUNK)
    }

    /// Per-term COPs, unweighted.
    pub fn term_values(&self, point: impl AsRef<RowMatrix>) -> Result<Vec<f64>> {
        let p = point.as_ref();
        self.check_point(p)?;
        let mut scratch = RowMatrix::zeros(&[1]);
        let mut state = MessageState::default();
        self.terms
            .iter()
            .map(|t| match &t.compiled {
                Compiled::Mdd(m) => Ok(state.run_top_down(m, p)),
                Compiled::Closed(k) => {
                    if scratch.shape() != self.shape {
                        scratch = RowMatrix::zeros(&self.shape);
                    }
                    closed_form_accumulate(k, p, 0.0, &mut scratch)
                }
            })
            .collect()
    }

    pub fn value(&self, point: impl AsRef<RowMatrix>) -> Result<f64> {
        let p = point.as_ref();
        self.check_point(p)?;
        if self.is_batched() {
            let mut g = RowMatrix::zeros(&self.shape);
            return self.value_and_gradient_into(p, &mut g);
        }
        let partials: Vec<f64> = self
            .terms
            .par_chunks(self.chunk_len())
            .map(|chunk| {
                let mut state = MessageState::default();
                let mut scratch = None;
                let mut acc = 0.0;
                for t in chunk {
                    acc += t.weight
                        * match &t.compiled {
                            Compiled::Mdd(m) => state.run_top_down(m, p),
                            Compiled::Closed(k) => {
                                let g = scratch.get_or_insert_with(|| RowMatrix::zeros(&self.shape));
                                closed_form_accumulate(k, p, 0.0, g).expect("shape checked")
                            }
                        };
                }
                acc
            })
            .collect();
        Ok(partials.iter().sum())
    }

    /// Objective value and gradient.
    pub fn value_and_gradient(&self, point: impl AsRef<RowMatrix>) -> Result<(f64, Gradient)> {
        let mut g = RowMatrix::zeros(&self.shape);
        let v = self.value_and_gradient_into(point.as_ref(), &mut g)?;
        Ok((v, g))
    }

    /// Overwrites `grad` with the gradient and returns the value.
    pub fn value_and_gradient_into(&self, p: &RowMatrix, grad: &mut Gradient) -> Result<f64> {
        self.check_point(p)?;
        if grad.shape() != self.shape {
            *grad = RowMatrix::zeros(&self.shape);
        }
        let batched = self.is_batched();
        let partials: Vec<(f64, Gradient)> = self
            .terms
            .par_chunks(self.chunk_len())
            .map(|chunk| {
                let mut state = MessageState::default();
                let mut g = RowMatrix::zeros(&self.shape);
                let mut acc = 0.0;
                for t in chunk {
                    match &t.compiled {
                        Compiled::Mdd(_) if batched => {}
                        Compiled::Mdd(m) => {
                            state.run_top_down(m, p);
                            acc += t.weight * state.run_bottom_up(m, p);
                            state.accumulate_gradient(m, p, t.weight, &mut g);
                        }
                        Compiled::Closed(k) => {
                            acc += t.weight
                                * closed_form_accumulate(k, p, t.weight, &mut g).expect("shape checked");
                        }
                    }
                }
                (acc, g)
            })
            .collect();
        grad.fill(0.0);
        let mut value = 0.0;
        for (v, g) in &partials {
            value += v;
            grad.add_scaled(g, 1.0);
        }
        for (batch, weights) in &self.batches {
            let (cops, g) = batch.weighted_gradient(p, weights)?;
            value += cops.iter().zip(weights).map(|(c, w)| c * w).sum::<f64>();
            grad.add_scaled(&g, 1.0);
        }
        Ok(value)
    }
}
