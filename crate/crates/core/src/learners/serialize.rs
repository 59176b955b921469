//! Line-oriented text format for trained models.
//!
//! ```text
//! reuselab-model 1
//! kind svm-rbf
//! dim 2
//! ...kind-specific lines...
//! ```
//!
//! Floats are written in shortest round-trip form, so a parse reproduces the
//! model exactly.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};

use super::{Discriminant, Kernel, KernelKind, LinearParams, Model, ModelKind, Params, SvmModel};
use crate::datasets::Label;
use crate::error::{Error, Result};

const MAGIC: &str = "reuselab-model";
const VERSION: u32 = 1;

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

impl Model {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "kind {}", self.kind());
        let _ = writeln!(out, "dim {}", self.dim());
        match &self.params {
            Params::Linear(p) => {
                let _ = writeln!(out, "weights {}", join(p.weights.iter().copied()));
                let _ = writeln!(out, "bias {}", p.bias);
            }
            Params::Gaussian(d) => {
                for c in &d.classes {
                    let _ = writeln!(out, "class {} {}", c.label.as_i8(), c.prior);
                    let _ = writeln!(out, "mean {}", join(c.mean.iter().copied()));
                    let _ = writeln!(out, "covariance {}", join(c.covariance.transpose().iter().copied()));
                }
            }
            Params::Svm(s) => {
                let kernel = match s.kernel.kind {
                    KernelKind::Linear => "linear",
                    KernelKind::Poly3 => "poly3",
                    KernelKind::Rbf => "rbf",
                };
                let _ = writeln!(out, "kernel {kernel} {}", s.kernel.gamma);
                let _ = writeln!(out, "rho {}", s.rho);
                let _ = writeln!(out, "support {}", s.support.len());
                for (sv, c) in s.support.iter().zip(&s.coef) {
                    let _ = writeln!(out, "sv {c} {}", join(sv.iter().copied()));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Model> {
        Reader::new(text).model()
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate(), line: 0 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { path: PathBuf::from("<model>"), line: self.line, message: message.into() }
    }

    /// Next non-empty line, split into its keyword and the remaining fields.
    fn next(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        for (i, raw) in self.lines.by_ref() {
            self.line = i + 1;
            let mut fields = raw.split_whitespace();
            let Some(head) = fields.next() else { continue };
            if head != keyword {
                return Err(self.err(format!("expected {keyword:?}, found {head:?}")));
            }
            return Ok(fields.collect());
        }
        Err(self.err(format!("unexpected end of input, expected {keyword:?}")))
    }

    fn floats(&self, fields: &[&str], expected: usize) -> Result<Vec<f64>> {
        if fields.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", fields.len())));
        }
        fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| self.err(format!("bad number {f:?}"))))
            .collect()
    }

    fn scalar<T: std::str::FromStr>(&mut self, keyword: &str) -> Result<T> {
        let fields = self.next(keyword)?;
        match fields.as_slice() {
            [v] => v.parse().map_err(|_| self.err(format!("bad {keyword} value {v:?}"))),
            _ => Err(self.err(format!("{keyword} takes one value"))),
        }
    }

    fn model(mut self) -> Result<Model> {
        let version: u32 = self.scalar(MAGIC)?;
        if version != VERSION {
            return Err(self.err(format!("unsupported model format version {version}")));
        }
        let kind: ModelKind = {
            let name: String = self.scalar("kind")?;
            name.parse().map_err(|_| self.err(format!("unknown model kind {name:?}")))?
        };
        let dim: usize = self.scalar("dim")?;
        let params = match kind {
            ModelKind::OnlineLinear | ModelKind::LeastSquares => {
                let fields = self.next("weights")?;
                let weights = self.floats(&fields, dim)?;
                let bias = self.scalar("bias")?;
                Params::Linear(LinearParams { weights, bias })
            }
            ModelKind::Lda | ModelKind::Qda => {
                let mut parts = Vec::with_capacity(2);
                for expected in [Label::Negative, Label::Positive] {
                    let fields = self.next("class")?;
                    let (label, prior) = match fields.as_slice() {
                        [l, p] => (
                            l.parse::<i8>().ok().and_then(|l| Label::from_i8(l).ok()),
                            p.parse::<f64>().ok(),
                        ),
                        _ => (None, None),
                    };
                    let (Some(label), Some(prior)) = (label, prior) else {
                        return Err(self.err("class line needs a label and a prior"));
                    };
                    if label != expected {
                        return Err(self.err("classes must be listed negative first"));
                    }
                    let fields = self.next("mean")?;
                    let mean = DVector::from_vec(self.floats(&fields, dim)?);
                    let fields = self.next("covariance")?;
                    let cov = DMatrix::from_row_slice(dim, dim, &self.floats(&fields, dim * dim)?);
                    parts.push((label, prior, mean, cov));
                }
                let pos = parts.pop().unwrap();
                let neg = parts.pop().unwrap();
                Params::Gaussian(Discriminant::from_parts(kind == ModelKind::Lda, [neg, pos])?)
            }
            ModelKind::SvmLinear | ModelKind::SvmPoly3 | ModelKind::SvmRbf => {
                let fields = self.next("kernel")?;
                let [name, gamma] = fields.as_slice() else {
                    return Err(self.err("kernel line needs a name and gamma"));
                };
                let kernel_kind = match *name {
                    "linear" => KernelKind::Linear,
                    "poly3" => KernelKind::Poly3,
                    "rbf" => KernelKind::Rbf,
                    other => return Err(self.err(format!("unknown kernel {other:?}"))),
                };
                let gamma: f64 = gamma.parse().map_err(|_| self.err("bad gamma"))?;
                let kernel = Kernel::new(kernel_kind, gamma)?;
                if kernel.model_kind() != kind {
                    return Err(self.err("kernel does not match model kind"));
                }
                let rho = self.scalar("rho")?;
                let count: usize = self.scalar("support")?;
                let mut support = Vec::with_capacity(count);
                let mut coef = Vec::with_capacity(count);
                for _ in 0..count {
                    let fields = self.next("sv")?;
                    let values = self.floats(&fields, dim + 1)?;
                    coef.push(values[0]);
                    support.push(values[1..].to_vec());
                }
                Params::Svm(SvmModel::new(kernel, dim, support, coef, rho))
            }
        };
        Ok(Model::new(kind, params))
    }
}
