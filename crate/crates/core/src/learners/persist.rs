//! Plain-text model files. Layout is documented in `docs/model-format.md`.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::forest::ForestModel;
use super::majority::MajorityModel;
use super::mlp::{MlpConfig, MlpModel, Network};
use super::preprocess::{Imputation, MinMaxScaler, Preprocessor};
use super::smo::Kernel;
use super::svm::{BinarySvm, MultiSvm};
use super::tree::{DecisionTree, Node, NodeKind};
use super::FittedModel;
use crate::error::{Error, Result};
use crate::features::{ClassLabel, ColumnDescriptor, Encoding, NUM_CLASSES};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "income-panel-model";

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_preprocessor<W: Write>(w: &mut W, p: &Preprocessor) -> Result<()> {
    writeln!(w, "means {}", join(p.imputation.means()))?;
    let flags: Vec<u8> = p.imputation.imputed().iter().map(|&b| b as u8).collect();
    writeln!(w, "imputed {}", join(&flags))?;
    match &p.scaler {
        None => writeln!(w, "scale none")?,
        Some(s) => {
            writeln!(w, "scale minmax")?;
            writeln!(w, "min {}", join(s.min()))?;
            writeln!(w, "range {}", join(s.range()))?;
        }
    }
    Ok(())
}

pub fn write_model<W: Write>(model: &FittedModel, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{MAGIC} {FORMAT_VERSION}")?;
    let family = match model {
        FittedModel::Majority(_) => "majority",
        FittedModel::Forest(_) => "forest",
        FittedModel::Svm(_) => "svm",
        FittedModel::Mlp(_) => "mlp",
    };
    writeln!(w, "family {family}")?;
    writeln!(w, "columns {}", model.columns().len())?;
    for c in model.columns() {
        match c.encoding {
            Encoding::Numeric => writeln!(w, "column numeric {}", c.variable)?,
            Encoding::Level(code) => writeln!(w, "column level {} {code}", c.variable)?,
            Encoding::MissingLevel => writeln!(w, "column missing {}", c.variable)?,
        }
    }
    match model {
        FittedModel::Majority(m) => {
            writeln!(w, "majority {}", m.majority)?;
            writeln!(w, "priors {}", join(&m.priors))?;
        }
        FittedModel::Forest(f) => {
            writeln!(w, "mtry {}", f.mtry)?;
            writeln!(w, "seed {}", f.seed)?;
            writeln!(w, "trees {}", f.trees.len())?;
            for t in &f.trees {
                writeln!(w, "tree {}", t.nodes.len())?;
                for n in &t.nodes {
                    match n.kind {
                        NodeKind::Leaf => writeln!(w, "leaf {}", join(&n.counts))?,
                        NodeKind::Split { column, threshold, missing_left, left, right } => writeln!(
                            w,
                            "split {column} {threshold} {} {left} {right} {}",
                            if missing_left { "L" } else { "R" },
                            join(&n.counts)
                        )?,
                    }
                }
            }
        }
        FittedModel::Svm(s) => {
            write_preprocessor(&mut w, &s.preprocessor)?;
            writeln!(w, "machines {}", s.machines.len())?;
            for m in &s.machines {
                match m.kernel {
                    Kernel::Linear => writeln!(w, "kernel linear")?,
                    Kernel::Rbf { gamma } => writeln!(w, "kernel rbf {gamma}")?,
                }
                writeln!(
                    w,
                    "machine {} {} {} {} {}",
                    m.positive,
                    m.negative,
                    m.bias,
                    m.iterations,
                    m.support_vectors.len()
                )?;
                for ((sv, a), y) in m.support_vectors.iter().zip(&m.alpha).zip(&m.labels) {
                    writeln!(w, "sv {a} {y} {}", join(sv))?;
                }
            }
        }
        FittedModel::Mlp(m) => {
            write_preprocessor(&mut w, &m.preprocessor)?;
            let c = &m.config;
            let hidden = c.hidden.map_or("auto".to_string(), |h| h.to_string());
            writeln!(
                w,
                "config {hidden} {} {} {} {} {}",
                c.rate, c.momentum, c.epochs, c.batch_size, c.scale as u8
            )?;
            writeln!(w, "seed {}", m.seed)?;
            writeln!(w, "shape {} {}", m.network.inputs, m.network.hidden)?;
            writeln!(w, "params {}", join(&m.network.params))?;
            writeln!(w, "loss {}", join(&m.loss_history))?;
        }
    }
    writeln!(w, "end")?;
    w.flush()?;
    Ok(())
}

pub fn save_model(model: &FittedModel, path: &Path) -> Result<()> {
    write_model(model, File::create(path)?)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, msg: impl Display) -> Error {
        Error::ModelFormat(format!("line {}: {msg}", self.line))
    }

    /// Next line, split into tokens, with the leading keyword checked.
    fn expect(&mut self, key: &str) -> Result<Vec<String>> {
        let raw = self.inner.next().ok_or_else(|| Error::ModelFormat(format!("unexpected end of file, wanted `{key}`")))??;
        self.line += 1;
        let mut toks = raw.split_whitespace().map(str::to_string);
        match toks.next() {
            Some(k) if k == key => Ok(toks.collect()),
            other => Err(self.err(format!("expected `{key}`, found `{}`", other.unwrap_or_default()))),
        }
    }

    fn one<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let t = self.expect(key)?;
        if t.len() != 1 {
            return Err(self.err(format!("`{key}` takes one value")));
        }
        self.parse(&t[0])
    }

    fn parse<T: FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse().map_err(|_| self.err(format!("bad value `{tok}`")))
    }

    fn numbers<T: FromStr>(&self, toks: &[String]) -> Result<Vec<T>> {
        toks.iter().map(|t| self.parse(t)).collect()
    }

    fn vector(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let t = self.expect(key)?;
        let v = self.numbers(&t)?;
        if v.len() != len {
            return Err(self.err(format!("`{key}` needs {len} values, found {}", v.len())));
        }
        Ok(v)
    }

    fn class(&self, tok: &str) -> Result<ClassLabel> {
        ClassLabel::new(self.parse(tok)?).ok_or_else(|| self.err(format!("bad class `{tok}`")))
    }

    fn counts(&self, toks: &[String]) -> Result<[f64; NUM_CLASSES]> {
        let v: Vec<f64> = self.numbers(toks)?;
        v.try_into().map_err(|_| self.err("expected three class counts"))
    }
}

fn read_preprocessor<R: BufRead>(l: &mut Lines<R>, width: usize) -> Result<Preprocessor> {
    let means = l.vector("means", width)?;
    let flags = l.expect("imputed")?;
    let flags: Vec<u8> = l.numbers(&flags)?;
    if flags.len() != width {
        return Err(l.err("`imputed` length mismatch"));
    }
    let imputation = Imputation::from_parts(means, flags.iter().map(|&f| f != 0).collect());
    let scale = l.expect("scale")?;
    let scaler = match scale.first().map(String::as_str) {
        Some("none") => None,
        Some("minmax") => {
            let min = l.vector("min", width)?;
            let range = l.vector("range", width)?;
            Some(MinMaxScaler::from_parts(min, range))
        }
        _ => return Err(l.err("`scale` must be none or minmax")),
    };
    Ok(Preprocessor { imputation, scaler })
}

fn read_tree<R: BufRead>(l: &mut Lines<R>, width: usize) -> Result<DecisionTree> {
    let n: usize = l.one("tree")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let raw = l.inner.next().ok_or_else(|| Error::ModelFormat("truncated tree".into()))??;
        l.line += 1;
        let toks: Vec<String> = raw.split_whitespace().map(str::to_string).collect();
        let node = match toks.first().map(String::as_str) {
            Some("leaf") if toks.len() == 4 => Node { kind: NodeKind::Leaf, counts: l.counts(&toks[1..])? },
            Some("split") if toks.len() == 9 => {
                let column: usize = l.parse(&toks[1])?;
                let left: usize = l.parse(&toks[4])?;
                let right: usize = l.parse(&toks[5])?;
                if column >= width || left >= n || right >= n {
                    return Err(l.err("split references a missing column or node"));
                }
                let missing_left = match toks[3].as_str() {
                    "L" => true,
                    "R" => false,
                    _ => return Err(l.err("missing direction must be L or R")),
                };
                Node {
                    kind: NodeKind::Split { column, threshold: l.parse(&toks[2])?, missing_left, left, right },
                    counts: l.counts(&toks[6..])?,
                }
            }
            _ => return Err(l.err("expected a leaf or split node")),
        };
        nodes.push(node);
    }
    Ok(DecisionTree { nodes, n_features: width })
}

pub fn read_model<R: Read>(input: R) -> Result<FittedModel> {
    let mut l = Lines { inner: BufReader::new(input).lines(), line: 0 };
    let head = l.expect(MAGIC)?;
    let version: u32 = head.first().map(|v| l.parse(v)).transpose()?.unwrap_or(0);
    if version != FORMAT_VERSION {
        return Err(l.err(format!("unsupported format version {version}")));
    }
    let family: String = l.one("family")?;
    let width: usize = l.one("columns")?;
    let mut columns = Vec::with_capacity(width);
    for _ in 0..width {
        let t = l.expect("column")?;
        let encoding = match (t.first().map(String::as_str), t.len()) {
            (Some("numeric"), 2) => Encoding::Numeric,
            (Some("level"), 3) => Encoding::Level(l.parse(&t[2])?),
            (Some("missing"), 2) => Encoding::MissingLevel,
            _ => return Err(l.err("bad column descriptor")),
        };
        columns.push(ColumnDescriptor { variable: t[1].clone(), encoding });
    }
    let model = match family.as_str() {
        "majority" => {
            let majority = l.expect("majority")?;
            let majority = l.class(majority.first().map_or("", String::as_str))?;
            let priors = l.vector("priors", NUM_CLASSES)?;
            let priors = [priors[0], priors[1], priors[2]];
            FittedModel::Majority(MajorityModel { majority, priors, columns })
        }
        "forest" => {
            let mtry = l.one("mtry")?;
            let seed = l.one("seed")?;
            let n: usize = l.one("trees")?;
            let trees = (0..n).map(|_| read_tree(&mut l, width)).collect::<Result<_>>()?;
            FittedModel::Forest(ForestModel { trees, mtry, seed, columns })
        }
        "svm" => {
            let preprocessor = read_preprocessor(&mut l, width)?;
            let n: usize = l.one("machines")?;
            let mut machines = Vec::with_capacity(n);
            for _ in 0..n {
                let k = l.expect("kernel")?;
                let kernel = match k.first().map(String::as_str) {
                    Some("linear") => Kernel::Linear,
                    Some("rbf") if k.len() == 2 => Kernel::Rbf { gamma: l.parse(&k[1])? },
                    _ => return Err(l.err("unknown kernel")),
                };
                let h = l.expect("machine")?;
                if h.len() != 5 {
                    return Err(l.err("`machine` takes five values"));
                }
                let (pos, neg) = (l.class(&h[0])?, l.class(&h[1])?);
                let bias: f64 = l.parse(&h[2])?;
                let iterations: usize = l.parse(&h[3])?;
                let count: usize = l.parse(&h[4])?;
                let (mut svs, mut alpha, mut labels) = (Vec::new(), Vec::new(), Vec::new());
                for _ in 0..count {
                    let v: Vec<f64> = {
                        let t = l.expect("sv")?;
                        l.numbers(&t)?
                    };
                    if v.len() != width + 2 {
                        return Err(l.err("support vector width mismatch"));
                    }
                    alpha.push(v[0]);
                    labels.push(v[1]);
                    svs.push(v[2..].to_vec());
                }
                machines.push(BinarySvm::new(pos, neg, kernel, svs, alpha, labels, bias, iterations));
            }
            FittedModel::Svm(MultiSvm { preprocessor, machines, classes: NUM_CLASSES, columns })
        }
        "mlp" => {
            let preprocessor = read_preprocessor(&mut l, width)?;
            let c = l.expect("config")?;
            if c.len() != 6 {
                return Err(l.err("`config` takes six values"));
            }
            let config = MlpConfig {
                hidden: if c[0] == "auto" { None } else { Some(l.parse(&c[0])?) },
                rate: l.parse(&c[1])?,
                momentum: l.parse(&c[2])?,
                epochs: l.parse(&c[3])?,
                batch_size: l.parse(&c[4])?,
                scale: l.parse::<u8>(&c[5])? != 0,
            };
            let seed = l.one("seed")?;
            let shape = l.expect("shape")?;
            let shape: Vec<usize> = l.numbers(&shape)?;
            if shape.len() != 2 || shape[0] != width {
                return Err(l.err("`shape` must be `inputs hidden` with inputs = columns"));
            }
            let params = l.expect("params")?;
            let network = Network::from_params(shape[0], shape[1], l.numbers(&params)?)?;
            let loss = l.expect("loss")?;
            let loss_history = l.numbers(&loss)?;
            FittedModel::Mlp(MlpModel { preprocessor, network, config, seed, loss_history, columns })
        }
        other => return Err(l.err(format!("unknown model family `{other}`"))),
    };
    l.expect("end")?;
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<FittedModel> {
    read_model(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::super::{ForestConfig, ModelSpec, SvmConfig};
    use super::*;
    use crate::features::DesignMatrix;

    fn data() -> DesignMatrix {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let x = i as f64;
                vec![x, if i % 4 == 0 { f64::NAN } else { (x * 0.7).sin() }]
            })
            .collect();
        let t = (0..30).map(|i| ClassLabel::from_index(i % 3)).collect();
        DesignMatrix::from_rows(&rows, t).unwrap()
    }

    #[test]
    fn every_family_round_trips() {
        let m = data();
        let specs = [
            ModelSpec::Majority,
            ModelSpec::Forest(ForestConfig { trees: 5, ..Default::default() }),
            ModelSpec::Svm(SvmConfig::default()),
            ModelSpec::Mlp(MlpConfig { epochs: 5, ..Default::default() }),
        ];
        for spec in specs {
            let model = spec.fit(&m, 11).unwrap();
            let mut buf = Vec::new();
            write_model(&model, &mut buf).unwrap();
            let back = read_model(buf.as_slice()).unwrap();
            for i in 0..m.n_rows() {
                assert_eq!(model.scores(m.row(i)).unwrap(), back.scores(m.row(i)).unwrap(), "{}", spec.name());
            }
            let mut again = Vec::new();
            write_model(&back, &mut again).unwrap();
            assert_eq!(buf, again);
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let err = read_model("income-panel-model 99\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }
}
