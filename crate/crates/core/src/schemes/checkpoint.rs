//! Parameter checkpoints: a `manifest.txt` of `key=value` lines describing
//! the networks, and a sibling `checkpoint.bin` holding every parameter
//! array as a little-endian `u64` element count followed by that many
//! little-endian `f64` values, in declaration order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::networks::{Classifier, Discriminator};
use super::{LatentPartition, Result, Scheme, SchemeError, TrioState};
use crate::nn::{Activation, DenseLayer, Mlp};
use crate::tensor::Tensor;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const PARAMS_FILE: &str = "checkpoint.bin";

fn bad(msg: impl Into<String>) -> SchemeError {
    SchemeError::Checkpoint(msg.into())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SchemeError + '_ {
    move |source| SchemeError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `relu`, `leaky_relu:0.2`, `softmax_rows`, ...
pub fn write_activation(a: Activation) -> String {
    match a {
        Activation::Identity => "identity".into(),
        Activation::Relu => "relu".into(),
        Activation::LeakyRelu(s) => format!("leaky_relu:{s}"),
        Activation::Sigmoid => "sigmoid".into(),
        Activation::Tanh => "tanh".into(),
        Activation::SoftmaxRows => "softmax_rows".into(),
    }
}

pub fn read_activation(s: &str) -> Result<Activation> {
    Ok(match s {
        "identity" => Activation::Identity,
        "relu" => Activation::Relu,
        "sigmoid" => Activation::Sigmoid,
        "tanh" => Activation::Tanh,
        "softmax_rows" => Activation::SoftmaxRows,
        _ => match s.strip_prefix("leaky_relu:") {
            Some(slope) => Activation::LeakyRelu(slope.parse().map_err(|_| bad(format!("bad leaky slope in {s:?}")))?),
            None => return Err(bad(format!("unknown activation {s:?}"))),
        },
    })
}

/// Ordered `key=value` metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| bad(format!("manifest has no {key:?}")))
    }

    pub fn get_opt(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parse_key<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse().map_err(|_| bad(format!("manifest {key}={v:?} does not parse")))
    }

    fn dims(&self, key: &str) -> Result<Vec<usize>> {
        self.get(key)?
            .split(',')
            .map(|d| d.trim().parse().map_err(|_| bad(format!("bad width in {key}"))))
            .collect()
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("manifest line {} has no '='", i + 1)))?;
            m.entries.insert(k.to_string(), v.to_string());
        }
        Ok(m)
    }

    pub fn describe_mlp(&mut self, prefix: &str, mlp: &Mlp) {
        let dims: Vec<String> = mlp.dims().iter().map(ToString::to_string).collect();
        self.set(&format!("{prefix}.dims"), dims.join(","));
        self.set(&format!("{prefix}.hidden"), write_activation(mlp.hidden));
        self.set(&format!("{prefix}.output"), write_activation(mlp.output));
    }
}

/// Flat list of parameter arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamArchive {
    pub arrays: Vec<Vec<f64>>,
}

impl ParamArchive {
    pub fn push_all<'a>(&mut self, params: impl IntoIterator<Item = &'a Tensor>) {
        self.arrays.extend(params.into_iter().map(|t| t.data().to_vec()));
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let total: usize = self.arrays.iter().map(|a| 8 + 8 * a.len()).sum();
        let mut out = Vec::with_capacity(total);
        for a in &self.arrays {
            out.extend_from_slice(&(a.len() as u64).to_le_bytes());
            for v in a {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut arrays = Vec::new();
        let mut pos = 0;
        let word = |pos: usize| -> Result<[u8; 8]> {
            bytes
                .get(pos..pos + 8)
                .map(|s| s.try_into().expect("8-byte slice"))
                .ok_or_else(|| bad(format!("parameter file truncated at byte {pos}")))
        };
        while pos < bytes.len() {
            let count = u64::from_le_bytes(word(pos)?) as usize;
            pos += 8;
            let mut a = Vec::with_capacity(count.min(bytes.len() / 8));
            for _ in 0..count {
                a.push(f64::from_le_bytes(word(pos)?));
                pos += 8;
            }
            arrays.push(a);
        }
        Ok(Self { arrays })
    }

    fn cursor(self) -> ArchiveCursor {
        ArchiveCursor {
            arrays: self.arrays.into_iter(),
            index: 0,
        }
    }
}

struct ArchiveCursor {
    arrays: std::vec::IntoIter<Vec<f64>>,
    index: usize,
}

impl ArchiveCursor {
    fn take(&mut self, shape: Vec<usize>) -> Result<Tensor> {
        let i = self.index;
        self.index += 1;
        let data = self.arrays.next().ok_or_else(|| bad(format!("missing parameter array {i}")))?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(bad(format!(
                "parameter array {i} holds {} values, expected {expected} for {shape:?}",
                data.len()
            )));
        }
        Ok(Tensor::new(shape, data)?)
    }

    fn dense(&mut self, i: usize, o: usize) -> Result<DenseLayer> {
        let w = self.take(vec![i, o])?;
        let b = self.take(vec![o])?;
        Ok(DenseLayer::from_parts(w, b)?)
    }

    fn mlp(&mut self, dims: &[usize], hidden: Activation, output: Activation) -> Result<Mlp> {
        if dims.len() < 2 {
            return Err(bad(format!("network widths {dims:?} are too short")));
        }
        let layers = dims.windows(2).map(|w| self.dense(w[0], w[1])).collect::<Result<_>>()?;
        Ok(Mlp { layers, hidden, output })
    }

    fn finish(mut self) -> Result<()> {
        match self.arrays.next() {
            Some(_) => Err(bad(format!("parameter file has arrays beyond the {} expected", self.index))),
            None => Ok(()),
        }
    }
}

/// Resolves a checkpoint argument naming either the directory or the
/// `.bin` file inside it, returning `(manifest, params)` paths.
pub fn checkpoint_paths(path: &Path) -> (PathBuf, PathBuf) {
    if path.extension().is_some_and(|e| e == "bin") {
        let dir = path.parent().unwrap_or(Path::new("."));
        (dir.join(MANIFEST_FILE), path.to_path_buf())
    } else {
        (path.join(MANIFEST_FILE), path.join(PARAMS_FILE))
    }
}

pub fn write_checkpoint(dir: &Path, manifest: &Manifest, archive: &ParamArchive) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let m = dir.join(MANIFEST_FILE);
    std::fs::write(&m, manifest.render()).map_err(io_err(&m))?;
    let p = dir.join(PARAMS_FILE);
    std::fs::write(&p, archive.to_bytes()).map_err(io_err(&p))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(Manifest, ParamArchive)> {
    let (m, p) = checkpoint_paths(path);
    let text = std::fs::read_to_string(&m).map_err(io_err(&m))?;
    let bytes = std::fs::read(&p).map_err(io_err(&p))?;
    Ok((Manifest::parse(&text)?, ParamArchive::from_bytes(&bytes)?))
}

/// A single network, e.g. the evaluation probe.
pub fn save_mlp(dir: &Path, prefix: &str, mlp: &Mlp, mut manifest: Manifest) -> Result<()> {
    manifest.describe_mlp(prefix, mlp);
    let mut archive = ParamArchive::default();
    archive.push_all(mlp.params());
    write_checkpoint(dir, &manifest, &archive)
}

pub fn load_mlp(path: &Path, prefix: &str) -> Result<(Manifest, Mlp)> {
    let (manifest, archive) = read_checkpoint(path)?;
    let mut cur = archive.cursor();
    let mlp = read_mlp(&manifest, prefix, &mut cur)?;
    cur.finish()?;
    Ok((manifest, mlp))
}

fn read_mlp(manifest: &Manifest, prefix: &str, cur: &mut ArchiveCursor) -> Result<Mlp> {
    let dims = manifest.dims(&format!("{prefix}.dims"))?;
    let hidden = read_activation(manifest.get(&format!("{prefix}.hidden"))?)?;
    let output = read_activation(manifest.get(&format!("{prefix}.output"))?)?;
    cur.mlp(&dims, hidden, output)
}

/// Networks restored from a training checkpoint. Optimiser state is not
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrio {
    pub manifest: Manifest,
    pub scheme: Scheme,
    pub partition: LatentPartition,
    pub generator: Mlp,
    pub discriminator: Discriminator,
    pub classifier: Option<Mlp>,
    pub step: u64,
}

impl TrioState {
    /// Writes the parameters of all networks. `extra` carries run metadata
    /// such as the dataset and seed.
    pub fn save(&self, dir: &Path, extra: &Manifest) -> Result<()> {
        let mut m = extra.clone();
        m.set("scheme", self.scheme);
        m.set("n_classes", self.partition.n_classes);
        m.set("noise_dim", self.partition.noise_dim);
        m.set("step", self.step);
        m.describe_mlp("generator", &self.generator);
        m.describe_mlp("discriminator.trunk", &self.discriminator.trunk);
        m.set(
            "discriminator.class_head",
            self.discriminator
                .class_head
                .as_ref()
                .map_or("none".to_string(), |h| h.out_dim().to_string()),
        );
        if let Some(c) = &self.classifier {
            m.describe_mlp("classifier", &c.net);
        }
        let mut archive = ParamArchive::default();
        archive.push_all(self.generator.params());
        archive.push_all(self.discriminator.params());
        if let Some(c) = &self.classifier {
            archive.push_all(c.net.params());
        }
        write_checkpoint(dir, &m, &archive)
    }

    pub fn load(path: &Path) -> Result<LoadedTrio> {
        let (manifest, archive) = read_checkpoint(path)?;
        let scheme_name = manifest.get("scheme")?;
        let scheme = Scheme::parse(scheme_name).ok_or_else(|| bad(format!("unknown scheme {scheme_name:?}")))?;
        let partition = LatentPartition::new(manifest.parse_key("n_classes")?, manifest.parse_key("noise_dim")?);
        let mut cur = archive.cursor();
        let generator = read_mlp(&manifest, "generator", &mut cur)?;
        if generator.in_dim() != partition.dim() {
            return Err(bad(format!(
                "generator input width {} does not match latent width {}",
                generator.in_dim(),
                partition.dim()
            )));
        }
        let trunk = read_mlp(&manifest, "discriminator.trunk", &mut cur)?;
        let top = trunk.out_dim();
        let adversarial = cur.dense(top, 1)?;
        let class_head = match manifest.get("discriminator.class_head")? {
            "none" => None,
            n => Some(cur.dense(top, n.parse().map_err(|_| bad("bad discriminator.class_head"))?)?),
        };
        let classifier = match manifest.get_opt("classifier.dims") {
            Some(_) => Some(read_mlp(&manifest, "classifier", &mut cur)?),
            None => None,
        };
        cur.finish()?;
        Ok(LoadedTrio {
            scheme,
            partition,
            generator,
            discriminator: Discriminator {
                trunk,
                adversarial,
                class_head,
            },
            classifier,
            step: manifest.parse_key("step")?,
            manifest,
        })
    }
}

impl LoadedTrio {
    pub fn snapshot(&self) -> super::GeneratorSnapshot {
        super::GeneratorSnapshot {
            generator: self.generator.clone(),
            partition: self.partition,
        }
    }

    pub fn classifier_net(&self) -> Option<&Mlp> {
        self.classifier.as_ref()
    }
}

impl Classifier {
    pub fn params(&self) -> Vec<&Tensor> {
        self.net.params()
    }
}
