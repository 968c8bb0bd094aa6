//! Versioned model container.
//!
//! Layout (little-endian): magic `GBVQ`, format version `u32`, section count
//! `u32`, then per section: name (`u16` length + UTF-8), dtype `u8`
//! (0 = f32, 1 = u32, 2 = UTF-8 text), rank `u8`, one `u32` per dimension,
//! payload length `u64`, payload, and a CRC-32 of everything in the section
//! before it. Real parameters are stored as `f32`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::feature_selection::FeatureSelector;
use crate::pipeline::{ModelMeta, TrainedModel};
use crate::regression::{GbdtModel, Node, Tree};
use crate::representations::spatial::SpatialState;
use crate::representations::spatio_color::SpatioColorState;
use crate::representations::spatio_temporal::SpatioTemporalState;
use crate::representations::temporal::TemporalState;
use crate::representations::{
    Kind, SpatialPipeline, SpatioColorPipeline, SpatioTemporalPipeline, TemporalPipeline,
};
use crate::scalar::Scalar;
use crate::tensor::Matrix;
use crate::transforms::pca::Pca;
use crate::transforms::saab::{Saab, SaabGeometry, Window};

pub const MAGIC: &[u8; 4] = b"GBVQ";
pub const FORMAT_VERSION: u32 = 1;

const NO_FEATURE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
enum Payload {
    F32(Vec<f32>),
    U32(Vec<u32>),
    Text(String),
}

#[derive(Clone, Debug, PartialEq)]
struct Section {
    dims: Vec<u32>,
    payload: Payload,
}

#[derive(Default)]
struct Writer {
    sections: Vec<(String, Section)>,
}

impl Writer {
    fn f32s<T: Scalar>(&mut self, name: String, dims: &[usize], v: &[T]) {
        self.push(
            name,
            dims,
            Payload::F32(v.iter().map(|x| x.as_f32()).collect()),
        );
    }

    fn u32s(&mut self, name: String, v: Vec<u32>) {
        let n = v.len();
        self.push(name, &[n], Payload::U32(v));
    }

    fn text(&mut self, name: &str, s: String) {
        let n = s.len();
        self.push(name.to_string(), &[n], Payload::Text(s));
    }

    fn push(&mut self, name: String, dims: &[usize], payload: Payload) {
        let dims = dims.iter().map(|&d| d as u32).collect();
        self.sections.push((name, Section { dims, payload }));
    }

    fn saab<T: Scalar>(&mut self, prefix: &str, k: &Saab<T>) {
        let g = k.geometry;
        self.u32s(
            format!("{prefix}.geometry"),
            [
                g.window.h,
                g.window.w,
                g.window.t,
                g.stride.h,
                g.stride.w,
                g.stride.t,
                g.in_channels,
            ]
            .iter()
            .map(|&v| v as u32)
            .collect(),
        );
        self.f32s(format!("{prefix}.ac"), &[k.ac.rows, k.ac.cols], &k.ac.data);
        self.f32s(
            format!("{prefix}.variance"),
            &[k.explained_variance.len()],
            &k.explained_variance,
        );
    }

    fn saabs<T: Scalar>(&mut self, prefix: &str, ks: &[Saab<T>]) {
        self.u32s(format!("{prefix}.count"), vec![ks.len() as u32]);
        for (i, k) in ks.iter().enumerate() {
            self.saab(&format!("{prefix}.{i}"), k);
        }
    }

    fn pca<T: Scalar>(&mut self, prefix: &str, p: &Pca<T>) {
        self.f32s(format!("{prefix}.mean"), &[p.mean.len()], &p.mean);
        let c = &p.components;
        self.f32s(format!("{prefix}.components"), &[c.rows, c.cols], &c.data);
        self.f32s(
            format!("{prefix}.variance"),
            &[p.explained_variance.len()],
            &p.explained_variance,
        );
    }

    fn pcas<T: Scalar>(&mut self, prefix: &str, ps: &[Pca<T>]) {
        self.u32s(format!("{prefix}.count"), vec![ps.len() as u32]);
        for (i, p) in ps.iter().enumerate() {
            self.pca(&format!("{prefix}.{i}"), p);
        }
    }

    fn finish(self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());
        for (name, s) in self.sections {
            let start = out.len();
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            let (tag, bytes): (u8, Vec<u8>) = match s.payload {
                Payload::F32(v) => (0, v.iter().flat_map(|x| x.to_le_bytes()).collect()),
                Payload::U32(v) => (1, v.iter().flat_map(|x| x.to_le_bytes()).collect()),
                Payload::Text(t) => (2, t.into_bytes()),
            };
            out.push(tag);
            out.push(s.dims.len() as u8);
            for d in &s.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
            out.extend_from_slice(&bytes);
            let crc = crc32fast::hash(&out[start..]);
            out.extend_from_slice(&crc.to_le_bytes());
        }
        out
    }
}

fn meta_text(meta: &ModelMeta) -> String {
    let [a, b, c, d] = meta.dims;
    let refs = Kind::ALL.map(|k| k.reference_dim().to_string()).join(",");
    format!(
        "format_version={FORMAT_VERSION}\ndataset_hash={}\ncrop_seed={}\ntrain_seed={}\ndims={a},{b},{c},{d}\nreference_dims={refs}\ntrain_videos={}\nval_videos={}\ntrain_cubes={}\nval_rmse={}\n",
        meta.dataset_hash, meta.crop_seed, meta.train_seed, meta.train_videos, meta.val_videos, meta.train_cubes, meta.val_rmse
    )
}

pub fn serialize<T: Scalar>(model: &TrainedModel<T>) -> Result<Vec<u8>> {
    let unfitted = || Error::State("cannot serialize an unfitted pipeline".into());
    let mut w = Writer::default();
    w.text("meta", meta_text(&model.meta));
    w.text("config", model.config.to_text());

    let s = model.spatial.state.as_ref().ok_or_else(unfitted)?;
    w.saab("spatial.hop1", &s.hop1);
    w.saab("spatial.hop2", &s.hop2);
    w.pcas("spatial.mid_pca", &s.mid_pca);

    let s = model.spatio_color.state.as_ref().ok_or_else(unfitted)?;
    w.saab("spatio_color.hop1", &s.hop1);
    w.saabs("spatio_color.hop2", &s.hop2);
    w.pcas("spatio_color.high_pca", &s.high_pca);

    let s = model.temporal.state.as_ref().ok_or_else(unfitted)?;
    w.pcas("temporal.spectral", s.spectral.as_slice());

    let s = model.spatio_temporal.state.as_ref().ok_or_else(unfitted)?;
    w.saab("spatio_temporal.hop1", &s.hop1);
    w.saabs("spatio_temporal.hop2", &s.hop2);
    w.pcas("spatio_temporal.low_pca", &s.low_pca);
    w.pcas("spatio_temporal.high_pca", &s.high_pca);

    let sel = &model.selector;
    w.u32s(
        "selector.counts".into(),
        sel.counts.iter().map(|&c| c as u32).collect(),
    );
    for (kind, idx) in Kind::ALL.iter().zip(&sel.selected) {
        w.u32s(
            format!("selector.{}", kind.name()),
            idx.iter().map(|&i| i as u32).collect(),
        );
    }

    let g = &model.gbdt;
    w.u32s("gbdt.n_features".into(), vec![g.n_features as u32]);
    w.f32s(
        "gbdt.base_lr".into(),
        &[2],
        &[g.base_score, g.learning_rate],
    );
    let mut offsets = vec![0u32];
    let (mut feature, mut left, mut right, mut value) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for t in &g.trees {
        for n in &t.nodes {
            match *n {
                Node::Split {
                    feature: f,
                    threshold,
                    left: l,
                    right: r,
                } => {
                    feature.push(f as u32);
                    left.push(l as u32);
                    right.push(r as u32);
                    value.push(threshold);
                }
                Node::Leaf(v) => {
                    feature.push(NO_FEATURE);
                    left.push(0);
                    right.push(0);
                    value.push(v);
                }
            }
        }
        offsets.push(feature.len() as u32);
    }
    w.u32s("gbdt.tree_offsets".into(), offsets);
    w.u32s("gbdt.feature".into(), feature);
    w.u32s("gbdt.left".into(), left);
    w.u32s("gbdt.right".into(), right);
    let n = value.len();
    w.f32s("gbdt.value".into(), &[n], &value);
    Ok(w.finish())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos,
                message: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2, what)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, what)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8, what)?.try_into().expect("8 bytes"),
        ))
    }
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

/// Checks magic and version, then splits the container into sections.
fn read_sections(bytes: &[u8]) -> Result<BTreeMap<String, Section>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(format_err(0, "bad magic, not a model file"));
    }
    let version = c.u32("format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let count = c.u32("section count")?;
    let mut out = BTreeMap::new();
    for _ in 0..count {
        let start = c.pos;
        let len = c.u16("section name length")? as usize;
        let name = std::str::from_utf8(c.take(len, "section name")?)
            .map_err(|_| format_err(start + 2, "section name is not UTF-8"))?
            .to_string();
        let tag = c.u8("dtype")?;
        let rank = c.u8("rank")? as usize;
        let dims = (0..rank)
            .map(|_| c.u32("dimension"))
            .collect::<Result<Vec<u32>>>()?;
        let payload_len = c.u64("payload length")?;
        let payload_at = c.pos;
        let payload_len = usize::try_from(payload_len)
            .map_err(|_| format_err(payload_at, "payload too large"))?;
        let raw = c.take(payload_len, &format!("payload of {name}"))?;
        let crc_expected = crc32fast::hash(&bytes[start..c.pos]);
        let crc_at = c.pos;
        if c.u32("checksum")? != crc_expected {
            return Err(format_err(
                crc_at,
                format!("checksum mismatch in section {name}"),
            ));
        }
        let elems: usize = dims.iter().map(|&d| d as usize).product();
        let payload = match tag {
            0 | 1 => {
                if raw.len() % 4 != 0 || (rank > 0 && raw.len() / 4 != elems) {
                    return Err(format_err(
                        payload_at,
                        format!("section {name} size does not match its shape"),
                    ));
                }
                let words = raw.chunks_exact(4).map(|w| w.try_into().expect("4 bytes"));
                if tag == 0 {
                    Payload::F32(words.map(f32::from_le_bytes).collect())
                } else {
                    Payload::U32(words.map(u32::from_le_bytes).collect())
                }
            }
            2 => Payload::Text(
                String::from_utf8(raw.to_vec())
                    .map_err(|_| format_err(payload_at, format!("section {name} is not UTF-8")))?,
            ),
            t => {
                return Err(format_err(
                    start,
                    format!("unknown dtype {t} in section {name}"),
                ))
            }
        };
        if out
            .insert(name.clone(), Section { dims, payload })
            .is_some()
        {
            return Err(format_err(start, format!("duplicate section {name}")));
        }
    }
    if c.pos != bytes.len() {
        return Err(format_err(c.pos, "trailing bytes after last section"));
    }
    Ok(out)
}

struct Reader {
    sections: BTreeMap<String, Section>,
}

fn bad(name: &str, what: &str) -> Error {
    format_err(0, format!("section {name}: {what}"))
}

impl Reader {
    fn get(&self, name: &str) -> Result<&Section> {
        self.sections.get(name).ok_or_else(|| bad(name, "missing"))
    }

    fn text(&self, name: &str) -> Result<&str> {
        match &self.get(name)?.payload {
            Payload::Text(t) => Ok(t),
            _ => Err(bad(name, "expected text")),
        }
    }

    fn u32s(&self, name: &str) -> Result<&[u32]> {
        match &self.get(name)?.payload {
            Payload::U32(v) => Ok(v),
            _ => Err(bad(name, "expected u32 data")),
        }
    }

    fn f32s<T: Scalar>(&self, name: &str) -> Result<(Vec<usize>, Vec<T>)> {
        let s = self.get(name)?;
        match &s.payload {
            Payload::F32(v) => Ok((
                s.dims.iter().map(|&d| d as usize).collect(),
                v.iter().map(|&x| T::lit(f64::from(x))).collect(),
            )),
            _ => Err(bad(name, "expected f32 data")),
        }
    }

    fn matrix<T: Scalar>(&self, name: &str) -> Result<Matrix<T>> {
        let (dims, data) = self.f32s(name)?;
        match dims.as_slice() {
            &[r, c] => Matrix::from_vec(r, c, data).map_err(|_| bad(name, "bad matrix shape")),
            _ => Err(bad(name, "expected a matrix")),
        }
    }

    fn count(&self, prefix: &str) -> Result<usize> {
        let name = format!("{prefix}.count");
        match self.u32s(&name)? {
            [n] => Ok(*n as usize),
            _ => Err(bad(&name, "expected one count")),
        }
    }

    fn saab<T: Scalar>(&self, prefix: &str) -> Result<Saab<T>> {
        let gname = format!("{prefix}.geometry");
        let g = self.u32s(&gname)?;
        let g: [u32; 7] = g
            .try_into()
            .map_err(|_| bad(&gname, "expected 7 entries"))?;
        let g = g.map(|v| v as usize);
        let geometry = SaabGeometry::new(
            Window::new(g[0], g[1], g[2]),
            Window::new(g[3], g[4], g[5]),
            g[6],
        );
        let ac = self.matrix(&format!("{prefix}.ac"))?;
        if ac.cols != geometry.patch_len() {
            return Err(bad(prefix, "kernel length does not match geometry"));
        }
        let (_, explained_variance) = self.f32s(&format!("{prefix}.variance"))?;
        Ok(Saab {
            geometry,
            ac,
            explained_variance,
        })
    }

    fn saabs<T: Scalar>(&self, prefix: &str) -> Result<Vec<Saab<T>>> {
        (0..self.count(prefix)?)
            .map(|i| self.saab(&format!("{prefix}.{i}")))
            .collect()
    }

    fn pca<T: Scalar>(&self, prefix: &str) -> Result<Pca<T>> {
        let (_, mean) = self.f32s(&format!("{prefix}.mean"))?;
        let components = self.matrix(&format!("{prefix}.components"))?;
        if components.cols != mean.len() {
            return Err(bad(prefix, "component length does not match mean"));
        }
        let (_, explained_variance) = self.f32s(&format!("{prefix}.variance"))?;
        Ok(Pca {
            mean,
            components,
            explained_variance,
        })
    }

    fn pcas<T: Scalar>(&self, prefix: &str) -> Result<Vec<Pca<T>>> {
        (0..self.count(prefix)?)
            .map(|i| self.pca(&format!("{prefix}.{i}")))
            .collect()
    }
}

/// Parses `key=value` lines.
fn kv(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn meta_from(text: &str) -> Result<ModelMeta> {
    let m = kv(text);
    let field = |k: &str| m.get(k).ok_or_else(|| bad("meta", &format!("missing {k}")));
    let num = |k: &str| -> Result<u64> {
        field(k)?
            .parse()
            .map_err(|_| bad("meta", &format!("bad {k}")))
    };
    let dims: Vec<usize> = field("dims")?
        .split(',')
        .map(|d| d.parse().map_err(|_| bad("meta", "bad dims")))
        .collect::<Result<_>>()?;
    Ok(ModelMeta {
        dataset_hash: field("dataset_hash")?.clone(),
        crop_seed: num("crop_seed")?,
        train_seed: num("train_seed")?,
        dims: dims
            .try_into()
            .map_err(|_| bad("meta", "dims needs 4 entries"))?,
        train_videos: num("train_videos")? as usize,
        val_videos: num("val_videos")? as usize,
        train_cubes: num("train_cubes")? as usize,
        val_rmse: field("val_rmse")?
            .parse()
            .map_err(|_| bad("meta", "bad val_rmse"))?,
    })
}

pub fn deserialize<T: Scalar>(bytes: &[u8]) -> Result<TrainedModel<T>> {
    let r = Reader {
        sections: read_sections(bytes)?,
    };
    let config = RunConfig::from_text(r.text("config")?)?;
    let meta = meta_from(r.text("meta")?)?;
    let c = &config.crop;

    let mut spatial = SpatialPipeline::new(c.sub_image_size, config.repr.clone());
    spatial.state = Some(SpatialState {
        hop1: r.saab("spatial.hop1")?,
        hop2: r.saab("spatial.hop2")?,
        mid_pca: r.pcas("spatial.mid_pca")?,
    });
    let mut spatio_color = SpatioColorPipeline::new(c.sub_image_size, config.repr.clone());
    spatio_color.state = Some(SpatioColorState {
        hop1: r.saab("spatio_color.hop1")?,
        hop2: r.saabs("spatio_color.hop2")?,
        high_pca: r.pcas("spatio_color.high_pca")?,
    });
    let mut temporal = TemporalPipeline::new(c.sub_video_len, config.repr.clone());
    temporal.state = Some(TemporalState {
        spectral: r.pcas("temporal.spectral")?.into_iter().next(),
    });
    let mut spatio_temporal = SpatioTemporalPipeline::new(c.sub_cube_dims, config.repr.clone());
    spatio_temporal.state = Some(SpatioTemporalState {
        hop1: r.saab("spatio_temporal.hop1")?,
        hop2: r.saabs("spatio_temporal.hop2")?,
        low_pca: r.pcas("spatio_temporal.low_pca")?,
        high_pca: r.pcas("spatio_temporal.high_pca")?,
    });

    let counts: [u32; 4] = r
        .u32s("selector.counts")?
        .try_into()
        .map_err(|_| bad("selector.counts", "expected 4 entries"))?;
    let mut selected: [Vec<usize>; 4] = Default::default();
    for (i, kind) in Kind::ALL.iter().enumerate() {
        let name = format!("selector.{}", kind.name());
        selected[i] = r.u32s(&name)?.iter().map(|&v| v as usize).collect();
        if selected[i].len() != counts[i] as usize {
            return Err(bad(&name, "length does not match its count"));
        }
    }
    let selector = FeatureSelector {
        counts: counts.map(|c| c as usize),
        selected,
    };

    let n_features = match r.u32s("gbdt.n_features")? {
        [n] => *n as usize,
        _ => return Err(bad("gbdt.n_features", "expected one entry")),
    };
    let (_, bl) = r.f32s::<T>("gbdt.base_lr")?;
    let [base_score, learning_rate]: [T; 2] = bl
        .try_into()
        .map_err(|_| bad("gbdt.base_lr", "expected 2 entries"))?;
    let offsets = r.u32s("gbdt.tree_offsets")?;
    let feature = r.u32s("gbdt.feature")?;
    let left = r.u32s("gbdt.left")?;
    let right = r.u32s("gbdt.right")?;
    let (_, value) = r.f32s::<T>("gbdt.value")?;
    let n_nodes = feature.len();
    if left.len() != n_nodes || right.len() != n_nodes || value.len() != n_nodes {
        return Err(bad("gbdt", "node arrays differ in length"));
    }
    let mut trees = Vec::with_capacity(offsets.len().saturating_sub(1));
    for w in offsets.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        if a >= b || b > n_nodes {
            return Err(bad("gbdt.tree_offsets", "offsets out of range"));
        }
        let len = b - a;
        let nodes = (a..b)
            .map(|i| {
                if feature[i] == NO_FEATURE {
                    return Ok(Node::Leaf(value[i]));
                }
                let (f, l, rr) = (feature[i] as usize, left[i] as usize, right[i] as usize);
                // Children are created after their parent.
                if f >= n_features || l <= i - a || rr <= i - a || l >= len || rr >= len {
                    return Err(bad("gbdt", "malformed split node"));
                }
                Ok(Node::Split {
                    feature: f,
                    threshold: value[i],
                    left: l,
                    right: rr,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        trees.push(Tree { nodes });
    }
    if selector.total() != n_features {
        return Err(bad("gbdt.n_features", "does not match the selector"));
    }

    Ok(TrainedModel {
        config,
        spatial,
        spatio_color,
        temporal,
        spatio_temporal,
        selector,
        gbdt: GbdtModel {
            n_features,
            base_score,
            learning_rate,
            trees,
        },
        meta,
    })
}

/// Round-trips `model` through the container so its parameters are exactly
/// the stored ones.
pub fn snap<T: Scalar>(model: &TrainedModel<T>) -> Result<TrainedModel<T>> {
    deserialize(&serialize(model)?)
}

/// `meta` and `config` entries of a model file, without decoding parameters.
pub fn read_metadata(bytes: &[u8]) -> Result<BTreeMap<String, String>> {
    let sections = read_sections(bytes)?;
    let r = Reader { sections };
    let mut out = kv(r.text("meta")?);
    for (k, v) in kv(r.text("config")?) {
        out.insert(format!("config.{k}"), v);
    }
    Ok(out)
}

pub fn save<T: Scalar>(model: &TrainedModel<T>, path: &Path) -> Result<usize> {
    let bytes = serialize(model)?;
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len())
}

pub fn load<T: Scalar>(path: &Path) -> Result<TrainedModel<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    deserialize(&bytes)
}
