//! Codec registry: built-in codecs and adapters around external programs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::container::{CodecId, Container, Metadata, LOSSLESS_QUALITY};
use crate::error::{Error, Result};
use crate::force::ForceImageMapping;
use crate::frame::{decode_raster, encode_ppm, SensorKind, TactileFrame};
use crate::lossless::{decode_lossless_bytes, encode_lossless, LosslessConfig};
use crate::lossy::{decode_lossy_bytes, encode_lossy, QualityPoint};

/// Quality token of lossless codecs.
pub const LOSSLESS: &str = "lossless";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecKind {
    BuiltinLossless,
    BuiltinLossy,
    ExternalLossless,
    ExternalLossy,
}

impl CodecKind {
    pub fn is_lossless(self) -> bool {
        matches!(self, CodecKind::BuiltinLossless | CodecKind::ExternalLossless)
    }

    pub fn is_external(self) -> bool {
        matches!(self, CodecKind::ExternalLossless | CodecKind::ExternalLossy)
    }
}

/// What a decoder may need to know about the frame it reconstructs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameShape {
    pub width: usize,
    pub height: usize,
    pub sensor_kind: SensorKind,
    pub mapping: Option<ForceImageMapping>,
}

impl From<&TactileFrame> for FrameShape {
    fn from(f: &TactileFrame) -> Self {
        Self {
            width: f.width(),
            height: f.height(),
            sensor_kind: f.sensor_kind(),
            mapping: f.mapping().copied(),
        }
    }
}

pub trait Codec: Send + Sync {
    fn id(&self) -> &str;
    fn kind(&self) -> CodecKind;
    /// Quality tokens swept by the benchmark; `["lossless"]` for lossless codecs.
    fn qualities(&self) -> Vec<String>;
    fn encode(&self, frame: &TactileFrame, quality: &str) -> Result<Vec<u8>>;
    fn decode(&self, data: &[u8], shape: &FrameShape) -> Result<TactileFrame>;
}

impl fmt::Debug for dyn Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Codec({})", self.id())
    }
}

fn expect_lossless(quality: &str) -> Result<()> {
    if quality == LOSSLESS {
        Ok(())
    } else {
        Err(Error::InvalidQuality(quality.to_string()))
    }
}

/// Raw RGB bytes in a TACB container.
#[derive(Debug, Default)]
pub struct StoreCodec;

impl Codec for StoreCodec {
    fn id(&self) -> &str {
        "store"
    }
    fn kind(&self) -> CodecKind {
        CodecKind::BuiltinLossless
    }
    fn qualities(&self) -> Vec<String> {
        vec![LOSSLESS.into()]
    }
    fn encode(&self, frame: &TactileFrame, quality: &str) -> Result<Vec<u8>> {
        expect_lossless(quality)?;
        Ok(Container {
            codec: CodecId::Store,
            sensor_kind: frame.sensor_kind(),
            width: frame.width(),
            height: frame.height(),
            quality: LOSSLESS_QUALITY,
            metadata: Metadata {
                mapping: frame.mapping().copied(),
                ..Default::default()
            },
            payload: frame.pixels().to_vec(),
        }
        .to_bytes())
    }
    fn decode(&self, data: &[u8], _shape: &FrameShape) -> Result<TactileFrame> {
        decode_store(data)
    }
}

fn decode_store(data: &[u8]) -> Result<TactileFrame> {
    let c = Container::parse(data)?;
    if c.codec != CodecId::Store {
        return Err(Error::CorruptHeader(format!("{:?} stream given to store", c.codec)));
    }
    let mut f = TactileFrame::new(c.width, c.height, c.payload, c.sensor_kind)
        .map_err(|_| Error::CorruptPayload)?;
    f.set_meta(c.sensor_kind, c.metadata.mapping);
    Ok(f)
}

#[derive(Debug, Default)]
pub struct TacoLosslessCodec {
    pub config: LosslessConfig,
}

impl Codec for TacoLosslessCodec {
    fn id(&self) -> &str {
        "taco-ll-lite"
    }
    fn kind(&self) -> CodecKind {
        CodecKind::BuiltinLossless
    }
    fn qualities(&self) -> Vec<String> {
        vec![LOSSLESS.into()]
    }
    fn encode(&self, frame: &TactileFrame, quality: &str) -> Result<Vec<u8>> {
        expect_lossless(quality)?;
        Ok(encode_lossless(frame, &self.config)?.into_bytes())
    }
    fn decode(&self, data: &[u8], _shape: &FrameShape) -> Result<TactileFrame> {
        decode_lossless_bytes(data)
    }
}

#[derive(Debug, Default)]
pub struct TacoLossyCodec;

impl TacoLossyCodec {
    pub fn quality_point(token: &str) -> Result<QualityPoint> {
        token
            .parse::<u8>()
            .map_err(|_| Error::InvalidQuality(token.to_string()))
            .and_then(QualityPoint::from_index)
    }
}

impl Codec for TacoLossyCodec {
    fn id(&self) -> &str {
        "taco-l-lite"
    }
    fn kind(&self) -> CodecKind {
        CodecKind::BuiltinLossy
    }
    fn qualities(&self) -> Vec<String> {
        QualityPoint::all().iter().map(|q| q.index.to_string()).collect()
    }
    fn encode(&self, frame: &TactileFrame, quality: &str) -> Result<Vec<u8>> {
        Ok(encode_lossy(frame, &Self::quality_point(quality)?)?.into_bytes())
    }
    fn decode(&self, data: &[u8], _shape: &FrameShape) -> Result<TactileFrame> {
        decode_lossy_bytes(data)
    }
}

/// Decodes any TACB stream produced by a built-in codec.
pub fn decode_container(data: &[u8]) -> Result<TactileFrame> {
    let c = Container::parse(data)?;
    match c.codec {
        CodecId::TacoLlLite => decode_lossless_bytes(data),
        CodecId::TacoLLite => decode_lossy_bytes(data),
        CodecId::Store => decode_store(data),
        CodecId::External => Err(Error::CorruptHeader("external payloads need their own decoder".into())),
    }
}

/// An external program described by command templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecSpec {
    pub id: String,
    pub kind: CodecKind,
    #[serde(default)]
    pub encode_cmd: Option<String>,
    #[serde(default)]
    pub decode_cmd: Option<String>,
    #[serde(default)]
    pub qualities: Vec<String>,
}

impl CodecSpec {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::Config("codec id is empty".into()));
        }
        if !self.kind.is_external() {
            if self.encode_cmd.is_some() || self.decode_cmd.is_some() {
                return Err(Error::MalformedTemplate(format!("built-in {} takes no templates", self.id)));
            }
            return Ok(());
        }
        for (name, t) in [("encode_cmd", &self.encode_cmd), ("decode_cmd", &self.decode_cmd)] {
            let t = t
                .as_deref()
                .ok_or_else(|| Error::MalformedTemplate(format!("{}: {name} missing", self.id)))?;
            if !t.contains("{in}") || !t.contains("{out}") {
                return Err(Error::MalformedTemplate(format!(
                    "{}: {name} needs both {{in}} and {{out}}: {t}",
                    self.id
                )));
            }
        }
        if self.kind == CodecKind::ExternalLossy {
            if self.qualities.is_empty() {
                return Err(Error::MalformedTemplate(format!("{}: lossy codec without qualities", self.id)));
            }
            if !self.encode_cmd.as_deref().unwrap_or_default().contains("{quality}") {
                return Err(Error::MalformedTemplate(format!("{}: encode_cmd lacks {{quality}}", self.id)));
            }
        }
        Ok(())
    }
}

/// Runs external encode/decode commands through `sh -c` on temp files. The
/// encoder reads a binary PPM; the decoder may write PPM or PNG.
#[derive(Debug)]
pub struct ExternalCodec {
    spec: CodecSpec,
}

impl ExternalCodec {
    pub fn new(spec: CodecSpec) -> Result<Self> {
        spec.validate()?;
        if !spec.kind.is_external() {
            return Err(Error::MalformedTemplate(format!("{} is not an external kind", spec.id)));
        }
        Ok(Self { spec })
    }

    fn run(&self, template: &str, input: &Path, output: &Path, quality: &str) -> Result<()> {
        let cmd = template
            .replace("{in}", &shell_quote(input))
            .replace("{out}", &shell_quote(output))
            .replace("{quality}", &shell_quote_str(quality));
        let out = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| Error::ExternalCommandFailure(format!("{}: cannot spawn sh: {e}", self.spec.id)))?;
        if !out.status.success() {
            return Err(Error::ExternalCommandFailure(format!(
                "{}: `{cmd}` exited with {}: {}",
                self.spec.id,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(())
    }

    fn read_output(&self, path: &Path) -> Result<Vec<u8>> {
        std::fs::read(path).map_err(|e| {
            Error::ExternalCommandFailure(format!("{}: no output at {}: {e}", self.spec.id, path.display()))
        })
    }
}

fn shell_quote(p: &Path) -> String {
    shell_quote_str(&p.to_string_lossy())
}

fn shell_quote_str(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

impl Codec for ExternalCodec {
    fn id(&self) -> &str {
        &self.spec.id
    }
    fn kind(&self) -> CodecKind {
        self.spec.kind
    }
    fn qualities(&self) -> Vec<String> {
        if self.spec.kind.is_lossless() {
            vec![LOSSLESS.into()]
        } else {
            self.spec.qualities.clone()
        }
    }
    fn encode(&self, frame: &TactileFrame, quality: &str) -> Result<Vec<u8>> {
        if self.spec.kind.is_lossless() {
            expect_lossless(quality)?;
        } else if !self.spec.qualities.iter().any(|q| q == quality) {
            return Err(Error::InvalidQuality(quality.to_string()));
        }
        let dir = tempfile::tempdir().map_err(|e| Error::ExternalCommandFailure(e.to_string()))?;
        let input = dir.path().join("frame.ppm");
        let output = dir.path().join("frame.enc");
        std::fs::write(&input, encode_ppm(frame)).map_err(|e| Error::ExternalCommandFailure(e.to_string()))?;
        self.run(self.spec.encode_cmd.as_deref().expect("validated"), &input, &output, quality)?;
        self.read_output(&output)
    }
    fn decode(&self, data: &[u8], shape: &FrameShape) -> Result<TactileFrame> {
        let dir = tempfile::tempdir().map_err(|e| Error::ExternalCommandFailure(e.to_string()))?;
        let input = dir.path().join("frame.enc");
        let output = dir.path().join("frame.out");
        std::fs::write(&input, data).map_err(|e| Error::ExternalCommandFailure(e.to_string()))?;
        self.run(self.spec.decode_cmd.as_deref().expect("validated"), &input, &output, "")?;
        let bytes = self.read_output(&output)?;
        let raster = decode_raster(&bytes)
            .map_err(|e| Error::ExternalCommandFailure(format!("{}: decoded output: {e}", self.spec.id)))?;
        if raster.width() != shape.width || raster.height() != shape.height {
            return Err(Error::ExternalCommandFailure(format!(
                "{}: decoded {}x{}, expected {}x{}",
                self.spec.id,
                raster.width(),
                raster.height(),
                shape.width,
                shape.height
            )));
        }
        let mut f = TactileFrame::new(shape.width, shape.height, raster.into_pixels(), shape.sensor_kind)?;
        f.set_meta(shape.sensor_kind, shape.mapping);
        Ok(f)
    }
}

/// Codecs by id.
#[derive(Clone, Default)]
pub struct CodecRegistry {
    codecs: BTreeMap<String, Arc<dyn Codec>>,
}

impl fmt::Debug for CodecRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.codecs.keys()).finish()
    }
}

impl CodecRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `store`, `taco-ll-lite` and `taco-l-lite`.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        for c in [
            Arc::new(StoreCodec) as Arc<dyn Codec>,
            Arc::new(TacoLosslessCodec::default()),
            Arc::new(TacoLossyCodec),
        ] {
            r.register(c).expect("distinct built-in ids");
        }
        r
    }

    pub fn register(&mut self, codec: Arc<dyn Codec>) -> Result<()> {
        let id = codec.id().to_string();
        if self.codecs.contains_key(&id) {
            return Err(Error::DuplicateCodec(id));
        }
        self.codecs.insert(id, codec);
        Ok(())
    }

    pub fn register_external(&mut self, spec: CodecSpec) -> Result<()> {
        self.register(Arc::new(ExternalCodec::new(spec)?))
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Codec>> {
        self.codecs.get(id).cloned().ok_or_else(|| Error::UnknownCodec(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.codecs.keys().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn gzip_spec() -> CodecSpec {
        CodecSpec {
            id: "gzip".into(),
            kind: CodecKind::ExternalLossless,
            encode_cmd: Some("gzip -9 -c {in} > {out}".into()),
            decode_cmd: Some("gzip -d -c {in} > {out}".into()),
            qualities: vec![],
        }
    }

    #[test]
    fn builtins_round_trip() {
        let f = synth::tactile_frame(37, 21, 3);
        let reg = CodecRegistry::with_builtins();
        assert_eq!(reg.ids(), ["store", "taco-l-lite", "taco-ll-lite"]);
        for id in ["store", "taco-ll-lite"] {
            let c = reg.get(id).unwrap();
            let bytes = c.encode(&f, LOSSLESS).unwrap();
            assert_eq!(c.decode(&bytes, &(&f).into()).unwrap(), f);
            assert_eq!(decode_container(&bytes).unwrap(), f);
        }
        let lossy = reg.get("taco-l-lite").unwrap();
        assert_eq!(lossy.qualities(), ["0", "1", "2", "3"]);
        let bytes = lossy.encode(&f, "3").unwrap();
        assert_eq!(lossy.decode(&bytes, &(&f).into()).unwrap().width(), 37);
        assert!(matches!(lossy.encode(&f, "9"), Err(Error::InvalidQuality(_))));
        assert!(matches!(reg.get("nope"), Err(Error::UnknownCodec(_))));
    }

    #[test]
    fn store_is_eight_bits_plus_header() {
        let f = synth::tactile_frame(64, 64, 1);
        let n = StoreCodec.encode(&f, LOSSLESS).unwrap().len();
        assert!(n > f.raw_len());
        assert!(n < f.raw_len() + 256);
    }

    #[test]
    fn templates_are_validated() {
        let mut s = gzip_spec();
        s.encode_cmd = Some("gzip -9 -c {in}".into());
        assert!(matches!(ExternalCodec::new(s), Err(Error::MalformedTemplate(_))));
        let mut s = gzip_spec();
        s.decode_cmd = None;
        assert!(matches!(ExternalCodec::new(s), Err(Error::MalformedTemplate(_))));
        let lossy = CodecSpec {
            kind: CodecKind::ExternalLossy,
            qualities: vec!["1".into()],
            ..gzip_spec()
        };
        assert!(matches!(ExternalCodec::new(lossy), Err(Error::MalformedTemplate(_))));
        let mut reg = CodecRegistry::with_builtins();
        reg.register_external(gzip_spec()).unwrap();
        assert!(matches!(reg.register_external(gzip_spec()), Err(Error::DuplicateCodec(_))));
    }

    #[test]
    fn external_gzip_round_trip() {
        let f = synth::tactile_frame(30, 20, 2).with_mapping(synth::default_force_mapping());
        let c = ExternalCodec::new(gzip_spec()).unwrap();
        let bytes = c.encode(&f, LOSSLESS).unwrap();
        assert_eq!(c.decode(&bytes, &(&f).into()).unwrap(), f);
    }

    #[test]
    fn external_failure_is_reported() {
        let spec = CodecSpec {
            encode_cmd: Some("false {in} {out}".into()),
            ..gzip_spec()
        };
        let c = ExternalCodec::new(spec).unwrap();
        let f = synth::tactile_frame(8, 8, 2);
        assert!(matches!(c.encode(&f, LOSSLESS), Err(Error::ExternalCommandFailure(_))));
    }

    #[test]
    fn spec_parses_from_toml() {
        let s: CodecSpec = toml::from_str(
            r#"
            id = "cat"
            kind = "external_lossless"
            encode_cmd = "cat {in} > {out}"
            decode_cmd = "cat {in} > {out}"
            "#,
        )
        .unwrap();
        s.validate().unwrap();
    }
}
