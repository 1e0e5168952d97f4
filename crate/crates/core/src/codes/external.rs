//! Adapter that prices samples with an external archiver run as a subprocess.
//!
//! The command template is run through `sh -c`. `{in}` and `{out}` are
//! replaced by quoted paths of per-invocation temp files. Without `{in}` the
//! input is piped to stdin; without `{out}` the compressed stream is read
//! from stdout. Examples: `gzip -9 -c {in} > {out}`, `xz -9e -c`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use super::{Code, CodeLength};
use crate::error::{Error, Result};
use crate::sample::{pack_bits, split_components, Sample, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Serialization {
    /// Bit-pack binary alphabets, raw bytes otherwise.
    Auto,
    /// One byte per symbol. Product-alphabet samples write their component
    /// symbols interleaved, one byte each.
    RawBytes,
    /// Eight binary symbols per byte, MSB first, zero-padded.
    BitPack,
}

#[derive(Debug, Clone)]
pub struct ExternalCompressor {
    template: String,
    serialization: Serialization,
    scratch_dir: Option<PathBuf>,
}

impl ExternalCompressor {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
            serialization: Serialization::Auto,
            scratch_dir: None,
        }
    }

    pub fn with_serialization(mut self, serialization: Serialization) -> Self {
        self.serialization = serialization;
        self
    }

    /// Directory for temp files; the system temp dir when unset.
    pub fn with_scratch_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.scratch_dir = Some(dir.into());
        self
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    fn serialize(&self, piece: &Sample) -> Result<Vec<u8>> {
        let size = piece.alphabet().size();
        let mode = match self.serialization {
            Serialization::Auto if size == 2 => Serialization::BitPack,
            Serialization::Auto => Serialization::RawBytes,
            other => other,
        };
        let symbols: &[Symbol] = piece.pieces().first().map(Vec::as_slice).unwrap_or(&[]);
        match mode {
            Serialization::BitPack => {
                if size != 2 {
                    return Err(Error::Usage(format!(
                        "bit-pack serialization needs a binary alphabet, got size {size}"
                    )));
                }
                Ok(pack_bits(symbols))
            }
            _ => {
                if let Some(product) = piece.product() {
                    if product.components().iter().any(|a| a.size() > 256) {
                        return Err(Error::Usage(
                            "raw-bytes serialization needs components of at most 256 symbols"
                                .into(),
                        ));
                    }
                    let columns = split_components(piece)?;
                    let columns: Vec<&[Symbol]> =
                        columns.iter().map(|c| c.pieces()[0].as_slice()).collect();
                    Ok((0..symbols.len())
                        .flat_map(|i| columns.iter().map(move |c| c[i] as u8))
                        .collect())
                } else if size > 256 {
                    Err(Error::Usage(format!(
                        "raw-bytes serialization needs at most 256 symbols, got {size}"
                    )))
                } else {
                    Ok(symbols.iter().map(|&s| s as u8).collect())
                }
            }
        }
    }

    /// Compresses one byte buffer and returns the compressed size in bytes.
    pub fn compressed_size(&self, input: &[u8]) -> Result<u64> {
        let scratch = match &self.scratch_dir {
            Some(dir) => tempfile::Builder::new().prefix("univtest").tempdir_in(dir),
            None => tempfile::Builder::new().prefix("univtest").tempdir(),
        }
        .map_err(|e| Error::io(self.scratch_dir.clone().unwrap_or_default(), e))?;
        let in_path = scratch.path().join("input.bin");
        let out_path = scratch.path().join("output.bin");

        let uses_in = self.template.contains("{in}");
        let uses_out = self.template.contains("{out}");
        if uses_in {
            std::fs::write(&in_path, input).map_err(|e| Error::io(&in_path, e))?;
        }
        let command = self
            .template
            .replace("{in}", &shell_quote(&in_path))
            .replace("{out}", &shell_quote(&out_path));

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .current_dir(scratch.path())
            .stdin(if uses_in { Stdio::null() } else { Stdio::piped() })
            .stdout(if uses_out { Stdio::null() } else { Stdio::piped() })
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| self.tool_error(format!("cannot spawn: {e}")))?;

        // Feed stdin from a separate thread so a full stdout pipe cannot deadlock us.
        let feeder = if uses_in {
            None
        } else {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            let data = input.to_vec();
            Some(std::thread::spawn(move || {
                let _ = stdin.write_all(&data);
            }))
        };
        let output = child
            .wait_with_output()
            .map_err(|e| self.tool_error(format!("cannot wait for process: {e}")))?;
        if let Some(handle) = feeder {
            let _ = handle.join();
        }
        if !output.status.success() {
            return Err(self.tool_error(format!(
                "{}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }

        let size = if uses_out {
            std::fs::metadata(&out_path)
                .map_err(|_| Error::Protocol(format!("`{}` produced no output file", self.template)))?
                .len()
        } else {
            output.stdout.len() as u64
        };
        if size == 0 {
            return Err(Error::Protocol(format!(
                "`{}` produced empty output",
                self.template
            )));
        }
        Ok(size)
    }

    fn tool_error(&self, message: String) -> Error {
        Error::ExternalTool {
            command: self.template.clone(),
            message,
        }
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

impl Code for ExternalCompressor {
    fn id(&self) -> String {
        format!("ext:{}", self.template)
    }

    /// Pieces are compressed one at a time and their lengths summed.
    fn code_length(&self, sample: &Sample) -> Result<CodeLength> {
        let mut bytes = 0u64;
        for piece in sample.split_pieces() {
            bytes += self.compressed_size(&self.serialize(&piece)?)?;
        }
        if sample.num_pieces() == 0 {
            bytes += self.compressed_size(&[])?;
        }
        Ok(CodeLength {
            bits: 8.0 * bytes as f64,
            source: self.id(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{Alphabet, ProductAlphabet};

    #[test]
    fn serializes_bits_msb_first() {
        let s = Sample::single(Alphabet::binary(), vec![1, 0, 1, 0, 0, 0, 0, 0, 1]).unwrap();
        let c = ExternalCompressor::new("cat");
        assert_eq!(c.serialize(&s).unwrap(), vec![0xA0, 0x80]);
    }

    #[test]
    fn serializes_product_interleaved() {
        let product = ProductAlphabet::from_sizes(&[3, 4]).unwrap();
        // (2,3) (0,1)
        let s = Sample::over_product(product, vec![vec![11, 1]]).unwrap();
        let c = ExternalCompressor::new("cat");
        assert_eq!(c.serialize(&s).unwrap(), vec![2, 3, 0, 1]);
    }

    #[test]
    fn cat_reports_input_size() {
        let s = Sample::single(Alphabet::bytes(), (0..100).collect()).unwrap();
        for template in ["cat", "cat {in}", "cat > {out}", "cp {in} {out}"] {
            let bits = ExternalCompressor::new(template).code_length(&s).unwrap().bits;
            assert_eq!(bits, 800.0, "{template}");
        }
    }

    #[test]
    fn failures_are_reported() {
        let s = Sample::single(Alphabet::bytes(), vec![1, 2, 3]).unwrap();
        let err = ExternalCompressor::new("echo oops >&2; exit 3")
            .code_length(&s)
            .unwrap_err();
        match err {
            Error::ExternalTool { message, .. } => assert!(message.contains("oops")),
            other => panic!("unexpected {other:?}"),
        }
        let err = ExternalCompressor::new("true").code_length(&s).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }
}
