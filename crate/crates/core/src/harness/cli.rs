//! Command-line interface.
//!
//! Test subcommands exit with 0 when the null hypothesis is accepted, 1 when
//! it is rejected and 2 on any error.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::plan::SimulationPlan;
use super::report::{emit_report, OutputFormat, Report};
use super::simulate::run_simulation;
use crate::codes::{Code, CodeSpec, RCode};
use crate::entropy::empirical_entropy_bits;
use crate::error::{Error, Result};
use crate::hypothesis::{
    homogeneity_test, identity_test, independence_test, partition_test, serial_independence_test,
    BaseTest, Decision, KnownSource, PartitionSequence, Quantizer, RawSeries, TestReport,
};
use crate::sample::{count_contexts, parse_sample, write_sample, Alphabet, ProductAlphabet, Sample, SampleFormat};
use crate::sources::{
    extract_bytes, generate_lcg, generate_markov, generate_parity_markov, parse_markov_spec,
    ExtractMode, LcgSpec,
};

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

const AFTER_HELP: &str = "\
Codes (--code):
  laplace:M         Laplace predictor of Markov order M
  kt:M              Krichevsky-Trofimov predictor of order M
  r:N               mixture of KT predictors of orders 0..=N (default r:16)
  mix:A+B           mixture of codes, optionally weighted as 0.3*A+0.7*B
  mm:A+B            shortest weighted member of a family of codes
  ext:CMD           external compressor; {in} and {out} name temp files,
                    otherwise stdin/stdout are used (e.g. \"ext:gzip -9 -c\")

Sample formats (--format): raw-bytes (|A| = 256), bit-stream (|A| = 2, MSB
first), symbol-csv (integers separated by commas or newlines, blank line
between pieces). A path of `-` reads standard input.

Markov spec files (identity --source, gen markov) are `key = value` lines:
  alphabet = 2
  order = 1
  row.0 = 0.8, 0.2     # next-symbol distribution after context index 0
  row.1 = 0.5, 0.5
  initial = stationary # or uniform, or explicit probabilities
  seed = 42

Exit status: 0 accept, 1 reject, 2 error.";

#[derive(Debug, Parser)]
#[command(
    name = "univtest",
    version,
    about = "Hypothesis tests for time series based on universal codes",
    after_help = AFTER_HELP
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Significance level.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub alpha: f64,

    /// Markov order m of the null hypothesis.
    #[arg(short = 'm', long = "order", global = true, default_value_t = 0)]
    pub order: usize,

    /// Code used to price samples; `codes` accepts it several times.
    #[arg(long, global = true)]
    pub code: Vec<CodeSpec>,

    /// Sample format of input files (and of `gen` output).
    #[arg(long, global = true)]
    pub format: Option<SampleFormat>,

    /// Alphabet size; defaults to 256 for raw bytes and 2 otherwise.
    #[arg(long, global = true)]
    pub alphabet: Option<usize>,

    /// Seed for generators and simulations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Print JSON.
    #[arg(long, global = true, conflicts_with = "table")]
    pub json: bool,

    /// Print an aligned text table.
    #[arg(long, global = true)]
    pub table: bool,

    /// Directory for external-compressor temp files.
    #[arg(long, global = true)]
    pub scratch: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether a sample follows a fully known source.
    Identity {
        /// Null is the uniform i.i.d. source (the default).
        #[arg(long, conflicts_with = "source")]
        uniform: bool,
        /// Null is the chain described in this spec file.
        #[arg(long)]
        source: Option<PathBuf>,
        /// Sample file; `-` or nothing reads standard input.
        #[arg(default_value = "-")]
        input: PathBuf,
    },
    /// Test whether a sample comes from a Markov source of order at most m.
    Serial {
        #[arg(default_value = "-")]
        input: PathBuf,
    },
    /// Test independence of component series given as separate files of equal length.
    Indep {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
    },
    /// Test whether two or more samples come from the same source.
    Homog {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
    },
    /// Run a test on real-valued data through dyadic partitions of [lo, hi].
    Partition {
        #[arg(long, value_enum, default_value_t = PartitionBase::Serial)]
        base: PartitionBase,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        /// Partitions into 2, 4, ..., 2^depth cells per coordinate.
        #[arg(long, default_value_t = 3)]
        depth: u32,
        /// Values per observation (independence uses one coordinate per component).
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Generate samples.
    Gen {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Run a simulation plan file.
    Simulate { plan: PathBuf },
    /// Report the code length of a sample under each --code.
    Codes {
        #[arg(default_value = "-")]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionBase {
    /// Identity to the uniform distribution on [lo, hi].
    Identity,
    Serial,
    Independence,
    Homogeneity,
}

#[derive(Debug, Subcommand)]
pub enum Generator {
    /// Markov chain from a spec file.
    Markov {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short = 'n')]
        length: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Binary chain whose next symbol depends on the parity of the last seven.
    Parity {
        #[arg(long)]
        p0: f64,
        #[arg(short = 'n')]
        length: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Linear congruential generator with 8-bit extraction.
    Lcg {
        #[arg(long = "M")]
        modulus: u64,
        #[arg(long = "A")]
        multiplier: u64,
        #[arg(long = "C", default_value_t = 0)]
        increment: u64,
        #[arg(long = "X0")]
        seed: u64,
        /// Number of generator outputs; out-of-range values are dropped.
        #[arg(short = 'n')]
        count: usize,
        #[arg(long, default_value_t = ExtractMode::Scaled)]
        extract: ExtractMode,
        /// Print the raw values X_1..X_n, one per line, instead of bytes.
        #[arg(long)]
        values: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Error::io(path, e))?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| Error::io(path, e))
    }
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_input(path)?)
        .map_err(|_| Error::Input(format!("{} is not UTF-8 text", path.display())))
}

impl GlobalArgs {
    fn sample_format(&self) -> SampleFormat {
        self.format.unwrap_or(SampleFormat::RawBytes)
    }

    fn alphabet_for(&self, format: SampleFormat) -> Result<Alphabet> {
        let size = self.alphabet.unwrap_or(match format {
            SampleFormat::RawBytes => 256,
            _ => 2,
        });
        Alphabet::new(size)
    }

    fn read_sample(&self, path: &Path) -> Result<Sample> {
        let format = self.sample_format();
        parse_sample(&read_input(path)?, format, self.alphabet_for(format)?)
    }

    fn single_code(&self) -> Result<Box<dyn Code>> {
        match self.code.as_slice() {
            [] => Ok(Box::new(RCode::default())),
            [spec] => spec.build(self.scratch.as_deref()),
            _ => Err(Error::Usage("this subcommand takes a single --code".into())),
        }
    }

    fn output_format(&self, default: OutputFormat) -> OutputFormat {
        if self.table {
            OutputFormat::Table
        } else if self.json {
            OutputFormat::Json
        } else {
            default
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        _ => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn finish_test(report: &TestReport, global: &GlobalArgs, out: &mut dyn Write) -> Result<i32> {
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }
    print(out, &emit_report(report, global.output_format(OutputFormat::Json)))?;
    Ok(exit_code(report.decision))
}

fn exit_code(decision: Decision) -> i32 {
    match decision {
        Decision::Accept => EXIT_ACCEPT,
        Decision::Reject => EXIT_REJECT,
    }
}

fn print(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Runs a parsed command line, writing reports to `out`, and returns the
/// process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Identity {
            source, input, ..
        } => {
            let sample = g.read_sample(input)?;
            let null = match source {
                Some(path) => {
                    let spec = parse_markov_spec(&read_text(path)?)?;
                    KnownSource::markov(&spec)?
                }
                None => KnownSource::uniform(sample.alphabet().size())?,
            };
            let code = g.single_code()?;
            finish_test(&identity_test(&sample, &null, code.as_ref(), g.alpha)?, g, out)
        }
        Command::Serial { input } => {
            let sample = g.read_sample(input)?;
            let code = g.single_code()?;
            let report = serial_independence_test(&sample, g.order, code.as_ref(), g.alpha)?;
            finish_test(&report, g, out)
        }
        Command::Indep { inputs } => {
            let components = inputs
                .iter()
                .map(|p| g.read_sample(p))
                .collect::<Result<Vec<_>>>()?;
            let product = ProductAlphabet::new(
                components.iter().map(|c| c.alphabet().clone()).collect(),
            )?;
            let joint = Sample::from_components(product, &components)
                .map_err(|e| Error::Usage(format!("component files do not line up: {e}")))?;
            let code = g.single_code()?;
            finish_test(&independence_test(&joint, g.order, code.as_ref(), g.alpha)?, g, out)
        }
        Command::Homog { inputs } => {
            let samples = inputs
                .iter()
                .map(|p| g.read_sample(p))
                .collect::<Result<Vec<_>>>()?;
            let code = g.single_code()?;
            finish_test(&homogeneity_test(&samples, g.order, code.as_ref(), g.alpha)?, g, out)
        }
        Command::Partition {
            base,
            lo,
            hi,
            depth,
            dim,
            inputs,
        } => {
            let data = inputs
                .iter()
                .map(|p| RawSeries::parse(&read_text(p)?, *dim))
                .collect::<Result<Vec<_>>>()?;
            let partitions = (1..=*depth)
                .map(|k| {
                    let axis = || Quantizer::uniform(*lo, *hi, 1 << k);
                    if *base == PartitionBase::Independence {
                        Quantizer::product((0..*dim).map(|_| axis()).collect::<Result<_>>()?)
                    } else {
                        axis()
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let (lo, hi) = (*lo, *hi);
            let base = match base {
                PartitionBase::Identity => BaseTest::Identity {
                    null_cdf: std::sync::Arc::new(move |x: f64| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)),
                },
                PartitionBase::Serial => BaseTest::Serial,
                PartitionBase::Independence => BaseTest::Independence,
                PartitionBase::Homogeneity => BaseTest::Homogeneity,
            };
            let code = g.single_code()?;
            let outcome = partition_test(
                &data,
                &PartitionSequence::new(partitions)?,
                &base,
                code.as_ref(),
                g.alpha,
            )?;
            for r in &outcome.per_partition {
                for w in r.warnings() {
                    eprintln!("warning: {w}");
                }
            }
            print(out, &emit_report(&outcome, g.output_format(OutputFormat::Json)))?;
            Ok(exit_code(outcome.aggregate.decision))
        }
        Command::Gen { generator } => {
            run_generator(generator, g)?;
            Ok(EXIT_ACCEPT)
        }
        Command::Simulate { plan } => {
            let mut plan = SimulationPlan::parse(&read_text(plan)?)?;
            if let Some(seed) = g.seed {
                plan.seed = seed;
            }
            let grid = run_simulation(&plan)?;
            print(out, &emit_report(&grid, g.output_format(OutputFormat::Table)))?;
            Ok(EXIT_ACCEPT)
        }
        Command::Codes { input } => {
            let sample = g.read_sample(input)?;
            let specs = if g.code.is_empty() {
                vec![
                    CodeSpec::Laplace(g.order),
                    CodeSpec::Krichevsky(g.order),
                    CodeSpec::R(RCode::DEFAULT_MAX_ORDER),
                ]
            } else {
                g.code.clone()
            };
            let summary = CodeSummary::compute(&sample, g.order, &specs, g.scratch.as_deref())?;
            print(out, &emit_report(&summary, g.output_format(OutputFormat::Table)))?;
            Ok(EXIT_ACCEPT)
        }
    }
}

fn run_generator(generator: &Generator, g: &GlobalArgs) -> Result<()> {
    match generator {
        Generator::Markov {
            spec,
            length,
            output,
        } => {
            let mut spec = parse_markov_spec(&read_text(spec)?)?;
            if let Some(seed) = g.seed {
                spec.seed = seed;
            }
            let sample = generate_markov(&spec, *length)?;
            let format = g.format.unwrap_or(SampleFormat::SymbolCsv);
            write_output(output.as_deref(), &write_sample(&sample, format)?)
        }
        Generator::Parity { p0, length, output } => {
            let sample = generate_parity_markov(*p0, *length, g.seed.unwrap_or(0))?;
            let format = g.format.unwrap_or(SampleFormat::SymbolCsv);
            write_output(output.as_deref(), &write_sample(&sample, format)?)
        }
        Generator::Lcg {
            modulus,
            multiplier,
            increment,
            seed,
            count,
            extract,
            values,
            output,
        } => {
            let spec = LcgSpec::new(*modulus, *multiplier, *increment, *seed);
            let raw = generate_lcg(spec, *count)?;
            if *values {
                let text: String = raw.iter().map(|x| format!("{x}\n")).collect();
                return write_output(output.as_deref(), text.as_bytes());
            }
            let sample = extract_bytes(&raw, *modulus, *extract)?;
            let format = g.format.unwrap_or(SampleFormat::RawBytes);
            write_output(output.as_deref(), &write_sample(&sample, format)?)
        }
    }
}

/// Code lengths of one sample under several codes, next to its empirical
/// entropy.
#[derive(Debug, Clone)]
pub struct CodeSummary {
    pub length: usize,
    pub alphabet_size: usize,
    pub m: usize,
    pub entropy_bits: f64,
    pub codes: Vec<(String, f64)>,
}

impl CodeSummary {
    pub fn compute(
        sample: &Sample,
        order: usize,
        specs: &[CodeSpec],
        scratch: Option<&Path>,
    ) -> Result<Self> {
        let codes = specs
            .iter()
            .map(|spec| {
                let code = spec.build(scratch)?;
                Ok((code.id(), code.code_length(sample)?.bits))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            length: sample.total_length(),
            alphabet_size: sample.alphabet().size(),
            m: order,
            entropy_bits: empirical_entropy_bits(&count_contexts(sample, order)),
            codes,
        })
    }
}

impl Report for CodeSummary {
    fn to_json(&self) -> serde_json::Value {
        json!({
            "length": self.length,
            "alphabet_size": self.alphabet_size,
            "m": self.m,
            "entropy_bits": self.entropy_bits,
            "codes": self.codes.iter().map(|(id, bits)| json!({
                "code": id,
                "bits": bits,
                "bits_per_symbol": bits / self.length.max(1) as f64,
            })).collect::<Vec<_>>(),
        })
    }

    fn to_table(&self) -> String {
        let per = |bits: f64| bits / self.length.max(1) as f64;
        let width = self
            .codes
            .iter()
            .map(|(id, _)| id.len())
            .max()
            .unwrap_or(0)
            .max(10);
        let mut out = format!(
            "{:<width$}  {:>14}  {:>10}\n",
            "code", "bits", "bits/sym"
        );
        let entropy_label = format!("h*_{}", self.m);
        out.push_str(&format!(
            "{:<width$}  {:>14.3}  {:>10.5}\n",
            entropy_label,
            self.entropy_bits,
            per(self.entropy_bits)
        ));
        for (id, bits) in &self.codes {
            out.push_str(&format!("{id:<width$}  {bits:>14.3}  {:>10.5}\n", per(*bits)));
        }
        out
    }
}

/// Parses `argv`, runs it and maps errors to exit code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_ACCEPT };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "univtest", "serial", "-m", "2", "--code", "kt:1", "--alpha", "0.05", "x.bin",
        ])
        .unwrap();
        assert_eq!(cli.global.order, 2);
        assert_eq!(cli.global.code, vec![CodeSpec::Krichevsky(1)]);
        assert_eq!(cli.global.alpha, 0.05);
    }

    #[test]
    fn lcg_flags_parse() {
        let cli = Cli::try_parse_from([
            "univtest", "gen", "lcg", "--M", "2147483648", "--A", "65539", "--C", "0", "--X0", "1",
            "-n", "10",
        ])
        .unwrap();
        match cli.command {
            Command::Gen {
                generator: Generator::Lcg { modulus, count, .. },
            } => {
                assert_eq!(modulus, 1 << 31);
                assert_eq!(count, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
