//! The `bdc` command line.
//!
//! Machine output goes to `out`, diagnostics to `err`. Exit status is 0 on
//! success, 1 on a domain failure and 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bdc_core::etl::{IngestStatus, PrivacySettings, SourceSpec};
use bdc_core::privacy::Decision;
use bdc_core::Commons;
use bdc_mixer::views::{self, parse_id, parse_ids, DownloadRequest, Params};
use bdc_mixer::{ApiConfig, ApiError};
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "bdc", version, about = "Operate a self-hosted data commons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch, check and load one source into a store.
    Ingest {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "store")]
        store: PathBuf,
    },
    /// Assess a microdata CSV against the publication gate.
    PrivacyCheck {
        #[arg(long)]
        input: PathBuf,
        /// Roles, lexicon and thresholds.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the REST API until interrupted.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write observations as CSV.
    Export {
        #[arg(long, default_value = "store")]
        store: PathBuf,
        /// Comma-separated entity ids.
        #[arg(long)]
        entities: String,
        /// Comma-separated variable ids.
        #[arg(long)]
        variables: String,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        /// Destination file, `-` for standard output.
        #[arg(long)]
        out: PathBuf,
    },
    /// Knowledge graph reads and registry import.
    Kg {
        #[command(subcommand)]
        command: KgCommand,
    },
}

#[derive(Debug, Args)]
struct StoreArg {
    #[arg(long, default_value = "store")]
    store: PathBuf,
}

#[derive(Debug, Subcommand)]
enum KgCommand {
    /// Find a place by name, level, ancestor or code.
    Resolve {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        ancestor: Option<String>,
        #[arg(long)]
        code: Option<String>,
    },
    /// List triples touching a node.
    Triples {
        #[command(flatten)]
        store: StoreArg,
        id: String,
        #[arg(long)]
        direction: Option<String>,
        #[arg(long)]
        predicate: Option<String>,
    },
    /// List places under a place at a level.
    Children {
        #[command(flatten)]
        store: StoreArg,
        id: String,
        #[arg(long)]
        level: String,
    },
    /// Load a place registry CSV.
    ImportRegistry {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        input: PathBuf,
    },
}

/// A failure with a one-line reason and its exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message: message.to_string(),
        }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure::domain(format!("{}: {}", e.code, e.message))
    }
}

type Outcome = Result<u8, Failure>;

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Ingest { spec, store } => ingest(&spec, &store, out, err),
        Command::PrivacyCheck { input, config } => privacy_check(&input, &config, out),
        Command::Serve { config } => serve(&config, err),
        Command::Export {
            store,
            entities,
            variables,
            from,
            to,
            out: dest,
        } => {
            let c = open(&store)?;
            let req = DownloadRequest::new(
                parse_ids("entities", &entities)?,
                parse_ids("variables", &variables)?,
                from.as_deref(),
                to.as_deref(),
            )?;
            let bytes = req.render(&c)?;
            if dest == Path::new("-") {
                emit(out, &bytes)?;
            } else {
                fs::write(&dest, &bytes).map_err(|e| Failure::domain(format!("{}: {e}", dest.display())))?;
            }
            Ok(EXIT_OK)
        }
        Command::Kg { command } => kg(command, out),
    }
}

fn open(store: &Path) -> Result<Commons, Failure> {
    Commons::open(store).map_err(Failure::domain)
}

fn emit(out: &mut dyn Write, bytes: &[u8]) -> Result<(), Failure> {
    out.write_all(bytes).and_then(|_| out.flush()).map_err(Failure::domain)
}

/// Writes the same JSON body the API would send, plus a newline.
fn emit_json<T: serde::Serialize>(out: &mut dyn Write, body: &T) -> Outcome {
    let mut bytes = serde_json::to_vec(body).map_err(Failure::domain)?;
    bytes.push(b'\n');
    emit(out, &bytes)?;
    Ok(EXIT_OK)
}

fn ingest(spec: &Path, store: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let spec = SourceSpec::load(spec).map_err(Failure::domain)?;
    let mut commons = open(store)?;
    let entry = commons.ingest(&spec).map_err(Failure::domain)?;
    emit(out, format!("{}\n", entry.to_json_line()).as_bytes())?;
    Ok(match entry.status {
        IngestStatus::Ingested | IngestStatus::SkippedUnchanged => EXIT_OK,
        IngestStatus::Failed | IngestStatus::RejectedPrivacy => {
            let cause = entry.cause.as_deref().unwrap_or("see ledger entry");
            let _ = writeln!(err, "error: {}: {cause}", spec.source_name);
            EXIT_DOMAIN
        }
    })
}

fn privacy_check(input: &Path, config: &Path, out: &mut dyn Write) -> Outcome {
    let text = fs::read_to_string(config).map_err(|e| Failure::domain(format!("{}: {e}", config.display())))?;
    let settings = PrivacySettings::from_toml(&text).map_err(Failure::domain)?;
    let mut reader = csv::Reader::from_path(input).map_err(|e| Failure::domain(format!("{}: {e}", input.display())))?;
    let columns: Vec<String> = reader.headers().map_err(Failure::domain)?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(|e| Failure::domain(format!("{}: {e}", input.display())))?;
    let report = settings.assess(&columns, rows, config.parent()).map_err(Failure::domain)?;
    emit(out, report.to_text().as_bytes())?;
    Ok(match report.decision {
        Decision::Publish => EXIT_OK,
        Decision::Reject => EXIT_DOMAIN,
    })
}

fn serve(config: &Path, err: &mut dyn Write) -> Outcome {
    let config = ApiConfig::load(config).map_err(Failure::domain)?;
    let _ = writeln!(err, "serving {} on {}", config.store.display(), config.bind_address);
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::domain)?;
    runtime.block_on(bdc_mixer::serve(config)).map_err(Failure::domain)?;
    Ok(EXIT_OK)
}

fn params(pairs: &[(&str, &Option<String>)]) -> Params {
    Params::new(pairs.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))))
}

fn kg(command: KgCommand, out: &mut dyn Write) -> Outcome {
    match command {
        KgCommand::Resolve {
            store,
            name,
            level,
            ancestor,
            code,
        } => {
            let c = open(&store.store)?;
            let p = params(&[("name", &name), ("level", &level), ("ancestor", &ancestor), ("code", &code)]);
            emit_json(out, &views::resolve(&c, &p)?)
        }
        KgCommand::Triples {
            store,
            id,
            direction,
            predicate,
        } => {
            let c = open(&store.store)?;
            let id = parse_id("id", &id)?;
            let p = params(&[("direction", &direction), ("predicate", &predicate)]);
            emit_json(out, &views::triples(&c, &id, &p)?)
        }
        KgCommand::Children { store, id, level } => {
            let c = open(&store.store)?;
            let id = parse_id("id", &id)?;
            emit_json(out, &views::children(&c, &id, &params(&[("level", &Some(level))]))?)
        }
        KgCommand::ImportRegistry { store, input } => {
            let file = fs::File::open(&input).map_err(|e| Failure::domain(format!("{}: {e}", input.display())))?;
            let mut c = open(&store.store)?;
            let n = c.import_registry(file).map_err(Failure::domain)?;
            emit(out, format!("{n}\n").as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}
