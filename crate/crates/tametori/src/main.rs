use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tametori::cli::{self, Format};

#[derive(Parser)]
#[command(
    name = "tametori",
    about = "Classify tame totally ramified maximal tori: twisted classes, alcove points, rational forms"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the twisted conjugacy classes with tameness, ellipticity, and
    /// Frobenius stability flags
    Classes {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Alcove points and normalized Kac coordinates of the elliptic classes
    Kac {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Full classification: stable classes, embeddings, rational classes
    Classify {
        #[arg(long)]
        spec: PathBuf,
        /// comma separated residue field sizes, overriding the spec file
        #[arg(long, value_delimiter = ',')]
        q: Vec<u64>,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Draw the fundamental alcove with the elliptic points marked
    AlcoveSvg {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in verification suites
    Selftest {
        /// skip types with Weyl groups above this order
        #[arg(long, default_value_t = 1152)]
        max_weyl_order: u64,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "text" => Ok(Format::Text),
        "machine" => Ok(Format::Machine),
        other => Err(format!("unknown format '{other}', expected text or machine")),
    }
}

fn run() -> Result<ExitCode, (i32, String)> {
    let args = Args::parse();
    let fail = |e: tametori::Error| (e.exit_code(), e.to_string());
    match args.command {
        Command::Classes { spec, format } => {
            let format = parse_format(&format).map_err(|m| (2, m))?;
            let text = std::fs::read_to_string(&spec).map_err(|e| (2, e.to_string()))?;
            let file = cli::parse_spec(&text).map_err(fail)?;
            print!("{}", cli::cmd_classes(&file, format).map_err(fail)?);
        }
        Command::Kac { spec, format } => {
            let format = parse_format(&format).map_err(|m| (2, m))?;
            let text = std::fs::read_to_string(&spec).map_err(|e| (2, e.to_string()))?;
            let file = cli::parse_spec(&text).map_err(fail)?;
            print!("{}", cli::cmd_kac(&file, format).map_err(fail)?);
        }
        Command::Classify { spec, q, format } => {
            let format = parse_format(&format).map_err(|m| (2, m))?;
            let text = std::fs::read_to_string(&spec).map_err(|e| (2, e.to_string()))?;
            let file = cli::parse_spec(&text).map_err(fail)?;
            print!("{}", cli::cmd_classify(&file, &q, format).map_err(fail)?);
        }
        Command::AlcoveSvg { spec, out } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| (2, e.to_string()))?;
            let file = cli::parse_spec(&text).map_err(fail)?;
            let svg = cli::cmd_alcove_svg(&file).map_err(fail)?;
            std::fs::write(&out, svg).map_err(|e| (2, e.to_string()))?;
        }
        Command::Selftest { max_weyl_order } => {
            let (report, ok) = cli::cmd_selftest(max_weyl_order);
            print!("{report}");
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
