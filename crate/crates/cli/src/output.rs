use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde::Serialize;
use spt_core::Error;

use crate::{Format, OutputArgs};

pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_SCENARIO: u8 = 65;
pub const EXIT_NO_INPUT: u8 = 66;
pub const EXIT_IO: u8 = 74;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Input(String),
    Output(io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Scenario { .. }) => EXIT_SCENARIO,
            Failure::Core(Error::NoConvergence { .. }) => EXIT_NO_CONVERGENCE,
            Failure::Core(_) => EXIT_DOMAIN,
            Failure::Input(_) => EXIT_NO_INPUT,
            Failure::Output(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Input(m) => write!(f, "cannot read input: {m}"),
            Failure::Output(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Output(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Output(e.into())
    }
}

/// Writes pretty JSON or CSV to the requested sink.
pub fn emit<T, F>(out: &OutputArgs, value: &T, write_csv: F) -> Result<(), Failure>
where
    T: Serialize,
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let mut sink: Box<dyn Write> = match &out.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match out.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, value).map_err(io::Error::from)?;
            sink.write_all(b"\n")?;
        }
        Format::Csv => write_csv(&mut sink)?,
    }
    sink.flush()?;
    Ok(())
}

pub fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}
