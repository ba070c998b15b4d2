//! JSON model files.
//!
//! Values are written in shortest round-trip decimal form and parsed with
//! correct rounding, so every `f64` survives a save/load cycle bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::ModelSpec;
use crate::error::Result;

pub fn write_model<W: Write>(spec: &ModelSpec, writer: W) -> Result<()> {
    serde_json::to_writer(writer, spec)?;
    Ok(())
}

pub fn read_model<R: Read>(reader: R) -> Result<ModelSpec> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn save_model(spec: &ModelSpec, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(spec, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    read_model(BufReader::new(File::open(path)?))
}
