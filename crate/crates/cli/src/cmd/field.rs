//! `placenav field` — export the per-cell instruction log-likelihood.

use std::path::PathBuf;

use clap::Args;

use placenav_core::concept::emission_log_field;
use placenav_core::export::{field_to_csv, field_to_pgm};

use super::{flip_rows, load_model_file, write_file, MapArgs, SayArgs};
use crate::errors::CliError;

#[derive(Args, Debug)]
pub struct FieldArgs {
    /// Fitted model file.
    #[arg(long)]
    pub model: PathBuf,

    #[command(flatten)]
    pub map: MapArgs,

    #[command(flatten)]
    pub say: SayArgs,

    /// Output directory for field.csv and field.pgm.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: FieldArgs) -> Result<(), CliError> {
    let model = load_model_file(&args.model)?;
    let (_, costmap) = args.map.load()?;
    let instruction = args.say.instruction(&model.vocabulary)?;

    let field = emission_log_field(&model, &costmap, &instruction);
    let north_up = flip_rows(&field.values, field.width, field.height);
    write_file(
        &args.out,
        "field.csv",
        &field_to_csv(&north_up, field.width, field.height)?,
    )?;
    write_file(
        &args.out,
        "field.pgm",
        &field_to_pgm(&north_up, field.width, field.height)?,
    )?;

    match field.argmax() {
        Some(cell) => {
            let p = costmap.geometry.cell_center(cell);
            println!("argmax_col={}", cell.col);
            println!("argmax_row={}", cell.row);
            println!("argmax_x={}", p.x);
            println!("argmax_y={}", p.y);
            println!("argmax_value={}", field.value(cell));
        }
        None => println!("argmax=none"),
    }
    println!("width={}", field.width);
    println!("height={}", field.height);
    Ok(())
}
