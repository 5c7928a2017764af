//! Builds the reference network, prints its parameter table and round-trips
//! it through the model file format.

use idseg::nn::{decode_model, encode_model, summary_table, Model, ModelConfig};

fn main() -> anyhow::Result<()> {
    let model = Model::init(ModelConfig::reference(), 42)?;
    print!("{}", summary_table(&model)?);

    let bytes = encode_model(&model);
    let back = decode_model(&bytes)?;
    assert_eq!(back, model);
    println!("round trip of {} bytes is exact", bytes.len());

    let mut corrupt = bytes.clone();
    corrupt[bytes.len() / 2] ^= 0x10;
    println!("flipped bit: {}", decode_model(&corrupt).unwrap_err());
    Ok(())
}
