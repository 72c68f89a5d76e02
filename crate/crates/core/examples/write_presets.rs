//! Write the full-system and scaled presets as TOML.
use coofdm::harness::ExperimentConfig;

fn main() -> coofdm::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "configs".into());
    std::fs::create_dir_all(&dir)?;
    ExperimentConfig::default().save(format!("{dir}/full.toml"))?;
    ExperimentConfig::scaled().save(format!("{dir}/scaled.toml"))?;
    println!("wrote {dir}/full.toml and {dir}/scaled.toml");
    Ok(())
}
