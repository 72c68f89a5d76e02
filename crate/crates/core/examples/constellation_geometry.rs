//! Minimum distance of the linear polarization code at unit mean power as a
//! function of the amplitude ratio, and the label table at ratio 1/2.
use coofdm::coding::{lpc_alphabet, LPC_RATIO};

fn main() -> coofdm::Result<()> {
    for ratio in [0.25, 1.0 / 3.0, 0.4, 0.5, 0.6, 2.0 / 3.0, 0.75] {
        let d = lpc_alphabet(ratio)?.normalized().min_distance();
        println!("ratio {ratio:.3}  min distance {d:.4}");
    }
    let path = std::env::temp_dir().join("lpc_alphabet.csv");
    lpc_alphabet(LPC_RATIO)?.write_table(&path)?;
    println!("alphabet table written to {}", path.display());
    Ok(())
}
