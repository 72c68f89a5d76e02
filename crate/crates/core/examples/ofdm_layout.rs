//! Subcarrier roles of the full-system frame and its rate budget.
use coofdm::ofdm::OfdmParams;

fn main() -> coofdm::Result<()> {
    let p = OfdmParams::default();
    println!("pilot columns {:?}", p.pilot_columns());
    println!(
        "{} data subcarriers at {:.4} MHz spacing, occupied {:.2} GHz, training efficiency {:.4}",
        p.n_data,
        p.subcarrier_spacing() / 1e6,
        p.occupied_bandwidth() / 1e9,
        p.training_efficiency()
    );
    println!("net rate {:.2} Gb/s at 4 bits per subcarrier", p.net_bit_rate(4.0) / 1e9);
    let path = std::env::temp_dir().join("ofdm_layout.csv");
    p.write_layout(&path)?;
    println!("layout written to {}", path.display());
    Ok(())
}
