//! The link kernel eta over a grid of frequency offsets: real for an
//! anti-symmetric dispersion map, complex otherwise.
use coofdm::channel::LinkConfig;
use coofdm::oracle::{max_imag_ratio, write_eta_grid, LinkProfile};

fn main() -> coofdm::Result<()> {
    let dw = 2.0 * std::f64::consts::PI * 15.625e6;
    for pre_edc in [0.0, 0.25, 0.5] {
        let link = LinkConfig { pre_edc_fraction: pre_edc, ..LinkConfig::standard(35) };
        let profile = LinkProfile::from_link(&link, 1024)?;
        let path = std::env::temp_dir().join(format!("eta_pre{pre_edc:.2}.csv"));
        write_eta_grid(&path, &profile, dw, 32)?;
        println!(
            "pre-EDC {pre_edc:.2}: map anti-symmetry error {:.3}, max |Im eta|/|eta| {:.4}, grid in {}",
            profile.antisymmetry_error(),
            max_imag_ratio(&profile, dw, 32),
            path.display()
        );
    }
    Ok(())
}
