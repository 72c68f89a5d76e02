//! Counted QPSK bit error ratio in white Gaussian noise against the
//! closed form.
use coofdm::metrics::{awgn_qpsk, q_from_ber};

fn main() -> coofdm::Result<()> {
    for (i, snr_db) in [2.0, 4.0, 6.0, 8.0, 10.0].into_iter().enumerate() {
        let p = awgn_qpsk(snr_db, 1_000_000, i as u64 + 1)?;
        println!(
            "SNR {snr_db:4.1} dB  BER {:.4e}  theory {:.4e}  ({:+.2} sigma)  Q {:.2} dB",
            p.ber,
            p.theory,
            (p.ber - p.theory) / p.sigma(),
            q_from_ber(p.ber).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
