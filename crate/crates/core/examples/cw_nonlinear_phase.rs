//! A continuous wave in lossless, dispersionless fiber picks up the Manakov
//! phase (8/9) gamma P L on both polarizations.
use coofdm::channel::{propagate_span, FiberParams, StepControl, MANAKOV_FACTOR};
use coofdm::signal::DualPolWaveform;
use coofdm::Complex64;

fn main() -> coofdm::Result<()> {
    let fiber = FiberParams {
        alpha: 0.0,
        beta2: 0.0,
        gamma: 1.3e-3,
        manakov_factor: MANAKOV_FACTOR,
        span_length: 80e3,
    };
    let p: f64 = 3e-3;
    let n = 16;
    let wave = DualPolWaveform::new(
        vec![Complex64::new((p / 2.0).sqrt(), 0.0); n],
        vec![Complex64::new((p / 2.0).sqrt(), 0.0); n],
        64e9,
    )?;
    let expected = MANAKOV_FACTOR * fiber.gamma * p * fiber.span_length;
    for max_step in [80e3, 10e3, 1e3] {
        let out = propagate_span(wave.clone(), &fiber, &StepControl { max_phase: 0.05, max_step })?;
        let phase = (out.x()[0] / wave.x()[0]).arg();
        println!("max step {max_step:>7} m  phase {phase:.9} rad  error {:.1e}", phase - expected);
    }
    Ok(())
}
