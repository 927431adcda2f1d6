use crate::error::{Error, Result};

use super::TrainerSpec;

/// Number of warm-up updates: `ceil(warmup_fraction * total_steps)`, capped
/// at `total_steps - 1` so the decay phase always reaches zero at the end.
pub fn warmup_steps(total_steps: usize, warmup_fraction: f64) -> usize {
    let raw = warmup_fraction * total_steps as f64;
    // 0.1 * 30 is 3.0000000000000004 in binary; treat near-integers as exact.
    let w = if (raw - raw.round()).abs() < 1e-9 {
        raw.round()
    } else {
        raw.ceil()
    };
    (w as usize).min(total_steps.saturating_sub(1))
}

/// Learning rate at `step` of `total_steps`: a linear ramp from 0 to
/// `peak_lr` over the warm-up updates, then a linear decay to 0 at
/// `step == total_steps`.
pub fn lr_at(step: usize, total_steps: usize, spec: &TrainerSpec) -> Result<f64> {
    if total_steps == 0 || step > total_steps {
        return Err(Error::InvalidArgument(format!(
            "step {step} outside 0..={total_steps}"
        )));
    }
    let warmup = warmup_steps(total_steps, spec.warmup_fraction);
    let peak = spec.peak_lr;
    let lr = if step < warmup {
        peak * step as f64 / warmup as f64
    } else {
        peak * (total_steps - step) as f64 / (total_steps - warmup) as f64
    };
    Ok(lr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(warmup_fraction: f64) -> TrainerSpec {
        TrainerSpec {
            warmup_fraction,
            peak_lr: 1.0,
            ..TrainerSpec::default()
        }
    }

    #[test]
    fn ten_percent_of_one_hundred() {
        let s = spec(0.10);
        assert_eq!(lr_at(0, 100, &s).unwrap(), 0.0);
        assert_eq!(lr_at(10, 100, &s).unwrap(), 1.0);
        assert_eq!(lr_at(100, 100, &s).unwrap(), 0.0);
        assert_eq!(lr_at(5, 100, &s).unwrap(), 0.5);
        assert_eq!(lr_at(55, 100, &s).unwrap(), 0.5);
        assert!(lr_at(101, 100, &s).is_err());
        assert!(lr_at(0, 0, &s).is_err());
    }

    #[test]
    fn warmup_rounding() {
        assert_eq!(warmup_steps(30, 0.1), 3);
        assert_eq!(warmup_steps(100, 0.1), 10);
        assert_eq!(warmup_steps(95, 0.1), 10);
        assert_eq!(warmup_steps(1, 0.1), 0);
        assert_eq!(warmup_steps(100, 0.0), 0);
    }

    #[test]
    fn no_warmup_decays_from_peak() {
        let s = spec(0.0);
        assert_eq!(lr_at(0, 4, &s).unwrap(), 1.0);
        assert_eq!(lr_at(2, 4, &s).unwrap(), 0.5);
        assert_eq!(lr_at(4, 4, &s).unwrap(), 0.0);
    }
}
