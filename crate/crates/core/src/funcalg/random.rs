use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GroupFunction, C64};
use crate::error::{usage, Result};
use crate::group::Group;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomMode {
    /// Entries uniform on [0, 1).
    NonNeg,
    /// Entries uniform on [-1, 1).
    Real,
    /// Real and imaginary parts independent and uniform on [-1, 1).
    Complex,
}

/// Random function supported in `B_radius`: each ball element is kept with
/// probability `density`, values drawn per `mode`. Never returns zero; if
/// every element is dropped, one ball element is kept.
pub fn random_function(group: &Group, radius: usize, mode: RandomMode, density: f64, seed: u64) -> Result<GroupFunction> {
    if !(density > 0.0 && density <= 1.0) {
        return usage(format!("density {density} outside (0, 1]"));
    }
    let ball = group.ball(radius)?;
    let mut rng = seed::rng(seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| match mode {
        RandomMode::NonNeg => C64::new(rng.gen::<f64>(), 0.0),
        RandomMode::Real => C64::new(rng.gen_range(-1.0..1.0), 0.0),
        RandomMode::Complex => C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    };
    let mut entries = Vec::new();
    for g in &ball {
        let keep = density >= 1.0 || rng.gen::<f64>() < density;
        let v = draw(&mut rng);
        if keep {
            entries.push((g.clone(), v));
        }
    }
    let mut f = GroupFunction::from_entries(group, entries)?;
    while f.is_zero() {
        let g = ball[rng.gen_range(0..ball.len())].clone();
        let mut v = draw(&mut rng);
        if mode == RandomMode::NonNeg {
            v.re += f64::MIN_POSITIVE.max(1e-3);
        }
        f = GroupFunction::from_entries(group, [(g, v)])?;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_in_ball() {
        let f2 = Group::parse("free:2").unwrap();
        let a = random_function(&f2, 2, RandomMode::Real, 0.5, 7).unwrap();
        let b = random_function(&f2, 2, RandomMode::Real, 0.5, 7).unwrap();
        assert_eq!(a.sub(&b).unwrap().l1(), 0.0);
        assert!(a.support_radius() <= 2);
        assert!(a.is_real());
        let n = random_function(&f2, 2, RandomMode::NonNeg, 0.01, 3).unwrap();
        assert!(!n.is_zero() && n.is_nonneg_real());
    }
}
