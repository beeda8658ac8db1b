//! Exact probability of a winning run in independent Bernoulli trials.

use crate::error::{Error, Result};

/// Probability that `n` i.i.d. Bernoulli(`p_win`) trials contain a run of at
/// least `k` consecutive successes.
///
/// Dynamic program over the current run length 0..k-1; mass that reaches a
/// run of `k` is absorbed. O(n·k) time, O(k) space.
pub fn streak_probability_oracle(p_win: f64, n: usize, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_win) {
        return Err(Error::invalid(format!(
            "win probability must lie in [0, 1], got {p_win}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "run length must satisfy 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let q = 1.0 - p_win;
    let mut run = vec![0.0f64; k];
    run[0] = 1.0;
    let mut absorbed = 0.0;
    let mut next = vec![0.0f64; k];
    for _ in 0..n {
        let alive: f64 = run.iter().sum();
        next[0] = q * alive;
        next[1..].copy_from_slice(&run[..k - 1]);
        for v in &mut next[1..] {
            *v *= p_win;
        }
        absorbed += p_win * run[k - 1];
        std::mem::swap(&mut run, &mut next);
    }
    Ok(absorbed.clamp(0.0, 1.0))
}

/// Longest run of `true` in a sequence.
pub fn longest_run(outcomes: impl IntoIterator<Item = bool>) -> usize {
    let (mut best, mut cur) = (0, 0);
    for w in outcomes {
        if w {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}
