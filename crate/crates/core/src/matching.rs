//! Welfare-maximizing room assignment within one apartment.

use crate::error::{check_index, Result};
use crate::model::{Assignment, Instance};
use crate::money::Money;

/// Maximum total weight of a perfect matching in a square matrix, rows are
/// players and columns rooms. Returns the room of every player.
///
/// Hungarian algorithm with potentials on the negated weights.
fn hungarian(weights: &[Vec<Money>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays as in the classic formulation; index 0 is a sentinel.
    let cost = |i: usize, j: usize| -&weights[i - 1][j - 1];
    let mut u = vec![Money::zero(); n + 1];
    let mut v = vec![Money::zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv: Vec<Option<Money>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta: Option<Money> = None;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - &u[i0] - &v[j];
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().expect("set above");
                if delta.as_ref().is_none_or(|d| mj < d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += &delta;
                    v[j] -= &delta;
                } else if let Some(m) = minv[j].as_mut() {
                    *m -= &delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut room_of = vec![0; n];
    for j in 1..=n {
        room_of[owner[j] - 1] = j - 1;
    }
    room_of
}

fn total(weights: &[Vec<Money>], rooms: &[usize]) -> Money {
    rooms.iter().enumerate().map(|(i, &k)| &weights[i][k]).sum()
}

/// Maximum weight of a perfect matching.
pub fn max_weight(weights: &[Vec<Money>]) -> Money {
    total(weights, &hungarian(weights))
}

/// Lexicographically smallest room vector among all maximum-weight perfect
/// matchings of a square matrix.
pub fn lex_min_max_weight_matching(weights: &[Vec<Money>]) -> Vec<usize> {
    let n = weights.len();
    let best = max_weight(weights);
    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut fixed_sum = Money::zero();
    let mut taken = vec![false; n];
    for i in 0..n {
        let rest_players: Vec<usize> = (i + 1..n).collect();
        let mut chosen = None;
        for k in (0..n).filter(|&k| !taken[k]) {
            let rest_rooms: Vec<usize> = (0..n).filter(|&r| !taken[r] && r != k).collect();
            let sub: Vec<Vec<Money>> = rest_players
                .iter()
                .map(|&p| rest_rooms.iter().map(|&r| weights[p][r].clone()).collect())
                .collect();
            let candidate = &fixed_sum + &weights[i][k] + max_weight(&sub);
            if candidate == best {
                chosen = Some(k);
                break;
            }
        }
        let k = chosen.expect("some room extends a maximum matching");
        fixed_sum += &weights[i][k];
        taken[k] = true;
        fixed.push(k);
    }
    fixed
}

/// Welfare-maximizing bijection for `apartment`, lexicographically smallest
/// among ties. Entry `i` is the room of player `i`.
pub fn max_weight_assignment(inst: &Instance, apartment: usize) -> Result<Vec<usize>> {
    check_index("apartment", apartment, inst.apartments())?;
    Ok(lex_min_max_weight_matching(&inst.apartment_matrix(apartment)))
}

/// [`max_weight_assignment`] applied to every apartment.
pub fn welfare_max_profile(inst: &Instance) -> Assignment {
    let rows = (0..inst.apartments())
        .map(|j| lex_min_max_weight_matching(&inst.apartment_matrix(j)))
        .collect();
    Assignment::new(rows).expect("matchings are bijections")
}

/// Welfare of the best assignment in every apartment.
pub fn max_welfare(inst: &Instance) -> Vec<Money> {
    (0..inst.apartments())
        .map(|j| max_weight(&inst.apartment_matrix(j)) - inst.rent(j))
        .collect()
}
