//! Helpers shared by unit tests.

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                go(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Random instances with small integer values so that ties are common.
/// Normalized instances give every player a total value equal to the
/// total rent.
pub fn instances(
    players: std::ops::RangeInclusive<usize>,
    apartments: std::ops::RangeInclusive<usize>,
    normalized: bool,
) -> impl proptest::strategy::Strategy<Value = crate::model::Instance> {
    use proptest::prelude::*;
    (players, apartments)
        .prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(proptest::collection::vec(proptest::collection::vec(0i64..6, n), m), n),
                proptest::collection::vec(0i64..10, m),
            )
        })
        .prop_map(move |(mut values, mut rents)| {
            if normalized {
                // Each player's values sum to the total rent of all apartments.
                let per_player: Vec<i64> = values.iter().map(|v| v.iter().flatten().sum()).collect();
                let total = per_player.iter().max().copied().unwrap_or(0).max(1);
                for (v, own) in values.iter_mut().zip(&per_player) {
                    v[0][0] += total - own;
                }
                let m = rents.len() as i64;
                rents = vec![total / m; rents.len()];
                rents[0] += total - (total / m) * m;
            }
            crate::model::Instance::from_ints(&values, &rents, normalized)
        })
}
