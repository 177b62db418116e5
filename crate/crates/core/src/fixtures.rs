//! Reference instances used across tests, the CLI presets and the service.

use crate::extensions::{ApartmentType, TypedApartmentMarket};
use crate::model::Instance;
use crate::money::money;

/// Two players, two apartments with rent 300. Player 0 values the rooms of
/// apartment 0 at 200 and those of apartment 1 at 100; player 1 the reverse.
pub fn example_one() -> Instance {
    Instance::from_ints(
        &[
            vec![vec![200, 200], vec![100, 100]],
            vec![vec![100, 100], vec![200, 200]],
        ],
        &[300, 300],
        true,
    )
}

/// Two players, two apartments with rent 100, no universal envy-free
/// solution and a one-parameter family of negotiated envy-free prices.
pub fn example_five() -> Instance {
    Instance::from_ints(
        &[vec![vec![100, 100], vec![0, 0]], vec![vec![1, 1], vec![99, 99]]],
        &[100, 100],
        true,
    )
}

/// Rows of the first three-room apartment of the monotonicity instance.
pub fn monotonicity_first_rows() -> Vec<Vec<i64>> {
    vec![vec![150, 150, 0], vec![0, 150, 150], vec![75, 75, 150]]
}

/// Rows of the second apartment, whose addition lowers the best maximin
/// value.
pub fn monotonicity_second_rows() -> Vec<Vec<i64>> {
    vec![vec![100, 100, 100], vec![300, 0, 0], vec![300, 0, 0]]
}

/// Second apartment in which every player values a different room at the
/// full rent; adding it raises the best maximin value.
pub fn monotonicity_alternative_rows() -> Vec<Vec<i64>> {
    vec![vec![300, 0, 0], vec![0, 300, 0], vec![0, 0, 300]]
}

fn three_player_instance(apartments: &[Vec<Vec<i64>>]) -> Instance {
    let values: Vec<Vec<Vec<i64>>> = (0..3)
        .map(|i| apartments.iter().map(|rows| rows[i].clone()).collect())
        .collect();
    let rents = vec![300; apartments.len()];
    Instance::from_ints(&values, &rents, false)
}

/// The first monotonicity apartment on its own.
pub fn monotonicity_single() -> Instance {
    three_player_instance(&[monotonicity_first_rows()])
}

/// Both monotonicity apartments.
pub fn monotonicity() -> Instance {
    three_player_instance(&[monotonicity_first_rows(), monotonicity_second_rows()])
}

/// First monotonicity apartment plus the alternative second apartment.
pub fn monotonicity_alternative() -> Instance {
    three_player_instance(&[monotonicity_first_rows(), monotonicity_alternative_rows()])
}

/// Three players and three apartment types of sizes 3, 2 and 1, all rent
/// free, whose core is empty.
pub fn core_market() -> TypedApartmentMarket {
    let ty = |size: usize, per_player: [i64; 3]| ApartmentType {
        size,
        rent: money(0),
        values: per_player.iter().map(|&v| vec![money(v); size]).collect(),
    };
    TypedApartmentMarket::new(
        3,
        vec![
            ty(3, [340, -20, -20]),
            ty(2, [170, 170, 170]),
            ty(1, [-1360, -280, -280]),
        ],
    )
    .expect("well-formed market")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn fixtures_validate() {
        for inst in [
            example_one(),
            example_five(),
            monotonicity_single(),
            monotonicity(),
            monotonicity_alternative(),
        ] {
            assert!(validate(&inst).is_ok(), "{inst:?}");
        }
        // Normalization holds for the two-player examples.
        assert!(validate(&example_one().with_normalized(true)).is_ok());
        assert!(validate(&example_five().with_normalized(true)).is_ok());
    }

    #[test]
    fn monotonicity_shapes() {
        let inst = monotonicity();
        assert_eq!((inst.players(), inst.apartments()), (3, 2));
        assert_eq!(inst.value(2, 0, 0), &money(75));
        assert_eq!(inst.value(1, 1, 0), &money(300));
    }
}
