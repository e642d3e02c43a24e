//! Property tests for the numeric kernels and the decoding model.

use proptest::prelude::*;
use ra_uplink::fbl::{achievable_rate, fbl_threshold, FblRateParams};
use ra_uplink::model::{
    chase_sinr_constant, conditional_arrival_pmf, max_supportable_occupancy, occupancy_truncation,
    AttemptHistory, PerTfsRate,
};
use ra_uplink::specfun::{q_function, q_inverse};

proptest! {
    #[test]
    fn q_round_trip(p in 1e-9f64..0.999_999_999) {
        let x = q_inverse(p).unwrap();
        prop_assert!((q_function(x) - p).abs() <= 1e-10);
    }

    #[test]
    fn q_monotone_pairs(a in -6.0f64..8.0, d in 1e-5f64..4.0) {
        // Domain kept where the decrement stays above one ulp of Q(a),
        // so strict monotonicity is representable in f64.
        prop_assert!(q_function(a + d) < q_function(a));
    }

    #[test]
    fn chase_sinr_monotonicities(
        ks in prop::collection::vec(1u32..6, 1..6),
        bump in 0usize..6,
        rho in 0.05f64..50.0,
    ) {
        let m = ks.len() as u32;
        let base = AttemptHistory::constant_snr(ks.clone());
        let s0 = chase_sinr_constant(&base, rho, m);
        // Non-increasing in each k_i.
        let idx = bump % ks.len();
        let mut worse = ks.clone();
        worse[idx] += 1;
        let s1 = chase_sinr_constant(&AttemptHistory::constant_snr(worse), rho, m);
        prop_assert!(s1 <= s0 + 1e-12);
        // Non-decreasing in rho.
        let s2 = chase_sinr_constant(&base, rho * 1.5, m);
        prop_assert!(s2 >= s0 - 1e-12);
    }

    #[test]
    fn supportable_occupancy_tight(
        prefix in prop::collection::vec(1u32..5, 0..4),
        gamma in 0.05f64..20.0,
        rho in 0.1f64..50.0,
    ) {
        let m = prefix.len() as u32 + 1;
        let kstar = max_supportable_occupancy(&prefix, m, gamma, rho);
        prop_assert!(kstar >= 1);
        // One more device than k*_m always breaks the threshold.
        let mut occ = prefix.clone();
        occ.push(kstar + 1);
        let sinr = chase_sinr_constant(&AttemptHistory::constant_snr(occ), rho, m);
        prop_assert!(sinr < gamma * (1.0 + 1e-12));
    }

    #[test]
    fn pmf_normalizes(nu in 1e-3f64..50.0) {
        let r = PerTfsRate::new(nu);
        let total: f64 = (1..=occupancy_truncation(r))
            .map(|k| conditional_arrival_pmf(k, r).unwrap())
            .sum();
        prop_assert!((1.0 - total).abs() < 1e-11);
    }

    #[test]
    fn fbl_threshold_inverts_rate(
        n in 100u64..5000,
        ratio in 0.05f64..0.9,
        eps in 0.001f64..0.45,
    ) {
        let payload = ((n as f64) * ratio).ceil().max(10.0) as u32;
        if let Ok(gamma) = fbl_threshold(n, payload, eps) {
            let params = FblRateParams { block_length: n, payload_bits: payload, error_prob: eps };
            let rate = achievable_rate(&params, gamma).unwrap();
            prop_assert!((rate - f64::from(payload) / n as f64).abs() <= 1e-9);
        }
    }
}
