//! Baseline rug-pull predicates and the canonical detector.
//!
//! - **RetainLP** holds unless the deployer's initial LP tranche has been
//!   sent, in full, to a burn or lock address.
//! - **HighImpact** holds when some sell or withdrawal removes more than
//!   `theta` of the pool's base reserve.
//! - **SellerIsOwner** holds when that transaction's actor is in the owner
//!   set (the deployer plus any configured extension).
//!
//! The canonical detector flags a pool when all three hold, with the
//! second and third bound to the same transaction.

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::amm::DEFAULT_FEE_RATE;
use crate::decimal::{dec, serde_dec, Dec};
use crate::ledger::{Asset, EventKind, PoolTrace, DEFAULT_MAX_LIFETIME_DAYS};

pub const DEFAULT_THETA: Dec = dec!(0.9);

/// A partial burn within this relative distance of the full tranche counts
/// as a full burn.
pub const BURN_DUST_TOLERANCE: Dec = dec!(1e-9);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredicateError {
    #[error("pool {pool_id}: trace has no base reserve annotations")]
    MissingAnnotations { pool_id: String },
    #[error("pool {pool_id}: event {index} is not a sell or withdrawal")]
    InvalidWitness { pool_id: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    #[serde(with = "serde_dec")]
    pub theta: Dec,
    pub burn_addresses: Vec<Address>,
    pub owner_set_extension: Vec<Address>,
    pub max_lifetime_days: f64,
    /// Fee used when reserves must be reconstructed by replay.
    #[serde(with = "serde_dec")]
    pub fee_rate: Dec,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            theta: DEFAULT_THETA,
            burn_addresses: vec![Address::ZERO, Address::DEAD],
            owner_set_extension: Vec::new(),
            max_lifetime_days: DEFAULT_MAX_LIFETIME_DAYS,
            fee_rate: DEFAULT_FEE_RATE,
        }
    }
}

impl DetectorConfig {
    pub fn with_theta(mut self, theta: Dec) -> Self {
        self.theta = theta;
        self
    }

    /// Checks ranges: `0 < theta < 1`, positive finite lifetime bound.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.theta > Dec::ZERO && self.theta < Dec::ONE) {
            return Err(format!("theta must lie in (0, 1), got {}", self.theta));
        }
        if !(self.max_lifetime_days.is_finite() && self.max_lifetime_days > 0.0) {
            return Err(format!(
                "max_lifetime_days must be positive, got {}",
                self.max_lifetime_days
            ));
        }
        if self.fee_rate < Dec::ZERO || self.fee_rate > crate::amm::MAX_FEE_RATE {
            return Err(format!("fee rate {} outside [0, 0.05]", self.fee_rate));
        }
        Ok(())
    }

    pub fn is_owner(&self, trace: &PoolTrace, who: &Address) -> bool {
        *who == trace.deployer || self.owner_set_extension.contains(who)
    }

    pub fn is_burn_address(&self, who: &Address) -> bool {
        self.burn_addresses.contains(who)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredicateVerdict {
    pub a_retain_lp: bool,
    pub b_high_impact: bool,
    /// Earliest exit with impact above `theta`.
    pub b_witness: Option<usize>,
    pub c_seller_is_owner: bool,
    /// Earliest owner exit with impact above `theta`; set only when
    /// `c_seller_is_owner`.
    pub c_witness: Option<usize>,
    #[serde(with = "serde_dec")]
    pub theta: Dec,
}

impl PredicateVerdict {
    pub fn flagged(&self) -> bool {
        self.a_retain_lp && self.b_high_impact && self.c_seller_is_owner
    }
}

/// LP minted by the seeding deposit: `sqrt(token · base)` of the deploy.
pub fn initial_lp_tranche(trace: &PoolTrace) -> Dec {
    let d = trace.deploy_event();
    (d.token_amount * d.base_amount).sqrt()
}

/// Amount of the deployer's LP sent to burn addresses over the whole trace.
pub fn burned_initial_lp(trace: &PoolTrace, cfg: &DetectorConfig) -> Dec {
    trace
        .events
        .iter()
        .filter(|e| {
            e.kind == EventKind::Transfer
                && e.asset == Asset::Lp
                && e.actor == trace.deployer
                && e.counterparty.is_some_and(|c| cfg.is_burn_address(&c))
        })
        .fold(Dec::ZERO, |acc, e| acc + e.token_amount)
}

/// RetainLP: false only once the whole initial tranche has been burned or locked.
pub fn eval_predicate_a(trace: &PoolTrace, cfg: &DetectorConfig) -> bool {
    let tranche = initial_lp_tranche(trace);
    if tranche <= Dec::ZERO {
        return true;
    }
    let burned = burned_initial_lp(trace, cfg);
    burned < tranche * (Dec::ONE - BURN_DUST_TOLERANCE)
}

fn require_annotations(trace: &PoolTrace) -> Result<(), PredicateError> {
    if trace.is_annotated() {
        Ok(())
    } else {
        Err(PredicateError::MissingAnnotations {
            pool_id: trace.pool_id.clone(),
        })
    }
}

/// Indices of exits whose impact exceeds `theta`, in trace order.
fn high_impact_exits(trace: &PoolTrace, theta: Dec) -> impl Iterator<Item = usize> + '_ {
    (0..trace.events.len()).filter(move |&i| trace.impact(i).is_some_and(|v| v > theta))
}

/// HighImpact with its earliest witness.
pub fn eval_predicate_b(
    trace: &PoolTrace,
    theta: Dec,
) -> Result<(bool, Option<usize>), PredicateError> {
    require_annotations(trace)?;
    let witness = high_impact_exits(trace, theta).next();
    Ok((witness.is_some(), witness))
}

/// SellerIsOwner on a given witness.
pub fn eval_predicate_c(
    trace: &PoolTrace,
    witness: usize,
    cfg: &DetectorConfig,
) -> Result<bool, PredicateError> {
    let event = trace
        .events
        .get(witness)
        .filter(|e| e.is_exit())
        .ok_or_else(|| PredicateError::InvalidWitness {
            pool_id: trace.pool_id.clone(),
            index: witness,
        })?;
    Ok(cfg.is_owner(trace, &event.actor))
}

/// The baseline detector at `cfg.theta`.
///
/// When the earliest high-impact exit is not an owner's, later high-impact
/// exits are searched so that both predicates hold on one transaction.
pub fn canonical_detect(
    trace: &PoolTrace,
    cfg: &DetectorConfig,
) -> Result<(bool, PredicateVerdict), PredicateError> {
    canonical_detect_at(trace, cfg, cfg.theta)
}

/// [`canonical_detect`] with `theta` overriding the configured threshold.
pub fn canonical_detect_at(
    trace: &PoolTrace,
    cfg: &DetectorConfig,
    theta: Dec,
) -> Result<(bool, PredicateVerdict), PredicateError> {
    let a = eval_predicate_a(trace, cfg);
    let (b, b_witness) = eval_predicate_b(trace, theta)?;
    let mut c_witness = None;
    if b {
        for i in high_impact_exits(trace, theta) {
            if eval_predicate_c(trace, i, cfg)? {
                c_witness = Some(i);
                break;
            }
        }
    }
    let verdict = PredicateVerdict {
        a_retain_lp: a,
        b_high_impact: b,
        b_witness,
        c_seller_is_owner: c_witness.is_some(),
        c_witness,
        theta,
    };
    Ok((verdict.flagged(), verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amm::PoolState;
    use crate::ledger::{annotate, TxEvent};
    use proptest::prelude::*;

    fn addr(n: u8) -> Address {
        let mut b = [0u8; 20];
        b[19] = n;
        Address(b)
    }

    const OWNER: u8 = 1;

    /// Builds an annotated fee-free trace from (actor, token volume) sells,
    /// simulated on the pool so recorded outputs are exact.
    fn sells_trace(x: Dec, y: Dec, sells: &[(u8, Dec)], burn_first: Option<Dec>) -> PoolTrace {
        let mut pool = PoolState::deploy(addr(OWNER), x, y, Dec::ZERO).unwrap();
        let mut events = vec![TxEvent::new(EventKind::Deploy, addr(OWNER), 0, x, y)];
        if let Some(frac) = burn_first {
            let amount = pool.initial_lp() * frac;
            events.push(TxEvent::transfer(
                Asset::Lp,
                addr(OWNER),
                Address::ZERO,
                1,
                amount,
            ));
        }
        for (i, (who, q)) in sells.iter().enumerate() {
            let out = pool.sell(*q).unwrap().amount_out;
            events.push(TxEvent::new(
                EventKind::Sell,
                addr(*who),
                10 + i as u64,
                *q,
                out,
            ));
        }
        let mut t = PoolTrace::from_events("p", "dex", events).unwrap();
        annotate(&mut t, Dec::ZERO).unwrap();
        t
    }

    /// Token volume that removes exactly `impact` of the base reserve, fee-free.
    fn volume_for(x: Dec, impact: Dec) -> Dec {
        x * impact / (Dec::ONE - impact)
    }

    fn cfg() -> DetectorConfig {
        DetectorConfig::default()
    }

    #[test]
    fn retain_lp_cases() {
        let x = dec!(1000);
        let y = dec!(100);
        assert!(eval_predicate_a(&sells_trace(x, y, &[], None), &cfg()));
        assert!(!eval_predicate_a(
            &sells_trace(x, y, &[], Some(Dec::ONE)),
            &cfg()
        ));
        assert!(eval_predicate_a(
            &sells_trace(x, y, &[], Some(dec!(0.5))),
            &cfg()
        ));
    }

    #[test]
    fn burn_to_custom_address_only_counts_when_configured() {
        let mut t = sells_trace(dec!(1000), dec!(100), &[], None);
        let lp = initial_lp_tranche(&t);
        t.events
            .push(TxEvent::transfer(Asset::Lp, addr(OWNER), addr(0x77), 5, lp));
        t.base_reserve_before = None;
        assert!(eval_predicate_a(&t, &cfg()));
        let mut c = cfg();
        c.burn_addresses.push(addr(0x77));
        assert!(!eval_predicate_a(&t, &c));
    }

    #[test]
    fn high_impact_single_sell() {
        let x = dec!(1000);
        let t = sells_trace(x, dec!(100), &[(2, volume_for(x, dec!(0.95)))], None);
        assert_eq!(eval_predicate_b(&t, dec!(0.9)).unwrap(), (true, Some(1)));
    }

    #[test]
    fn no_sells_no_witness() {
        let t = sells_trace(dec!(1000), dec!(100), &[], None);
        assert_eq!(eval_predicate_b(&t, dec!(0.9)).unwrap(), (false, None));
    }

    #[test]
    fn threshold_is_strict() {
        let x = dec!(1000);
        let t = sells_trace(x, dec!(100), &[(2, volume_for(x, dec!(0.9)))], None);
        assert_eq!(t.impact(1), Some(dec!(0.9)));
        assert_eq!(eval_predicate_b(&t, dec!(0.9)).unwrap(), (false, None));
    }

    #[test]
    fn missing_annotations() {
        let mut t = sells_trace(dec!(1000), dec!(100), &[], None);
        t.base_reserve_before = None;
        assert!(matches!(
            eval_predicate_b(&t, dec!(0.9)),
            Err(PredicateError::MissingAnnotations { .. })
        ));
    }

    #[test]
    fn seller_is_owner_cases() {
        let x = dec!(1000);
        let t = sells_trace(
            x,
            dec!(100),
            &[(OWNER, dec!(10)), (2, dec!(10)), (3, dec!(10))],
            None,
        );
        assert!(eval_predicate_c(&t, 1, &cfg()).unwrap());
        assert!(!eval_predicate_c(&t, 2, &cfg()).unwrap());
        let mut extended = cfg();
        extended.owner_set_extension.push(addr(3));
        assert!(eval_predicate_c(&t, 3, &extended).unwrap());
        assert!(matches!(
            eval_predicate_c(&t, 0, &cfg()),
            Err(PredicateError::InvalidWitness { index: 0, .. })
        ));
        assert!(eval_predicate_c(&t, 99, &cfg()).is_err());
    }

    #[test]
    fn canonical_owner_drain() {
        let x = dec!(1000);
        let t = sells_trace(x, dec!(100), &[(OWNER, volume_for(x, dec!(0.95)))], None);
        let (flag, v) = canonical_detect(&t, &cfg()).unwrap();
        assert!(flag);
        assert_eq!(v.c_witness, Some(1));
    }

    #[test]
    fn canonical_needs_retained_lp() {
        let x = dec!(1000);
        let t = sells_trace(
            x,
            dec!(100),
            &[(OWNER, volume_for(x, dec!(0.95)))],
            Some(Dec::ONE),
        );
        let (flag, v) = canonical_detect(&t, &cfg()).unwrap();
        assert!(!flag);
        assert!(!v.a_retain_lp && v.b_high_impact && v.c_seller_is_owner);
    }

    #[test]
    fn four_small_wallets_evade() {
        let x = dec!(1000);
        let mut sells = Vec::new();
        let mut reserve_x = x;
        for w in 2..6u8 {
            let q = volume_for(reserve_x, dec!(0.89));
            sells.push((w, q));
            reserve_x += q;
        }
        let t = sells_trace(x, dec!(100), &sells, None);
        for i in 1..t.events.len() {
            assert!(t.impact(i).unwrap() <= dec!(0.89) + dec!(1e-30));
        }
        let (flag, v) = canonical_detect(&t, &cfg()).unwrap();
        assert!(!flag);
        assert!(!v.b_high_impact);
    }

    #[test]
    fn witness_coupling_skips_non_owner() {
        let x = dec!(1000);
        let mut sells = vec![(2, volume_for(x, dec!(0.95)))];
        let x2 = x + sells[0].1;
        sells.push((OWNER, volume_for(x2, dec!(0.95))));
        let t = sells_trace(x, dec!(100), &sells, None);
        let (flag, v) = canonical_detect(&t, &cfg()).unwrap();
        assert!(flag);
        assert_eq!(v.b_witness, Some(1));
        assert_eq!(v.c_witness, Some(2));
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(cfg().with_theta(Dec::ONE).validate().is_err());
        assert!(cfg().with_theta(Dec::ZERO).validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn threshold_monotonicity(
            impacts in prop::collection::vec(1u32..999, 0..8),
            t1 in 1u32..999,
            t2 in 1u32..999,
        ) {
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let x = dec!(1000);
            let mut reserve = x;
            let mut sells = Vec::new();
            for (i, m) in impacts.iter().enumerate() {
                let q = volume_for(reserve, Dec::from(*m) / dec!(1000));
                reserve += q;
                sells.push(((i % 3) as u8 + 1, q));
            }
            let t = sells_trace(x, dec!(100), &sells, None);
            let theta_lo = Dec::from(lo) / dec!(1000);
            let theta_hi = Dec::from(hi) / dec!(1000);
            let (b_hi, w_hi) = eval_predicate_b(&t, theta_hi).unwrap();
            let (b_lo, w_lo) = eval_predicate_b(&t, theta_lo).unwrap();
            prop_assert!(!b_hi || b_lo);
            if let (Some(a), Some(b)) = (w_lo, w_hi) {
                prop_assert!(a <= b);
            }
            // the witness is the earliest qualifying exit
            if let Some(w) = w_lo {
                for i in 1..w {
                    prop_assert!(t.impact(i).unwrap() <= theta_lo);
                }
            }
        }
    }
}
