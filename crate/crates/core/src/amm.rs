//! Constant-product liquidity pool.
//!
//! A [`PoolState`] holds a paired (project) token reserve `x`, a base token
//! reserve `y`, and the LP-token ledger. Swaps follow `x · y = k` with the
//! swap fee taken from the input amount, so for a sell of `s` paired tokens
//!
//! ```text
//! a   = s · (1 − fee)
//! out = y · a / (x + a)
//! ```
//!
//! and the pool keeps the whole `s`. Every method that mutates validates
//! first, so a failed call leaves the state untouched. The `apply_*` methods
//! are the pure counterparts: they return a new snapshot and leave `self`
//! alone.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::address::Address;
use crate::decimal::{dec, serde_dec, Dec};

/// Largest accepted swap fee.
pub const MAX_FEE_RATE: Dec = dec!(0.05);

/// Fee used when none is configured (input-side, Uniswap-v2 style).
pub const DEFAULT_FEE_RATE: Dec = dec!(0.003);

/// Relative tolerance on the deposit ratio check.
pub const DEPOSIT_RATIO_TOLERANCE: Dec = dec!(1e-9);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AmmError {
    #[error("pool reserves must both be positive")]
    NonPositiveReserves,
    #[error("arithmetic overflow in decimal representation")]
    ArithmeticOverflow,
    #[error("amount must be non-negative, got {0}")]
    NegativeAmount(Dec),
    #[error("fee rate {0} outside [0, 0.05]")]
    InvalidFee(Dec),
    #[error("deposit ratio does not match pool ratio (relative deviation {deviation})")]
    RatioMismatch { deviation: Dec },
    #[error("deposit amounts must both be positive")]
    ZeroDeposit,
    #[error("withdraw amount must be positive")]
    ZeroWithdraw,
    #[error("{holder} holds {available} LP, cannot use {requested}")]
    InsufficientLp {
        holder: Address,
        requested: Dec,
        available: Dec,
    },
    #[error("initial LP of {holder} is burned or locked")]
    LockedLp { holder: Address },
    #[error("initial LP tranche already burned or locked")]
    AlreadyBurned,
    #[error("deployer holds no initial LP tranche")]
    NoInitialTranche,
}

/// Outcome of one swap.
///
/// For sells `amount_out` is base tokens and `impact` is the share of the
/// pre-swap base reserve removed. For buys the same fields are expressed on
/// the paired-token side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapResult {
    #[serde(with = "serde_dec")]
    pub amount_out: Dec,
    #[serde(with = "serde_dec")]
    pub impact: Dec,
    /// Spot-price value of the input minus what was actually received.
    #[serde(with = "serde_dec")]
    pub slippage_cost: Dec,
}

impl SwapResult {
    const NONE: SwapResult = SwapResult {
        amount_out: Dec::ZERO,
        impact: Dec::ZERO,
        slippage_cost: Dec::ZERO,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WithdrawResult {
    #[serde(with = "serde_dec")]
    pub token_out: Dec,
    #[serde(with = "serde_dec")]
    pub base_out: Dec,
    /// `base_out` over the pre-withdraw base reserve.
    #[serde(with = "serde_dec")]
    pub impact: Dec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    token_reserve: Dec,
    base_reserve: Dec,
    lp_total_supply: Dec,
    lp_holdings: BTreeMap<Address, Dec>,
    deployer: Address,
    initial_lp: Dec,
    initial_lp_remaining: Dec,
    initial_lp_burned_or_locked: bool,
    fee_rate: Dec,
}

fn checked(v: Dec) -> Result<Dec, AmmError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AmmError::ArithmeticOverflow)
    }
}

/// Inputs above this magnitude are refused: products of two such values
/// stay far inside the decimal exponent range.
const AMOUNT_LIMIT: Dec = dec!(1e1000);

fn non_negative(v: Dec) -> Result<Dec, AmmError> {
    if v < Dec::ZERO {
        Err(AmmError::NegativeAmount(v))
    } else if !v.is_finite() || v > AMOUNT_LIMIT {
        Err(AmmError::ArithmeticOverflow)
    } else {
        Ok(v)
    }
}

impl PoolState {
    /// An empty pool owned by `deployer`. The first deposit sets the price.
    pub fn new(deployer: Address, fee_rate: Dec) -> Result<Self, AmmError> {
        if fee_rate < Dec::ZERO || fee_rate > MAX_FEE_RATE {
            return Err(AmmError::InvalidFee(fee_rate));
        }
        Ok(PoolState {
            token_reserve: Dec::ZERO,
            base_reserve: Dec::ZERO,
            lp_total_supply: Dec::ZERO,
            lp_holdings: BTreeMap::new(),
            deployer,
            initial_lp: Dec::ZERO,
            initial_lp_remaining: Dec::ZERO,
            initial_lp_burned_or_locked: false,
            fee_rate,
        })
    }

    /// Creates the pool and makes the deployer's seeding deposit.
    pub fn deploy(
        deployer: Address,
        token_amount: Dec,
        base_amount: Dec,
        fee_rate: Dec,
    ) -> Result<Self, AmmError> {
        let mut pool = Self::new(deployer, fee_rate)?;
        pool.deposit(token_amount, base_amount, deployer)?;
        Ok(pool)
    }

    pub fn token_reserve(&self) -> Dec {
        self.token_reserve
    }

    pub fn base_reserve(&self) -> Dec {
        self.base_reserve
    }

    pub fn lp_total_supply(&self) -> Dec {
        self.lp_total_supply
    }

    pub fn lp_holdings(&self) -> &BTreeMap<Address, Dec> {
        &self.lp_holdings
    }

    pub fn lp_balance(&self, holder: &Address) -> Dec {
        self.lp_holdings.get(holder).copied().unwrap_or(Dec::ZERO)
    }

    pub fn deployer(&self) -> Address {
        self.deployer
    }

    /// LP minted to the deployer by the seeding deposit.
    pub fn initial_lp(&self) -> Dec {
        self.initial_lp
    }

    /// Portion of the initial tranche not yet burned.
    pub fn initial_lp_remaining(&self) -> Dec {
        self.initial_lp_remaining
    }

    pub fn initial_lp_burned_or_locked(&self) -> bool {
        self.initial_lp_burned_or_locked
    }

    pub fn fee_rate(&self) -> Dec {
        self.fee_rate
    }

    /// Base tokens per paired token at the current reserves.
    pub fn spot_price(&self) -> Option<Dec> {
        if self.token_reserve.is_zero() {
            None
        } else {
            Some(self.base_reserve / self.token_reserve)
        }
    }

    fn require_reserves(&self) -> Result<(), AmmError> {
        if self.token_reserve > Dec::ZERO && self.base_reserve > Dec::ZERO {
            Ok(())
        } else {
            Err(AmmError::NonPositiveReserves)
        }
    }

    /// Price a sell of `amount_in` paired tokens without executing it.
    pub fn quote_sell(&self, amount_in: Dec) -> Result<SwapResult, AmmError> {
        non_negative(amount_in)?;
        if amount_in.is_zero() {
            return Ok(SwapResult::NONE);
        }
        self.require_reserves()?;
        swap_quote(
            amount_in,
            self.token_reserve,
            self.base_reserve,
            self.fee_rate,
        )
    }

    /// Price a buy paying `base_in` base tokens without executing it.
    pub fn quote_buy(&self, base_in: Dec) -> Result<SwapResult, AmmError> {
        non_negative(base_in)?;
        if base_in.is_zero() {
            return Ok(SwapResult::NONE);
        }
        self.require_reserves()?;
        swap_quote(
            base_in,
            self.base_reserve,
            self.token_reserve,
            self.fee_rate,
        )
    }

    pub fn sell(&mut self, amount_in: Dec) -> Result<SwapResult, AmmError> {
        let quote = self.quote_sell(amount_in)?;
        if amount_in > Dec::ZERO {
            self.token_reserve = checked(self.token_reserve + amount_in)?;
            self.base_reserve -= quote.amount_out;
        }
        Ok(quote)
    }

    pub fn buy(&mut self, base_in: Dec) -> Result<SwapResult, AmmError> {
        let quote = self.quote_buy(base_in)?;
        if base_in > Dec::ZERO {
            self.base_reserve = checked(self.base_reserve + base_in)?;
            self.token_reserve -= quote.amount_out;
        }
        Ok(quote)
    }

    /// Adds liquidity, returning the LP minted to `depositor`.
    ///
    /// The first deposit mints `sqrt(token · base)`; later deposits must match
    /// the reserve ratio and mint pro rata.
    pub fn deposit(
        &mut self,
        token_amount: Dec,
        base_amount: Dec,
        depositor: Address,
    ) -> Result<Dec, AmmError> {
        non_negative(token_amount)?;
        non_negative(base_amount)?;
        if token_amount.is_zero() || base_amount.is_zero() {
            return Err(AmmError::ZeroDeposit);
        }
        let first = self.lp_total_supply.is_zero();
        let minted = if first {
            checked((token_amount * base_amount).sqrt())?
        } else {
            self.require_reserves()?;
            let lhs = checked(token_amount * self.base_reserve)?;
            let rhs = checked(base_amount * self.token_reserve)?;
            let deviation = (lhs - rhs).abs() / lhs;
            if deviation > DEPOSIT_RATIO_TOLERANCE {
                return Err(AmmError::RatioMismatch { deviation });
            }
            checked(self.lp_total_supply * base_amount / self.base_reserve)?
        };
        self.token_reserve = checked(self.token_reserve + token_amount)?;
        self.base_reserve = checked(self.base_reserve + base_amount)?;
        self.lp_total_supply += minted;
        *self.lp_holdings.entry(depositor).or_insert(Dec::ZERO) += minted;
        if first && depositor == self.deployer && self.initial_lp.is_zero() {
            self.initial_lp = minted;
            self.initial_lp_remaining = minted;
        }
        Ok(minted)
    }

    /// Redeems `lp_amount` LP tokens of `holder` for a proportional share of
    /// both reserves.
    pub fn withdraw(
        &mut self,
        lp_amount: Dec,
        holder: Address,
    ) -> Result<WithdrawResult, AmmError> {
        non_negative(lp_amount)?;
        if lp_amount.is_zero() {
            return Err(AmmError::ZeroWithdraw);
        }
        if holder.is_zero() {
            return Err(AmmError::LockedLp { holder });
        }
        let available = self.lp_balance(&holder);
        if lp_amount > available {
            if holder == self.deployer && self.initial_lp_burned_or_locked {
                return Err(AmmError::LockedLp { holder });
            }
            return Err(AmmError::InsufficientLp {
                holder,
                requested: lp_amount,
                available,
            });
        }
        self.require_reserves()?;
        let (token_out, base_out) = if lp_amount == self.lp_total_supply {
            (self.token_reserve, self.base_reserve)
        } else {
            (
                checked(self.token_reserve * lp_amount / self.lp_total_supply)?,
                checked(self.base_reserve * lp_amount / self.lp_total_supply)?,
            )
        };
        let impact = base_out / self.base_reserve;
        self.token_reserve -= token_out;
        self.base_reserve -= base_out;
        self.lp_total_supply -= lp_amount;
        self.debit_lp(holder, lp_amount);
        Ok(WithdrawResult {
            token_out,
            base_out,
            impact,
        })
    }

    fn debit_lp(&mut self, holder: Address, amount: Dec) {
        if let Some(bal) = self.lp_holdings.get_mut(&holder) {
            *bal -= amount;
            if bal.is_zero() {
                self.lp_holdings.remove(&holder);
            }
        }
    }

    /// Moves LP tokens between holders. Supply is unchanged.
    pub fn transfer_lp(&mut self, from: Address, to: Address, amount: Dec) -> Result<(), AmmError> {
        non_negative(amount)?;
        let available = self.lp_balance(&from);
        if amount > available {
            return Err(AmmError::InsufficientLp {
                holder: from,
                requested: amount,
                available,
            });
        }
        if amount.is_zero() || from == to {
            return Ok(());
        }
        self.debit_lp(from, amount);
        *self.lp_holdings.entry(to).or_insert(Dec::ZERO) += amount;
        Ok(())
    }

    /// Sends LP to an unspendable `sink` (burn or lock address).
    ///
    /// Burns by the deployer draw down the initial tranche; the burned/locked
    /// flag is raised once nothing of the tranche remains.
    pub fn burn_lp(&mut self, holder: Address, sink: Address, amount: Dec) -> Result<(), AmmError> {
        self.transfer_lp(holder, sink, amount)?;
        if holder == self.deployer && self.initial_lp > Dec::ZERO {
            self.initial_lp_remaining = (self.initial_lp_remaining - amount).max(Dec::ZERO);
            if self.initial_lp_remaining.is_zero() {
                self.initial_lp_burned_or_locked = true;
            }
        }
        Ok(())
    }

    /// Burns whatever is left of the deployer's initial tranche to the zero address.
    pub fn burn_lock_initial_lp_in_place(&mut self) -> Result<(), AmmError> {
        if self.initial_lp_burned_or_locked {
            return Err(AmmError::AlreadyBurned);
        }
        if self.initial_lp.is_zero() {
            return Err(AmmError::NoInitialTranche);
        }
        let amount = self
            .initial_lp_remaining
            .min(self.lp_balance(&self.deployer));
        self.transfer_lp(self.deployer, Address::ZERO, amount)?;
        self.initial_lp_remaining = Dec::ZERO;
        self.initial_lp_burned_or_locked = true;
        Ok(())
    }

    pub fn apply_sell(&self, amount_in: Dec) -> Result<(PoolState, SwapResult), AmmError> {
        let mut next = self.clone();
        let r = next.sell(amount_in)?;
        Ok((next, r))
    }

    pub fn apply_buy(&self, base_in: Dec) -> Result<(PoolState, SwapResult), AmmError> {
        let mut next = self.clone();
        let r = next.buy(base_in)?;
        Ok((next, r))
    }

    pub fn apply_deposit(
        &self,
        token_amount: Dec,
        base_amount: Dec,
        depositor: Address,
    ) -> Result<(PoolState, Dec), AmmError> {
        let mut next = self.clone();
        let minted = next.deposit(token_amount, base_amount, depositor)?;
        Ok((next, minted))
    }

    pub fn apply_withdraw(
        &self,
        lp_amount: Dec,
        holder: Address,
    ) -> Result<(PoolState, WithdrawResult), AmmError> {
        let mut next = self.clone();
        let r = next.withdraw(lp_amount, holder)?;
        Ok((next, r))
    }

    pub fn burn_lock_initial_lp(&self) -> Result<PoolState, AmmError> {
        let mut next = self.clone();
        next.burn_lock_initial_lp_in_place()?;
        Ok(next)
    }
}

fn swap_quote(
    amount_in: Dec,
    reserve_in: Dec,
    reserve_out: Dec,
    fee_rate: Dec,
) -> Result<SwapResult, AmmError> {
    let effective = checked(amount_in * (Dec::ONE - fee_rate))?;
    let amount_out = checked(reserve_out * effective / checked(reserve_in + effective)?)?;
    let impact = amount_out / reserve_out;
    let spot_value = checked(amount_in * reserve_out / reserve_in)?;
    Ok(SwapResult {
        amount_out,
        impact,
        slippage_cost: spot_value - amount_out,
    })
}
