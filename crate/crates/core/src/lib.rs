pub mod address;
pub mod adversary;
pub mod amm;
pub mod decimal;
pub mod detection;
pub mod frp;
pub mod ledger;
pub mod measurement;
pub mod predicates;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/pool-model.md")]
    struct PoolModel;
    #[doc = include_str!("../../../book/src/traces.md")]
    struct Traces;
    #[doc = include_str!("../../../book/src/detection.md")]
    struct Detection;
    #[doc = include_str!("../../../book/src/exit-strategies.md")]
    struct ExitStrategies;
    #[doc = include_str!("../../../book/src/scenarios.md")]
    struct Scenarios;
    #[doc = include_str!("../../../book/src/measurement.md")]
    struct Measurement;
}
