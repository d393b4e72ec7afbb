"""Weekly demand forecasting and shipping-mode allocation.

Thin re-export of the compiled ``_shipcast`` extension. Instances and plans
are plain dicts in the same JSON layout the command line tool reads and writes.
"""

from ._shipcast import (
    ConfigError,
    DataError,
    Error,
    allocate,
    compare_baselines,
    evaluate_plan,
    ingest,
    mae,
    mstl_decompose,
    mstl_forecast,
    oracle_enumerate,
    reference_instance,
    run_pipeline,
    select_model,
    smape,
    train_forecast,
    write_synthetic_transactions,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "allocate",
    "compare_baselines",
    "evaluate_plan",
    "ingest",
    "mae",
    "mstl_decompose",
    "mstl_forecast",
    "oracle_enumerate",
    "reference_instance",
    "run_pipeline",
    "select_model",
    "smape",
    "train_forecast",
    "write_synthetic_transactions",
]
