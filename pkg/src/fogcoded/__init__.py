"""Coded caching with delayed requests: simulator and load analytics."""

from .analytics import (
    FixedLConfig,
    Q_count,
    b_count,
    brute_force_Q,
    c_count,
    closed_form_load,
    load_bounds,
    mn_sync_load,
    q1_count,
    q2_count,
    q_count,
    uncoded_load,
)
from .core import (
    CacheLayout,
    Library,
    RequestSchedule,
    SubfileRecordTable,
    SystemParams,
    analytic_subfile_table,
    expected_subfile_size,
    generate_library,
    make_fixed_L_schedule,
    make_random_schedule,
    partition_into_subfiles,
    place_caches,
)
from .delivery import (
    DeliveryResult,
    LoadReport,
    TransmissionRecord,
    decode_fap,
    log_lines,
    measured_load,
    run_delivery,
)
from .errors import (
    DeadlineViolation,
    DecodeFailure,
    FogcodedError,
    InvalidParams,
    OutOfRange,
    TooLarge,
)
from .partition import (
    ActiveWindow,
    PartitionResult,
    active_window,
    collapse,
    eta,
    partition_encoding_set,
)

__all__ = [
    "ActiveWindow",
    "CacheLayout",
    "DeadlineViolation",
    "DecodeFailure",
    "DeliveryResult",
    "FixedLConfig",
    "FogcodedError",
    "InvalidParams",
    "Library",
    "LoadReport",
    "OutOfRange",
    "PartitionResult",
    "Q_count",
    "RequestSchedule",
    "SubfileRecordTable",
    "SystemParams",
    "TooLarge",
    "TransmissionRecord",
    "active_window",
    "analytic_subfile_table",
    "b_count",
    "brute_force_Q",
    "c_count",
    "closed_form_load",
    "collapse",
    "decode_fap",
    "eta",
    "expected_subfile_size",
    "generate_library",
    "load_bounds",
    "log_lines",
    "make_fixed_L_schedule",
    "make_random_schedule",
    "measured_load",
    "mn_sync_load",
    "partition_encoding_set",
    "partition_into_subfiles",
    "place_caches",
    "q1_count",
    "q2_count",
    "q_count",
    "run_delivery",
    "uncoded_load",
]

__version__ = "0.1.0"
