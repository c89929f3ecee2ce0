"""Convergence of double series and improper double integrals over the first quadrant."""

__version__ = "0.1.0"

from .classify import (
    ClassifierConfig,
    ConfigError,
    RowColVerdicts,
    SuccessiveSumReport,
    classify_absolute,
    classify_pringsheim,
    classify_regular,
    classify_sequence,
    row_col_verdicts,
    sequence_iterated_limits,
    successive_sum_check,
)
from .fubini import (
    FubiniReport,
    HypothesisRejected,
    IntegralClassifierConfig,
    classify_integral_pringsheim,
    classify_integral_regular,
    fubini_check,
    iterated_limit_I1,
    iterated_limit_I2,
    strip_uniformity,
    theorem2_characterize,
)
from .integrals import (
    CallableIntegrand,
    CellGrid,
    DyadicBlocks,
    PlaneIntegrand,
    QuadratureError,
    QuadratureSpec,
    RectRegion,
    cell_embed,
    horizontal_strip,
    iterated_integral,
    partial_integral,
    rect_integral,
    vertical_strip,
)
from .series import (
    IndexDomain,
    PrefixSumTable,
    TermSource,
    abs_partial_sum,
    block_sum,
    build_table,
    col_partial,
    from_array,
    partial_sum,
    row_partial,
    symmetric_partial_sum,
)
from .verdict import PreconditionError, Status, Verdict
from .zoo import FIXTURES, fixture, oracle_partial_sum
