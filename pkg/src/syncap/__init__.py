"""Capacity lower bounds for binary channels with synchronization errors followed by a memoryless channel."""

from .channels import (
    DmcMatrix,
    SyncKernel,
    bsc_dmc,
    compose_kernel,
    custom_kernel,
    decompose_example,
    deletion_kernel,
    expected_output_rate,
    gallager_kernel,
    identity_dmc,
    load_channel_file,
    qary_dmc,
    quaternary_dmc,
    save_channel_file,
    sub_ers_dmc,
)
from .errors import BudgetError, ConvergenceError, DomainError, MissingKeyError, SyncapError, ValidationError
from .litdata import LiteratureTable, load_table, lookup_cs, save_table
from .penalties import (
    BoundResult,
    gallager_bound,
    ids_bound,
    penalty_qary_even,
    penalty_qary_odd,
    penalty_quaternary,
    penalty_sub_ers,
    qary_bound,
    quaternary_bound,
    seid_bound,
    ses_bound,
)
from .quantize import (
    awgn_bound,
    awgn_penalty,
    awgn_penalty_nonuniform_limit,
    awgn_penalty_uniform_limit,
    finite_penalty,
    nonuniform_quantizer,
    uniform_level_probs,
)

__version__ = "0.1.0"
