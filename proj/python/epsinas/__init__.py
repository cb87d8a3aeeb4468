"""Trainless architecture scoring with the epsilon metric."""

from ._epsinas import (
    SPACE_SIZE,
    EpsinasValueError,
    IoError,
    ParseError,
    ShapeError,
    correlate,
    edit_distance,
    epsilon_from_raw,
    genotype_from_index,
    genotype_index,
    kendall,
    make_batch,
    parse_genotype,
    run_cli,
    score,
    spearman,
)

__version__ = "0.1.0"

__all__ = [
    "SPACE_SIZE",
    "EpsinasValueError",
    "IoError",
    "ParseError",
    "ShapeError",
    "correlate",
    "edit_distance",
    "epsilon_from_raw",
    "genotype_from_index",
    "genotype_index",
    "kendall",
    "make_batch",
    "parse_genotype",
    "run_cli",
    "score",
    "spearman",
]
