"""Belief-function fusion with proportional conflict redistribution."""

__version__ = "0.1.0"

from .algebra import (
    Frame,
    Model,
    Proposition,
    complement,
    dsm_cardinality,
    format_proposition,
    intersection,
    is_empty,
    parse_proposition,
    union,
    union_span,
)
from .mass import DecisionReport, MassFunction, bel, betp, decide, gen_bel, gen_pl, gpt, pl, validate
from .rules import (
    CapacityError,
    PowerWeight,
    auto_conflict,
    conjunctive,
    dsmh,
    dubois_prade,
    fuse,
    fuse_sequential,
    pcr5,
    pcr5_general,
    pcr5_two,
    pcr6,
    pcr6f,
    pcr6g,
)
