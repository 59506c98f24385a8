from .susceptance import (
    InvertibilityCertificate,
    SusceptanceBlocks,
    assemble_blocks,
    certify_invertible,
    solve_bbb,
)

__all__ = [
    "assemble_blocks",
    "certify_invertible",
    "InvertibilityCertificate",
    "solve_bbb",
    "SusceptanceBlocks",
]
