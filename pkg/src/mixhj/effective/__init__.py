"""Effective Hamiltonians: numeric cell problems, closed forms, Walsh expansion, correctors."""

from __future__ import annotations

from .cell import CellResult, cell_numeric, coercivity_sign, effective_eikonal, harmonic_speed
from .formulas import fourpath_formulas, onedexample_formulas, simplecell, skew
from .nonconvex import (
    CorrectorProfile,
    CorrectorReport,
    Piece,
    ballistic_constant,
    case_mean,
    case_of,
    corrector_Hs,
    effective_Hs,
    level_integral,
    nonconvex_relations,
    psi,
    psi_branches,
    thresholds,
    verify_corrector,
)
from .tables import EffectiveTable, WalshDecomposition, chi, dc_split, subsets, walsh_decompose

__all__ = [
    "CellResult", "cell_numeric", "coercivity_sign", "effective_eikonal", "harmonic_speed",
    "fourpath_formulas", "onedexample_formulas", "simplecell", "skew",
    "CorrectorProfile", "CorrectorReport", "Piece", "ballistic_constant", "case_mean", "case_of",
    "corrector_Hs", "effective_Hs", "level_integral", "nonconvex_relations", "psi", "psi_branches",
    "thresholds", "verify_corrector",
    "EffectiveTable", "WalshDecomposition", "chi", "dc_split", "subsets", "walsh_decompose",
]
