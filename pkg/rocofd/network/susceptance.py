import logging
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple, Union

import torch
from boltons.cacheutils import cachedproperty

from ..data import GridModel, require_valid
from ..errors import InternalConsistencyError

logger = logging.getLogger(__name__)

DTYPE = torch.float64
RCOND_THRESHOLD = 1e-12
SOLVE_RTOL = 1e-9


@dataclass(frozen=True)
class InvertibilityCertificate:
    invertible: bool
    reciprocal_condition_estimate: float
    determinant: float


@dataclass(frozen=True, eq=False)
class SusceptanceBlocks:
    r"""
    Block matrices of the augmented DC power-flow model

    .. math::

        \begin{bmatrix} \Delta P_G \\ \Delta P_D \end{bmatrix} =
        \begin{bmatrix} B_{GG} & B_{GB} \\ B_{BG} & B_{BB} \end{bmatrix}
        \begin{bmatrix} \Delta\theta_G \\ \Delta\theta_D \end{bmatrix}

    for ``n`` generator internal nodes and ``m`` load buses, per-unit on the grid's
    MVA base. Off-diagonal entries are minus the branch susceptance, diagonals the
    sum of incident susceptances, so every row of the full matrix sums to zero.

    ``B_BB`` is certified and LU-factorized once, on first use, and the factors
    are reused by every subsequent solve.

    Args:
        b_gg_nn: Diagonal generator block.
        b_gb_nm: Generator-to-load coupling.
        b_bg_mn: Load-to-generator coupling, the transpose of ``b_gb_nm``.
        b_bb_mm: Network susceptance matrix plus the internal-branch diagonal.
        gen_index: Generator bus id to row.
        load_index: Load bus id to row.
        s_base: MVA base used to convert per-unit power to MW.
    """

    b_gg_nn: torch.Tensor
    b_gb_nm: torch.Tensor
    b_bg_mn: torch.Tensor
    b_bb_mm: torch.Tensor
    gen_index: Dict[str, int] = field(default_factory=dict)
    load_index: Dict[str, int] = field(default_factory=dict)
    s_base: float = 1.0

    @property
    def n(self) -> int:
        return self.b_gg_nn.shape[0]

    @property
    def m(self) -> int:
        return self.b_bb_mm.shape[0]

    @property
    def full(self) -> torch.Tensor:
        """The assembled ``(n+m) x (n+m)`` matrix."""
        top = torch.cat([self.b_gg_nn, self.b_gb_nm], dim=1)
        bottom = torch.cat([self.b_bg_mn, self.b_bb_mm], dim=1)
        return torch.cat([top, bottom], dim=0)

    @cachedproperty
    def certificate(self) -> InvertibilityCertificate:
        return certify_invertible(self)

    @cachedproperty
    def lu(self) -> Tuple[torch.Tensor, torch.Tensor]:
        assert self.certificate.invertible
        return torch.linalg.lu_factor(self.b_bb_mm)


def assemble_blocks(grid: GridModel, validate: bool = True) -> SusceptanceBlocks:
    r"""
    Assemble the four susceptance blocks of ``grid``.

    Example::

        >>> blocks = assemble_blocks(chain_grid)  # G1-L1-L2-G2, b_int=10, line b=2
        >>> blocks.b_bb_mm
        tensor([[12., -2.],
                [-2., 12.]], dtype=torch.float64)

    Args:
        grid (GridModel): Network to assemble.
        validate (bool): If ``True`` (default) reject grids that fail ``validate_grid``.
    """
    if validate:
        require_valid(grid)

    gen_index = {bus: i for i, bus in enumerate(grid.gen_ids)}
    load_index = {bus: j for j, bus in enumerate(grid.load_buses)}
    n, m = grid.n, grid.m

    b_gg_nn = torch.zeros((n, n), dtype=DTYPE)
    b_gb_nm = torch.zeros((n, m), dtype=DTYPE)
    b_bb_mm = torch.zeros((m, m), dtype=DTYPE)

    # generator internal branches
    for gen in grid.generators:
        i, j = gen_index[gen.bus], load_index[gen.terminal]
        b = gen.internal_susceptance
        b_gg_nn[i, i] += b
        b_gb_nm[i, j] -= b
        b_bb_mm[j, j] += b

    # network branches, parallel lines aggregated
    for (a, z), b in grid.aggregated_lines().items():
        j, k = load_index[a], load_index[z]
        b_bb_mm[j, j] += b
        b_bb_mm[k, k] += b
        b_bb_mm[j, k] -= b
        b_bb_mm[k, j] -= b

    blocks = SusceptanceBlocks(
        b_gg_nn=b_gg_nn,
        b_gb_nm=b_gb_nm,
        b_bg_mn=b_gb_nm.T.clone(),
        b_bb_mm=b_bb_mm,
        gen_index=gen_index,
        load_index=load_index,
        s_base=grid.s_base,
    )
    logger.debug("assembled susceptance blocks n=%d m=%d", n, m)
    return blocks


def certify_invertible(blocks: SusceptanceBlocks) -> InvertibilityCertificate:
    r"""
    Certify that ``B_BB`` is invertible.

    Every connected grid has an invertible ``B_BB``, so a singular matrix here is
    an internal-consistency failure. The reciprocal condition number is estimated
    on the symmetrically equilibrated matrix ``D^{-1/2} B_BB D^{-1/2}``.

    Raises:
        InternalConsistencyError: If the estimate is not above ``RCOND_THRESHOLD``.
    """
    b_bb_mm = blocks.b_bb_mm
    d_m = torch.diagonal(b_bb_mm)
    if bool((d_m <= 0).any()):
        rcond = 0.0
    else:
        s_m = d_m.rsqrt()
        a_mm = s_m[:, None] * b_bb_mm * s_m[None, :]
        sv = torch.linalg.svdvals(a_mm)
        rcond = float(sv.min() / sv.max())
    det = float(torch.linalg.det(b_bb_mm))
    logger.debug("B_BB reciprocal condition estimate %.3e, determinant %.6g", rcond, det)
    if not rcond > RCOND_THRESHOLD:
        raise InternalConsistencyError(
            f"B_BB is numerically singular (reciprocal condition {rcond:.3e}) although the grid "
            "is expected to be connected."
        )
    return InvertibilityCertificate(invertible=True, reciprocal_condition_estimate=rcond, determinant=det)


def solve_bbb(blocks: SusceptanceBlocks, rhs: Union[torch.Tensor, Sequence[float]]) -> torch.Tensor:
    r"""
    Solve ``B_BB x = rhs`` with the cached factorization.

    Args:
        blocks (SusceptanceBlocks): Assembled blocks.
        rhs (Union[torch.Tensor, Sequence[float]]): Right-hand side of shape ``(m,)`` or ``(m, k)``.

    Returns:
        ``x`` with the shape of ``rhs`` and ``||B_BB x - rhs||_inf <= 1e-9 ||rhs||_inf``.
    """
    rhs = torch.as_tensor(rhs, dtype=DTYPE)
    vector = rhs.dim() == 1
    rhs_mk = rhs[:, None] if vector else rhs
    assert rhs_mk.shape[0] == blocks.m, f"Expected rhs with {blocks.m} rows but found {rhs_mk.shape[0]}."

    lu, pivots = blocks.lu
    if rhs_mk.numel() == 0:
        return rhs.clone()
    x_mk = torch.linalg.lu_solve(lu, pivots, rhs_mk)
    scale = float(rhs_mk.abs().max())
    residual_mk = blocks.b_bb_mm @ x_mk - rhs_mk
    if float(residual_mk.abs().max()) > SOLVE_RTOL * scale:
        # one step of iterative refinement
        x_mk = x_mk - torch.linalg.lu_solve(lu, pivots, residual_mk)
        residual_mk = blocks.b_bb_mm @ x_mk - rhs_mk
        if float(residual_mk.abs().max()) > SOLVE_RTOL * scale:
            raise InternalConsistencyError("B_BB solve did not reach the residual tolerance.")
    return x_mk[:, 0] if vector else x_mk
