"""
POVM coherence measures.

The l1, Tsallis and relative-entropy measures have direct d-dimensional
closed forms in terms of the Kraus operators A_i. Every measure can also be
evaluated through the embedding: the block measure of
eps(rho) = sum_ij A_i rho A_j^dagger (x) |i><j| with respect to the register
measurement. The trace-norm, weight and Renyi measures are only defined
that way.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache
import logging
from typing import Callable, Dict

import numpy as np

from povm_coherence.blockcoh import (
    CLOSED_FORM_MEASURES,
    DEFAULT_CLOSED_FORM_CLAMP,
    MEASURE_NAMES,
    MeasureParams,
    MeasureResult,
    block_measure,
    c_renyi_block,
    check_renyi_alpha,
    check_tsallis_alpha,
    clamp,
)
from povm_coherence.errors import NotPSD
from povm_coherence.matcore import (
    dagger,
    entropy_term,
    hermitian_part,
    min_eigenvalue,
    psd_power,
    trace_norm,
)
from povm_coherence.naimark import NaimarkExtension, build_extension, embed, povm_digest
from povm_coherence.quantum import (
    DensityMatrix,
    Povm,
    check_dim,
    state_matrix,
)


logger = logging.getLogger(__name__)

DEFAULT_EXTENSION_CACHE = 64
DEFAULT_ROUTE_TOL = 1e-8
DEFAULT_EMBED_PSD_TOL = 1e-9
ROUTES = ("direct", "embedded", "both")


@dataclass(frozen=True)
class PovmMeasureRequest:
    """
    One POVM coherence evaluation.

    Attributes:
        rho (DensityMatrix): The state.
        povm (Povm): The POVM.
        measure (str): One of l1, tsallis, rel, trace, weight, renyi.
        alpha (float, optional): Order for tsallis and renyi; overrides
          ``params.alpha`` when given.
        params (MeasureParams): Solver settings.
        route (str, optional): "direct", "embedded" or "both". Defaults to
          direct for the closed forms and embedded otherwise.

    Raises:
        ValueError: For an unknown measure or route, or a direct route
          requested for a solver-based measure.
        BadAlpha: If alpha is illegal for the measure.
    """
    rho: DensityMatrix
    povm: Povm
    measure: str
    alpha: float | None = None
    params: MeasureParams = field(default_factory=MeasureParams)
    route: str | None = None

    def __post_init__(self):
        if self.measure not in MEASURE_NAMES:
            raise ValueError(f"Unknown measure {self.measure!r}")
        if self.alpha is not None:
            object.__setattr__(self, "params", replace(self.params, alpha=self.alpha))
        if self.route is None:
            default = "direct" if self.measure in CLOSED_FORM_MEASURES else "embedded"
            object.__setattr__(self, "route", default)
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}")
        if self.route != "embedded" and self.measure not in CLOSED_FORM_MEASURES:
            raise ValueError(
                f"Measure {self.measure!r} is only defined through the embedding"
            )
        if self.measure == "tsallis":
            check_tsallis_alpha(self.params.alpha)
        if self.measure == "renyi":
            check_renyi_alpha(self.params.alpha)
        check_dim(state_matrix(self.rho), self.povm.dim, "state")


class _PovmKey:
    """Hashable handle of a POVM, compared by Kraus digest."""

    __slots__ = ("povm", "digest")

    def __init__(self, povm: Povm):
        self.povm = povm
        self.digest = povm_digest(povm)

    def __hash__(self) -> int:
        return hash(self.digest)

    def __eq__(self, other) -> bool:
        return isinstance(other, _PovmKey) and other.digest == self.digest


@lru_cache(maxsize=DEFAULT_EXTENSION_CACHE)
def _cached_extension(key: _PovmKey) -> NaimarkExtension:
    return build_extension(key.povm)


def extension_for(e: Povm) -> NaimarkExtension:
    """The standard Naimark extension of e, cached per Kraus family."""
    return _cached_extension(_PovmKey(e))


def embedded_state(rho, e: Povm) -> DensityMatrix:
    """eps(rho) as a state on H (x) H_R."""
    return embed(rho, e).as_state()


def _operand(rho, e: Povm) -> np.ndarray:
    mat = np.asarray(state_matrix(rho), dtype=complex)
    check_dim(mat, e.dim, "state")
    return mat


def c_l1_povm(rho, e: Povm) -> MeasureResult:
    """sum_{i != j} ||A_i rho A_j^dagger||_tr."""
    mat = _operand(rho, e)
    total = 0.0
    for i, first in enumerate(e.kraus):
        for j, second in enumerate(e.kraus):
            if i != j:
                total += trace_norm(first @ mat @ dagger(second))
    return MeasureResult(value=clamp(total, DEFAULT_CLOSED_FORM_CLAMP))


def c_tsallis_povm(rho, e: Povm, alpha: float) -> MeasureResult:
    """
    [sum_i tr((A_i rho^alpha A_i^dagger)^{1/alpha}) - 1] / (alpha - 1).

    Raises:
        BadAlpha: If alpha is outside (0,1) U (1,2].
    """
    check_tsallis_alpha(alpha)
    powered = psd_power(_operand(rho, e), alpha)
    normalizer = float(sum(
        np.trace(
            psd_power(hermitian_part(op @ powered @ dagger(op)), 1.0 / alpha)
        ).real
        for op in e.kraus
    ))
    value = (normalizer - 1.0) / (alpha - 1.0)
    return MeasureResult(
        value=clamp(value, DEFAULT_CLOSED_FORM_CLAMP),
        certificate={"normalizer": normalizer},
    )


def c_rel_povm(rho, e: Povm) -> MeasureResult:
    """tr(rho log2 rho) - sum_i tr[(A_i rho A_i^dagger) log2(A_i rho A_i^dagger)]."""
    mat = _operand(rho, e)
    value = entropy_term(mat) - sum(
        entropy_term(hermitian_part(op @ mat @ dagger(op))) for op in e.kraus
    )
    return MeasureResult(value=clamp(value, DEFAULT_CLOSED_FORM_CLAMP))


def embedded_measure(
    name: str, rho, e: Povm, params: MeasureParams
) -> MeasureResult:
    state = embedded_state(_operand(rho, e), e)
    return block_measure(name, state, extension_for(e).pbar, params)


def c_trace_povm(
    rho, e: Povm, params: MeasureParams = MeasureParams()
) -> MeasureResult:
    """Modified trace norm of eps(rho) w.r.t. the register measurement."""
    return embedded_measure("trace", rho, e, params)


def c_weight_povm(
    rho, e: Povm, params: MeasureParams = MeasureParams()
) -> MeasureResult:
    """Coherence weight of eps(rho) w.r.t. the register measurement."""
    return embedded_measure("weight", rho, e, params)


def c_renyi_povm(
    rho, e: Povm, alpha: float, params: MeasureParams = MeasureParams()
) -> MeasureResult:
    """
    Sandwiched Renyi coherence of eps(rho) with kernel
    eps(rho^{(1-alpha)/(2 alpha)}).

    Raises:
        BadAlpha: If alpha is outside [1/2, 1).
        NotPSD: If the embedded kernel has an eigenvalue below -1e-9.
        SolverFailure: If Frank-Wolfe breaks down numerically.
    """
    check_renyi_alpha(alpha)
    mat = _operand(rho, e)
    kernel = embed(psd_power(mat, (1.0 - alpha) / (2.0 * alpha)), e).mat
    lowest = min_eigenvalue(kernel)
    if lowest < -DEFAULT_EMBED_PSD_TOL:
        raise NotPSD(f"Embedded kernel has eigenvalue {lowest:.3e}")
    return c_renyi_block(
        embedded_state(mat, e),
        extension_for(e).pbar,
        alpha,
        params,
        kernel=kernel,
    )


def povm_measure(
    name: str, rho, e: Povm, params: MeasureParams = MeasureParams()
) -> MeasureResult:
    """
    Evaluate a POVM measure by name on its default route.

    Raises:
        ValueError: For an unknown measure name.
    """
    dispatch: Dict[str, Callable[[], MeasureResult]] = {
        "l1": lambda: c_l1_povm(rho, e),
        "tsallis": lambda: c_tsallis_povm(rho, e, params.alpha),
        "rel": lambda: c_rel_povm(rho, e),
        "trace": lambda: c_trace_povm(rho, e, params),
        "weight": lambda: c_weight_povm(rho, e, params),
        "renyi": lambda: c_renyi_povm(rho, e, params.alpha, params),
    }
    if name not in dispatch:
        raise ValueError(f"Unknown measure {name!r}")
    return dispatch[name]()


def evaluate(request: PovmMeasureRequest) -> Dict[str, MeasureResult]:
    """
    Run a request on its route(s).

    Returns:
        Dict[str, MeasureResult]: Keyed by "direct" and/or "embedded". When
          both routes run and disagree by more than 1e-8 a warning is
          logged.
    """
    results: Dict[str, MeasureResult] = {}
    if request.route in ("direct", "both"):
        results["direct"] = povm_measure(
            request.measure, request.rho, request.povm, request.params
        )
    if request.route in ("embedded", "both"):
        if request.measure in CLOSED_FORM_MEASURES:
            results["embedded"] = embedded_measure(
                request.measure, request.rho, request.povm, request.params
            )
        else:
            results["embedded"] = povm_measure(
                request.measure, request.rho, request.povm, request.params
            )
    if len(results) == 2:
        gap = abs(results["direct"].value - results["embedded"].value)
        if gap > DEFAULT_ROUTE_TOL:
            logger.warning(
                "Direct and embedded %s differ by %.3e", request.measure, gap
            )
    return results
