"""
Randomized property suites.

Each suite draws independent trials; trial t uses the generator seeded by
SeedSequence([seed, t]), so a failing trial is replayed from (suite, seed,
trial) alone. Results are merged in trial order regardless of the number of
worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from povm_coherence.blockcoh import (
    CLOSED_FORM_MEASURES,
    MEASURE_NAMES,
    MeasureParams,
    block_measure,
    c_l1_block,
    c_rel_block,
    c_renyi_block,
    c_tsallis_block,
    tsallis_min_divergence,
)
from povm_coherence.decorators import measure_time
from povm_coherence.errors import CoherenceError
from povm_coherence.file_management import measurement_payload, state_payload
from povm_coherence.matcore import eigh, eigvalsh, psd_power, trace_norm
from povm_coherence.naimark import build_extension, lift_state
from povm_coherence.povmcoh import (
    DEFAULT_ROUTE_TOL,
    embedded_measure,
    povm_measure,
)
from povm_coherence.quantum import (
    BlockPartition,
    DensityMatrix,
    Povm,
    ProjectiveMeasurement,
    apply_channel,
    block_dephase,
    branches,
    direct_sum_state,
    fidelity,
    mixture,
    random_bi_channel,
    random_block_incoherent,
    random_density,
    random_povm,
    random_projective,
    random_unitary,
    sandwiched_renyi_divergence,
    standard_l1_coherence,
    standard_rel_coherence,
    standard_tsallis_coherence,
    tsallis_relative_entropy,
)


logger = logging.getLogger(__name__)

SUITES = ("matcore", "block", "povm", "naimark")
DEFAULT_TRIALS = 50
DEFAULT_DIM_MAX = 4
DEFAULT_POVM_DIM_MAX = 4
DEFAULT_WORKERS = 1
DEFAULT_BI_CHANNELS = 5
DEFAULT_BI_KRAUS = 2
DEFAULT_ORACLE_SAMPLES = 100
DEFAULT_LIMIT_STEP = 1e-4
DEFAULT_CONVERGENCE_RATE = 0.95
DEFAULT_FIDELITY_ALPHA = 0.5
DEFAULT_SOLVER_CERTIFICATE_TOL = 1e-6

CLOSED_TOL = {"zero": 1e-10, "mono": 1e-6, "convex": 1e-6, "additive": 1e-8}
SOLVER_TOL = {"zero": 1e-6, "mono": 1e-5, "convex": 1e-5, "additive": 1e-5}
B3_FATAL = ("l1", "tsallis")


@dataclass
class CheckResult:
    """
    One property evaluated on one trial.

    Attributes:
        suite (str): Suite name.
        name (str): Property name, e.g. "B2[weight]".
        trial (int): Trial index.
        excess (float): How far the property is from failing; it holds when
          ``excess <= tol``.
        tol (float): Allowed excess.
        fatal (bool): Whether a failure fails the run.
        instance (Dict, optional): Replay data, attached on failure.
    """
    suite: str
    name: str
    trial: int
    excess: float
    tol: float
    fatal: bool = True
    instance: Dict | None = None

    @property
    def passed(self) -> bool:
        return bool(self.excess <= self.tol)

    @property
    def margin(self) -> float:
        return float(self.tol - self.excess)


@dataclass
class VerificationReport:
    seed: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks if check.fatal)

    def failures(self, fatal_only: bool = True) -> List[CheckResult]:
        return [
            check for check in self.checks
            if not check.passed and (check.fatal or not fatal_only)
        ]

    def summary(self) -> pd.DataFrame:
        """Per-property pass counts and worst margins."""
        columns = ["suite", "property", "fatal", "trials", "passed", "worst_margin"]
        if not self.checks:
            return pd.DataFrame(columns=columns)
        frame = pd.DataFrame(
            {
                "suite": [c.suite for c in self.checks],
                "property": [c.name for c in self.checks],
                "fatal": [c.fatal for c in self.checks],
                "passed": [c.passed for c in self.checks],
                "margin": [c.margin for c in self.checks],
            }
        )
        table = (
            frame.groupby(["suite", "property", "fatal"], sort=False)
            .agg(
                trials=("passed", "size"),
                passed=("passed", "sum"),
                worst_margin=("margin", "min"),
            )
            .reset_index()
        )
        table["passed"] = table["passed"].astype(int)
        return table[columns]

    def counterexamples(self) -> List[Dict]:
        """Replayable JSON records of the fatal failures."""
        return [
            {
                "suite": check.suite,
                "property": check.name,
                "trial": check.trial,
                "seed": self.seed,
                "excess": check.excess,
                "tol": check.tol,
                "instance": check.instance,
            }
            for check in self.failures()
        ]


# --- inequality margins ----------------------------------------------------------

def holder_margin(a: np.ndarray, b: np.ndarray, alpha: float) -> float:
    """
    Excess of the Holder inequality for positive vectors,
    sum a_i b_i <= (sum a_i^{1/alpha})^alpha (sum b_i^{1/(1-alpha)})^{1-alpha}
    for alpha in (0, 1), reversed for alpha > 1. Non-positive when it holds.
    """
    lhs = float(np.sum(a * b))
    rhs = float(
        np.sum(a ** (1.0 / alpha)) ** alpha
        * np.sum(b ** (1.0 / (1.0 - alpha))) ** (1.0 - alpha)
    )
    return lhs - rhs if alpha < 1.0 else rhs - lhs


def eigen_trace_margin(m: np.ndarray, n: np.ndarray) -> float:
    """
    Excess of the eigenvalue sandwich for PSD M, N:
    sum_j l_{r+1-j}(M) l_j(N) <= tr(MN) <= sum_j l_j(M) l_j(N).
    """
    first = eigvalsh(m)
    second = eigvalsh(n)
    product = float(np.trace(m @ n).real)
    upper = float(np.dot(first, second))
    lower = float(np.dot(first[::-1], second))
    return max(lower - product, product - upper)


# --- random instance helpers --------------------------------------------------------

def _random_block_dims(rng: np.random.Generator, dim: int) -> List[int]:
    n = int(rng.integers(2, dim + 1))
    cuts = np.sort(rng.choice(np.arange(1, dim), size=n - 1, replace=False))
    edges = [0, *[int(c) for c in cuts], dim]
    return [b - a for a, b in zip(edges, edges[1:])]


def _tsallis_alpha(rng: np.random.Generator) -> float:
    if rng.random() < 0.5:
        return float(rng.uniform(0.1, 0.95))
    return float(rng.uniform(1.05, 2.0))


def _renyi_alpha(rng: np.random.Generator) -> float:
    return float(rng.uniform(0.5, 0.8))


def _params_for(name: str, base: MeasureParams, alphas: Dict[str, float]):
    if name in alphas:
        return replace(base, alpha=alphas[name])
    return base


def _closed(name: str) -> bool:
    return name in CLOSED_FORM_MEASURES


def _compressed_state(rng, projector: np.ndarray, dim: int) -> DensityMatrix:
    state = random_density(dim, seed=rng).mat
    return DensityMatrix(projector @ state @ projector, normalize=True)


class _Trial:
    """Collects the checks of one trial."""

    def __init__(self, suite: str, index: int):
        self.suite = suite
        self.index = index
        self.checks: List[CheckResult] = []
        self.instance: Dict = {}

    def check(self, name: str, excess: float, tol: float, fatal: bool = True):
        excess = float(excess)
        if np.isnan(excess):
            excess = np.inf
        self.checks.append(
            CheckResult(self.suite, name, self.index, excess, tol, fatal)
        )

    def finish(self) -> List[CheckResult]:
        for check in self.checks:
            if not check.passed:
                check.instance = self.instance
        return self.checks


# --- suites -------------------------------------------------------------------------

def _matcore_trial(trial: _Trial, rng, dim_max: int, params: MeasureParams):
    # Eigendecomposition and trace inequalities
    dim = int(rng.integers(2, max(dim_max, 2) + 1))
    trial.instance = {"dim": dim}

    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (g + g.conj().T)
    system = eigh(h)
    scale = max(1.0, float(np.linalg.norm(h)))
    trial.check("eigh_reconstruction", np.linalg.norm(system.rebuild() - h) / scale, 1e-10)

    first = random_density(dim, seed=rng).mat * float(rng.uniform(0.5, 3.0))
    second = random_density(dim, seed=rng).mat * float(rng.uniform(0.5, 3.0))
    trial.check("eigen_trace_sandwich", eigen_trace_margin(first, second), 1e-9)

    a = rng.uniform(0.01, 2.0, size=dim)
    b = rng.uniform(0.01, 2.0, size=dim)
    below = float(rng.uniform(0.05, 0.95))
    above = float(rng.uniform(1.05, 3.0))
    trial.check("holder[alpha<1]", holder_margin(a, b, below), 1e-9)
    trial.check("holder[alpha>1]", holder_margin(a, b, above), 1e-9)

    u = random_unitary(dim, seed=rng)
    w = random_unitary(dim, seed=rng)
    norm = trace_norm(g)
    trial.check(
        "trace_norm_unitary_invariance",
        abs(trace_norm(u @ g @ w) - norm) / max(1.0, norm),
        1e-10,
    )

    full_rank = random_density(dim, seed=rng).mat
    s, t = (float(x) for x in rng.uniform(0.1, 1.5, size=2))
    product = psd_power(full_rank, s) @ psd_power(full_rank, t)
    target = psd_power(full_rank, s + t)
    trial.check(
        "power_additivity",
        np.linalg.norm(product - target) / max(1.0, float(np.linalg.norm(target))),
        1e-8,
    )


def _block_trial(trial: _Trial, rng, dim_max: int, params: MeasureParams):
    # Draw the random instance
    dim = int(rng.integers(2, max(dim_max, 2) + 1))
    blocks = random_projective(dim, _random_block_dims(rng, dim), seed=rng)
    rho = random_density(dim, seed=rng)
    alphas = {"tsallis": _tsallis_alpha(rng), "renyi": _renyi_alpha(rng)}
    channels = [
        random_bi_channel(blocks, DEFAULT_BI_KRAUS, seed=rng)
        for _ in range(DEFAULT_BI_CHANNELS)
    ]
    components = [random_density(dim, seed=rng) for _ in range(3)]
    weights = rng.dirichlet(np.ones(3))

    first_size = int(rng.integers(1, blocks.n))
    first_group = tuple(
        sorted(int(k) for k in rng.choice(blocks.n, size=first_size, replace=False))
    )
    partition = BlockPartition(blocks, first_group)
    p1 = float(rng.uniform(0.1, 0.9))
    part_one = _compressed_state(rng, partition.projector(partition.first_group), dim)
    part_two = _compressed_state(rng, partition.projector(partition.second_group), dim)
    summed = direct_sum_state(p1, part_one, 1.0 - p1, part_two, partition)

    trial.instance = {
        "state": state_payload(rho),
        "measurement": measurement_payload(blocks),
        "alphas": alphas,
    }

    # Axioms B1-B5 for every measure
    dephased = block_dephase(rho, blocks)
    results = {}
    for name in MEASURE_NAMES:
        local = _params_for(name, params, alphas)
        tol = CLOSED_TOL if _closed(name) else SOLVER_TOL

        def value(state) -> float:
            return block_measure(name, state, blocks, local).value

        base_result = block_measure(name, rho, blocks, local)
        results[name] = base_result
        base = base_result.value
        trial.check(f"B1[{name}]", -base, 1e-9)
        trial.check(f"B1_dephased[{name}]", value(dephased), tol["zero"])
        if not _closed(name):
            trial.check(
                f"converged[{name}]",
                0.0 if base_result.diagnostics.converged else 1.0,
                0.0,
                fatal=False,
            )

        trial.check(
            f"B2[{name}]",
            max(value(apply_channel(ch, rho)) - base for ch in channels),
            tol["mono"],
        )
        averaged = sum(
            outcome.probability * value(outcome.state)
            for outcome in branches(channels[0], rho)
        )
        trial.check(
            f"B3[{name}]", averaged - base, tol["mono"], fatal=name in B3_FATAL
        )

        mixed = value(mixture(weights, components))
        trial.check(
            f"B4[{name}]",
            mixed - sum(q * value(c) for q, c in zip(weights, components)),
            tol["convex"],
        )
        trial.check(
            f"B5[{name}]",
            abs(value(summed) - p1 * value(part_one) - (1.0 - p1) * value(part_two)),
            tol["additive"],
        )

    # The dephased state is feasible for the trace-norm problem
    trial.check(
        "trace_bound",
        results["trace"].value - trace_norm(rho.mat - dephased.mat),
        DEFAULT_SOLVER_CERTIFICATE_TOL,
    )

    _tsallis_checks(trial, rng, rho, blocks, alphas["tsallis"])
    _renyi_checks(trial, rho, blocks, results["renyi"], alphas["renyi"], params)
    _divergence_checks(trial, rng, rho, blocks, channels[0], alphas)

    # Rank-1 blocks reduce to the basis measures
    basis = ProjectiveMeasurement.computational(dim)
    trial.check(
        "rank1[l1]",
        abs(c_l1_block(rho, basis).value - standard_l1_coherence(rho)),
        1e-8,
    )
    trial.check(
        "rank1[rel]",
        abs(c_rel_block(rho, basis).value - standard_rel_coherence(rho)),
        1e-8,
    )
    trial.check(
        "rank1[tsallis]",
        abs(
            c_tsallis_block(rho, basis, alphas["tsallis"]).value
            - standard_tsallis_coherence(rho, alphas["tsallis"])
        ),
        1e-8,
    )


def _tsallis_checks(trial: _Trial, rng, rho, blocks, alpha: float):
    result = c_tsallis_block(rho, blocks, alpha)
    optimum = result.certificate["sigma"]
    closed = tsallis_min_divergence(rho, blocks, alpha)
    direct = tsallis_relative_entropy(rho, optimum, alpha)
    trial.check("tsallis_closed_form", abs(direct - closed), 1e-8)
    worst = max(
        closed - tsallis_relative_entropy(rho, random_block_incoherent(blocks, seed=rng), alpha)
        for _ in range(DEFAULT_ORACLE_SAMPLES)
    )
    trial.check("tsallis_optimality", worst, 1e-9)

    relative = c_rel_block(rho, blocks).value
    for step in (DEFAULT_LIMIT_STEP, -DEFAULT_LIMIT_STEP):
        near = c_tsallis_block(rho, blocks, 1.0 + step).value / np.log(2.0)
        trial.check("tsallis_rel_limit", abs(near - relative), 1e-3)


def _renyi_checks(trial: _Trial, rho, blocks, result, alpha: float, params):
    """
    The certificate sigma* reproduces the value: 1 - 2^{-D(sigma*||rho)} with
    the sandwiched divergence, and 1 - F(rho, sigma*)^2 at order 1/2.
    """
    sigma = result.certificate["sigma"]
    divergence = sandwiched_renyi_divergence(sigma, rho, alpha)
    trial.check(
        "renyi_certificate",
        abs(result.value - (1.0 - 2.0 ** (-divergence))),
        1e-8,
    )

    half = c_renyi_block(rho, blocks, DEFAULT_FIDELITY_ALPHA, params)
    trial.check(
        "converged[renyi_half]",
        0.0 if half.diagnostics.converged else 1.0,
        0.0,
        fatal=False,
    )
    trial.check(
        "renyi_half_fidelity",
        abs(half.value - (1.0 - fidelity(rho, half.certificate["sigma"]) ** 2)),
        1e-8,
    )


def _divergence_checks(trial: _Trial, rng, rho, blocks, channel, alphas):
    """Non-negativity and data processing of the two divergences."""
    sigma = random_block_incoherent(blocks, seed=rng)
    rho_out = apply_channel(channel, rho)
    sigma_out = apply_channel(channel, sigma)

    order = alphas["tsallis"]
    before = tsallis_relative_entropy(rho, sigma, order)
    after = tsallis_relative_entropy(rho_out, sigma_out, order)
    trial.check("tsallis_divergence_nonnegative", -before, 1e-9)
    trial.check("tsallis_data_processing", after - before, 1e-8)

    # Sandwiched order with the state in the second slot, as in the measure
    order = alphas["renyi"]
    before = sandwiched_renyi_divergence(sigma, rho, order)
    after = sandwiched_renyi_divergence(sigma_out, rho_out, order)
    trial.check("renyi_divergence_nonnegative", -before, 1e-9)
    trial.check("renyi_data_processing", after - before, 1e-8)


def _povm_trial(trial: _Trial, rng, dim_max: int, params: MeasureParams):
    # Draw the instance and a unitary gauge of its Kraus operators
    dim = int(rng.integers(2, min(max(dim_max, 2), DEFAULT_POVM_DIM_MAX) + 1))
    n = int(rng.integers(1, DEFAULT_POVM_DIM_MAX + 1))
    e = random_povm(dim, n, seed=rng)
    gauged = e.with_gauge([random_unitary(dim, seed=rng) for _ in range(n)])
    rho = random_density(dim, seed=rng)
    alphas = {"tsallis": _tsallis_alpha(rng), "renyi": _renyi_alpha(rng)}
    components = [random_density(dim, seed=rng) for _ in range(3)]
    weights = rng.dirichlet(np.ones(3))
    trivial = Povm.trivial(dim)

    trial.instance = {
        "state": state_payload(rho),
        "measurement": measurement_payload(e),
        "alphas": alphas,
    }

    # P1, gauge invariance, P4 and route agreement for every measure
    values = {}
    for name in MEASURE_NAMES:
        local = _params_for(name, params, alphas)
        tol = CLOSED_TOL if _closed(name) else SOLVER_TOL

        def value(state, povm=e) -> float:
            return povm_measure(name, state, povm, local).value

        base_result = povm_measure(name, rho, e, local)
        base = values[name] = base_result.value
        trial.check(f"P1[{name}]", -base, 1e-9)
        trial.check(f"P1_trivial[{name}]", value(rho, trivial), tol["zero"])
        if not _closed(name):
            trial.check(
                f"converged[{name}]",
                0.0 if base_result.diagnostics.converged else 1.0,
                0.0,
                fatal=False,
            )
        trial.check(f"gauge[{name}]", abs(value(rho, gauged) - base), 1e-6)
        mixed = value(mixture(weights, components))
        trial.check(
            f"P4[{name}]",
            mixed - sum(q * value(c) for q, c in zip(weights, components)),
            tol["convex"],
        )
        if _closed(name):
            embedded = embedded_measure(name, rho, e, local).value
            trial.check(f"routes[{name}]", abs(embedded - base), DEFAULT_ROUTE_TOL)

    # rho (x) |0><0| measured by the dilated projectors V^dagger Pbar_i V,
    # which depend on the whole unitary and not only on its first columns
    standard = build_extension(e)
    other = build_extension(e, completion="random", seed=int(rng.integers(2**31)))
    lifted = DensityMatrix(lift_state(rho, n))
    for name in CLOSED_FORM_MEASURES:
        local = _params_for(name, params, alphas)
        first = block_measure(name, lifted, standard.dilated, local).value
        second = block_measure(name, lifted, other.dilated, local).value
        trial.check(f"completion[{name}]", abs(first - second), 1e-8)
        trial.check(f"dilated[{name}]", abs(first - values[name]), 1e-8)

    basis = Povm.from_projective(ProjectiveMeasurement.computational(dim))
    trial.check(
        "rank1[l1]",
        abs(povm_measure("l1", rho, basis).value - standard_l1_coherence(rho)),
        1e-8,
    )


def _naimark_trial(trial: _Trial, rng, dim_max: int, params: MeasureParams):
    dim = int(rng.integers(1, min(max(dim_max, 1), DEFAULT_POVM_DIM_MAX) + 1))
    n = int(rng.integers(1, DEFAULT_POVM_DIM_MAX + 1))
    e = random_povm(dim, n, seed=rng)
    states = [random_density(dim, seed=rng) for _ in range(3)]
    trial.instance = {"measurement": measurement_payload(e)}

    # Every invariant of the standard completion
    residuals = build_extension(e).residuals(states)
    limits = {
        "unitarity": 1e-10,
        "kraus_match": 1e-10,
        "column_orthogonality": 1e-9,
        "row_orthogonality": 1e-9,
        "dilated_projector": 1e-9,
        "statistics": 1e-9,
        "embedding_identity": 1e-9,
    }
    for key, limit in limits.items():
        trial.check(key, residuals[key], limit)
    trial.check("embedding_psd", -residuals["embedding_min_eig"], 1e-9)


def convergence_rates(
    checks: Sequence[CheckResult], rate: float = DEFAULT_CONVERGENCE_RATE
) -> List[CheckResult]:
    """
    One fatal check per suite and solver measure: the share of runs whose
    solver certified convergence must reach ``rate``. Non-converged runs
    stay visible as advisory ``converged[...]`` checks.
    """
    flags: Dict[Tuple[str, str], List[bool]] = {}
    for check in checks:
        if check.name.startswith("converged["):
            flags.setdefault((check.suite, check.name), []).append(check.passed)
    rates = []
    for (suite, name), passed in flags.items():
        share = sum(passed) / len(passed)
        rates.append(
            CheckResult(
                suite,
                name.replace("converged", "convergence_rate", 1),
                -1,
                excess=rate - share,
                tol=0.0,
            )
        )
    return rates


SUITE_TRIALS: Dict[str, Callable] = {
    "matcore": _matcore_trial,
    "block": _block_trial,
    "povm": _povm_trial,
    "naimark": _naimark_trial,
}


def run_trial(
    suite: str,
    index: int,
    seed: int,
    dim_max: int = DEFAULT_DIM_MAX,
    params: MeasureParams = MeasureParams(),
) -> List[CheckResult]:
    """
    Run trial ``index`` of a suite with the generator SeedSequence([seed, index]).

    A library error inside the trial is recorded as a failed "error" check.
    """
    if suite not in SUITE_TRIALS:
        raise ValueError(f"Unknown suite {suite!r}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    trial = _Trial(suite, index)
    try:
        SUITE_TRIALS[suite](trial, rng, dim_max, params)
    except CoherenceError as error:
        logger.warning("%s trial %d raised %s: %s", suite, index,
                       type(error).__name__, error)
        trial.instance.setdefault("error", f"{type(error).__name__}: {error}")
        trial.check("error", np.inf, 0.0)
    return trial.finish()


@measure_time
def run_suites(
    suites: Sequence[str],
    trials: int = DEFAULT_TRIALS,
    dim_max: int = DEFAULT_DIM_MAX,
    seed: int = 0,
    workers: int = DEFAULT_WORKERS,
    fail_fast: bool = False,
    params: MeasureParams = MeasureParams(),
) -> VerificationReport:
    """
    Run randomized property suites.

    Parameters:
        suites (Sequence[str]): Any of matcore, block, povm, naimark.
        trials (int, optional): Trials per suite, at least 1.
        dim_max (int, optional): Largest dimension drawn, at least 2.
        seed (int, optional): Base seed.
        workers (int, optional): Worker threads.
        fail_fast (bool, optional): Stop after the first trial with a fatal
          failure.
        params (MeasureParams, optional): Solver settings.

    Returns:
        VerificationReport: All checks in suite then trial order, followed
          by one convergence-rate check per suite and solver measure.

    Raises:
        ValueError: For invalid counts or an unknown suite.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if dim_max < 2:
        raise ValueError("dim_max must be at least 2")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    unknown = [suite for suite in suites if suite not in SUITE_TRIALS]
    if unknown:
        raise ValueError(f"Unknown suites {unknown}")

    report = VerificationReport(seed=seed)
    jobs: List[Tuple[str, int]] = [
        (suite, index) for suite in suites for index in range(trials)
    ]

    def failed(checks: List[CheckResult]) -> bool:
        return any(c.fatal and not c.passed for c in checks)

    if workers == 1:
        for suite, index in jobs:
            checks = run_trial(suite, index, seed, dim_max, params)
            report.checks.extend(checks)
            if fail_fast and failed(checks):
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(run_trial, suite, index, seed, dim_max, params)
                for suite, index in jobs
            ]
            for future in futures:
                checks = future.result()
                report.checks.extend(checks)
                if fail_fast and failed(checks):
                    for pending in futures:
                        pending.cancel()
                    break

    report.checks.extend(convergence_rates(report.checks))
    for suite in suites:
        count = sum(1 for c in report.checks if c.suite == suite and not c.passed and c.fatal)
        logger.info("Suite %s finished with %d fatal failures", suite, count)
    return report
