"""Finite version-space laboratory for the refinement-safety theorems.

Models are finite universes of directions D, codes C, and counterexamples E
with total Pass and Cons tables plus an observation map. All set algebra is
done on integer bitmasks over D, so every check is exact; the only floating
point in this module is the Monte Carlo survival rate.

Histories are ordered lists of (code, counterexample) steps where each
counterexample belongs to the code's observable set. The same intersection
underlies both the fixed-target version space (all history codes drawn from
the initial set) and the drifting linear-refinement variant (codes change
between steps); the drift analysis quantifies how the latter can collapse.
"""

from __future__ import annotations

import itertools
import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence


class PremiseUnmetError(ValueError):
    pass


@dataclass
class VersionSpaceModel:
    """Finite model: direction/code/counterexample universes and truth tables.

    ``passes`` holds the (code, direction) pairs with Pass = 1; ``consistent``
    holds the (code, direction, counterexample) triples with Cons = 1; ``obs``
    maps each code to the counterexamples that can actually arise from it.
    Treated as immutable after construction.
    """

    directions: tuple[str, ...]
    codes: tuple[str, ...]
    counterexamples: tuple[str, ...]
    passes: frozenset[tuple[str, str]]
    consistent: frozenset[tuple[str, str, str]]
    obs: dict[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        if not (self.directions and self.codes and self.counterexamples):
            raise ValueError("all universes must be non-empty")
        self._dindex = {d: i for i, d in enumerate(self.directions)}
        self.full_mask = (1 << len(self.directions)) - 1
        self._pass_masks: dict[str, int] = {}
        self._cons_masks: dict[tuple[str, str], int] = {}
        for c in self.codes:
            self._pass_masks[c] = self._mask_of(d for d in self.directions if (c, d) in self.passes)
            for e in self.counterexamples:
                self._cons_masks[(c, e)] = self._mask_of(
                    d for d in self.directions if (c, d, e) in self.consistent
                )
        for c, es in self.obs.items():
            self._check_code(c)
            for e in es:
                self._check_counterexample(e)

    def _mask_of(self, ds: Iterable[str]) -> int:
        mask = 0
        for d in ds:
            mask |= 1 << self._dindex[d]
        return mask

    def ids(self, mask: int) -> frozenset[str]:
        return frozenset(d for d, i in self._dindex.items() if mask >> i & 1)

    def _check_code(self, c: str) -> None:
        if c not in self._pass_masks:
            raise KeyError(f"unknown code {c!r}")

    def _check_counterexample(self, e: str) -> None:
        if e not in self.counterexamples:
            raise KeyError(f"unknown counterexample {e!r}")

    def pass_mask(self, c: str) -> int:
        self._check_code(c)
        return self._pass_masks[c]

    def cons_mask(self, c: str, e: str) -> int:
        self._check_code(c)
        self._check_counterexample(e)
        return self._cons_masks[(c, e)]

    def obs_of(self, c: str) -> tuple[str, ...]:
        self._check_code(c)
        return self.obs.get(c, ())

    def mu(self, mask: int) -> Fraction:
        """Cardinality-proportion measure |S| / |D|."""
        return Fraction(mask.bit_count(), len(self.directions))

    def to_dict(self) -> dict:
        return {
            "directions": list(self.directions),
            "codes": list(self.codes),
            "counterexamples": list(self.counterexamples),
            "pass": {c: sorted(d for d in self.directions if (c, d) in self.passes) for c in self.codes},
            "cons": {
                c: {e: sorted(d for d in self.directions if (c, d, e) in self.consistent)
                    for e in self.counterexamples}
                for c in self.codes
            },
            "obs": {c: list(es) for c, es in self.obs.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VersionSpaceModel":
        passes = frozenset((c, dd) for c, ds in d["pass"].items() for dd in ds)
        consistent = frozenset(
            (c, dd, e) for c, per_e in d["cons"].items() for e, ds in per_e.items() for dd in ds
        )
        return cls(
            directions=tuple(d["directions"]),
            codes=tuple(d["codes"]),
            counterexamples=tuple(d["counterexamples"]),
            passes=passes,
            consistent=consistent,
            obs={c: tuple(es) for c, es in d["obs"].items()},
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "VersionSpaceModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class History:
    """Ordered (code, counterexample) steps; each e must be observable from c."""

    steps: tuple[tuple[str, str], ...]

    def validate(self, model: VersionSpaceModel) -> None:
        for c, e in self.steps:
            if e not in model.obs_of(c):
                raise ValueError(f"counterexample {e!r} is not observable from code {c!r}")


@dataclass(frozen=True)
class DriftMeasures:
    alpha: Fraction
    delta_drift: Fraction
    epsilon: Fraction
    w_max: Optional[Fraction]  # None when delta_drift == 0 (unbounded window)

    @classmethod
    def compute(cls, alpha: Fraction, delta_drift: Fraction, epsilon: Fraction) -> "DriftMeasures":
        if delta_drift == 0:
            w_max = None
        else:
            w_max = 1 + (alpha - epsilon) / delta_drift
        return cls(alpha=alpha, delta_drift=delta_drift, epsilon=epsilon, w_max=w_max)


# ---------------------------------------------------------------------------
# Elementary set operations.
# ---------------------------------------------------------------------------


def succeeding_directions(model: VersionSpaceModel, c: str) -> frozenset[str]:
    """Directions that succeed for code c."""
    return model.ids(model.pass_mask(c))


def consistent_directions(model: VersionSpaceModel, c: str, e: str) -> frozenset[str]:
    """Directions consistent with observation e on code c."""
    return model.ids(model.cons_mask(c, e))


def version_space(model: VersionSpaceModel, history: History) -> frozenset[str]:
    """Directions consistent with every observation so far; D for empty history."""
    return model.ids(_version_space_mask(model, history.steps))


def _version_space_mask(model: VersionSpaceModel, steps: Sequence[tuple[str, str]]) -> int:
    mask = model.full_mask
    for c, e in steps:
        mask &= model.cons_mask(c, e)
    return mask


def global_star(model: VersionSpaceModel) -> frozenset[str]:
    """Directions that succeed for at least one code."""
    mask = 0
    for c in model.codes:
        mask |= model.pass_mask(c)
    return model.ids(mask)


def basin(model: VersionSpaceModel, d: str) -> frozenset[str]:
    """Codes for which direction d acts correctly."""
    if d not in model.directions:
        raise KeyError(f"unknown direction {d!r}")
    return frozenset(c for c in model.codes if (c, d) in model.passes)


def _stable_star_mask(model: VersionSpaceModel, c_init: Sequence[str]) -> int:
    star = 0
    for c in model.codes:
        star |= model.pass_mask(c)
    mask = star
    for c in c_init:
        for e in model.obs_of(c):
            mask &= model.cons_mask(c, e)
    return mask


def stable_star(model: VersionSpaceModel, c_init: Sequence[str]) -> frozenset[str]:
    """Succeeding directions that survive every feasible observation from c_init."""
    if not c_init:
        raise ValueError("c_init must be non-empty")
    for c in c_init:
        model._check_code(c)
    return model.ids(_stable_star_mask(model, c_init))


def check_local_soundness(model: VersionSpaceModel, d_dagger: str, c_init: Sequence[str]) -> bool:
    """Observations from codes in d_dagger's basin never eliminate d_dagger."""
    if d_dagger not in model.directions:
        raise KeyError(f"unknown direction {d_dagger!r}")
    bit = 1 << model._dindex[d_dagger]
    for c in c_init:
        if not (model.pass_mask(c) & bit):
            continue
        for e in model.obs_of(c):
            if not (model.cons_mask(c, e) & bit):
                return False
    return True


# ---------------------------------------------------------------------------
# Safety checkers.
# ---------------------------------------------------------------------------


@dataclass
class SafetyReport:
    premise_met: bool
    violations: list[str] = field(default_factory=list)
    histories_checked: int = 0
    prefixes_checked: int = 0

    @property
    def ok(self) -> bool:
        return self.premise_met and not self.violations

    def to_dict(self) -> dict:
        return {
            "premise_met": self.premise_met,
            "violations": self.violations,
            "histories_checked": self.histories_checked,
            "prefixes_checked": self.prefixes_checked,
        }


def check_safety(
    model: VersionSpaceModel, c_init: Sequence[str], histories: Iterable[History]
) -> SafetyReport:
    """Check monotone shrinking, retention of the stable set, and
    non-emptiness of the version space over every history prefix."""
    stab = _stable_star_mask(model, c_init)
    if stab == 0:
        return SafetyReport(premise_met=False)
    report = SafetyReport(premise_met=True)
    for history in histories:
        history.validate(model)
        for c, e in history.steps:
            if c not in c_init:
                raise ValueError(f"history code {c!r} is not an initial code")
        report.histories_checked += 1
        prev = model.full_mask
        for t in range(1, len(history.steps) + 1):
            cur = _version_space_mask(model, history.steps[:t])
            report.prefixes_checked += 1
            prefix = history.steps[:t]
            if cur & ~prev:
                report.violations.append(f"monotonicity broken at prefix {prefix}")
            if stab & ~cur:
                report.violations.append(f"stable direction eliminated at prefix {prefix}")
            if cur == 0:
                report.violations.append(f"version space empty at prefix {prefix}")
            prev = cur
    return report


def check_single_code_safety(
    model: VersionSpaceModel, c_f: str, histories: Iterable[History]
) -> SafetyReport:
    """Single fixed initial code: the retained set is the code's own
    succeeding directions; the premise is that every observable
    counterexample keeps all of them (and that the set is non-empty)."""
    succeed = model.pass_mask(c_f)
    if succeed == 0:
        return SafetyReport(premise_met=False)
    for e in model.obs_of(c_f):
        if succeed & ~model.cons_mask(c_f, e):
            return SafetyReport(premise_met=False)
    report = SafetyReport(premise_met=True)
    for history in histories:
        history.validate(model)
        for c, _ in history.steps:
            if c != c_f:
                raise ValueError("single-code history must only use the fixed code")
        report.histories_checked += 1
        prev = model.full_mask
        for t in range(1, len(history.steps) + 1):
            cur = _version_space_mask(model, history.steps[:t])
            report.prefixes_checked += 1
            prefix = history.steps[:t]
            if cur & ~prev:
                report.violations.append(f"monotonicity broken at prefix {prefix}")
            if succeed & ~cur:
                report.violations.append(f"succeeding direction eliminated at prefix {prefix}")
            if cur == 0:
                report.violations.append(f"version space empty at prefix {prefix}")
            prev = cur
    return report


# ---------------------------------------------------------------------------
# Discriminative power of the initial-code set.
# ---------------------------------------------------------------------------


def _u_mask(model: VersionSpaceModel, b: Sequence[str]) -> int:
    mask = model.full_mask
    for c in b:
        for e in model.obs_of(c):
            mask &= model.cons_mask(c, e)
    return mask


def discriminative_U(model: VersionSpaceModel, b: Sequence[str]) -> frozenset[str]:
    """Directions no realized observation from codes in b can eliminate."""
    if not b:
        raise ValueError("b must be non-empty")
    for c in b:
        model._check_code(c)
    return model.ids(_u_mask(model, b))


def surviving_pairs(
    model: VersionSpaceModel, c_init: Sequence[str], b: Sequence[str]
) -> frozenset[tuple[str, str]]:
    """Candidate (code, direction) pairs that can remain after exhausting
    all observations from b."""
    u = discriminative_U(model, b)
    return frozenset((c, d) for c in c_init for d in u)


def check_discriminative(model: VersionSpaceModel, c_init: Sequence[str]) -> SafetyReport:
    """All nonempty nested subset pairs B1 <= B2 of the initial codes:
    U shrinks, the stable set survives, and nothing collapses to empty."""
    stab = _stable_star_mask(model, c_init)
    if stab == 0:
        return SafetyReport(premise_met=False)
    report = SafetyReport(premise_met=True)
    codes = list(c_init)
    subsets = [
        s for r in range(1, len(codes) + 1) for s in itertools.combinations(codes, r)
    ]
    u_masks = {s: _u_mask(model, s) for s in subsets}
    for b1 in subsets:
        for b2 in subsets:
            if not set(b1) <= set(b2):
                continue
            report.prefixes_checked += 1
            u1, u2 = u_masks[b1], u_masks[b2]
            if u2 & ~u1:
                report.violations.append(f"U({b2}) not within U({b1})")
            if stab & ~u2:
                report.violations.append(f"stable set eliminated by U({b2})")
            if u2 == 0:
                report.violations.append(f"U({b2}) is empty")
            # Z-infinity = c_init x U; inclusion and non-emptiness follow the
            # same way but are asserted on the literal products.
            z1 = surviving_pairs(model, codes, b1)
            z2 = surviving_pairs(model, codes, b2)
            if not z2 <= z1:
                report.violations.append(f"pair set for {b2} not within pair set for {b1}")
            if not z2:
                report.violations.append(f"pair set for {b2} is empty")
    return report


def find_elimination_witness(
    model: VersionSpaceModel, c_init: Sequence[str], b1: Sequence[str], b2: Sequence[str]
) -> Optional[dict]:
    """For strictly shrinking U(B1) > U(B2), exhibit a direction eliminated
    only by the extra codes, the eliminating (code, observation), and verify
    the stable set survives that observation."""
    u1 = _u_mask(model, b1)
    u2 = _u_mask(model, b2)
    removed = u1 & ~u2
    if not removed:
        return None
    stab = _stable_star_mask(model, c_init)
    for d in model.ids(removed):
        bit = 1 << model._dindex[d]
        for b in b2:
            if b in set(b1):
                continue
            for e in model.obs_of(b):
                cons = model.cons_mask(b, e)
                if not (cons & bit) and not (stab & ~cons):
                    return {"direction": d, "code": b, "counterexample": e}
    return None


# ---------------------------------------------------------------------------
# Survival probability of a locally sound direction (Monte Carlo).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    """Initial-code sampler: each draw lands in the basin of the reference
    direction with probability ``in_basin_prob``, uniformly within it."""

    model: VersionSpaceModel
    in_basin_prob: float


@dataclass(frozen=True)
class SurvivalEstimate:
    empirical: float
    bound_union: float  # 1 - m * delta
    bound_independent: float  # (1 - delta) ** m
    trials: int


def survival_probability(
    spec: GeneratorSpec, d_dagger: str, m: int, delta: float, trials: int, seed: int
) -> SurvivalEstimate:
    """Estimate the probability that d_dagger survives every observation from
    m independently drawn initial codes, alongside both analytic bounds."""
    model = spec.model
    if spec.in_basin_prob < 1 - delta:
        raise ValueError("generator marginal below 1 - delta")
    if not check_local_soundness(model, d_dagger, model.codes):
        raise ValueError("local soundness does not hold for d_dagger")
    basin_codes = sorted(basin(model, d_dagger))
    if not basin_codes:
        raise ValueError("d_dagger has an empty basin")
    other_codes = [c for c in model.codes if c not in set(basin_codes)]
    bit = 1 << model._dindex[d_dagger]
    rng = random.Random(seed)
    hits = 0
    for _ in range(trials):
        survived = True
        for _ in range(m):
            if other_codes and rng.random() >= spec.in_basin_prob:
                c = other_codes[rng.randrange(len(other_codes))]
            else:
                c = basin_codes[rng.randrange(len(basin_codes))]
            for e in model.obs_of(c):
                if not (model.cons_mask(c, e) & bit):
                    survived = False
                    break
            if not survived:
                break
        if survived:
            hits += 1
    return SurvivalEstimate(
        empirical=hits / trials,
        bound_union=1 - m * delta,
        bound_independent=(1 - delta) ** m,
        trials=trials,
    )


# ---------------------------------------------------------------------------
# Linear refinement: drifting codes and windowed version spaces.
# ---------------------------------------------------------------------------


def linear_version_space(model: VersionSpaceModel, history: History) -> frozenset[str]:
    """Intersection of the per-step constraint sets of a drifting history."""
    history.validate(model)
    return model.ids(_version_space_mask(model, history.steps))


def windowed_version_space(model: VersionSpaceModel, history: History, w: int) -> frozenset[str]:
    """Intersection over only the most recent w steps."""
    t = len(history.steps)
    if w > t:
        raise ValueError(f"window {w} exceeds history length {t}")
    if w < 1:
        raise ValueError("window must be >= 1")
    history.validate(model)
    return model.ids(_version_space_mask(model, history.steps[t - w:]))


@dataclass
class DriftReport:
    measures: DriftMeasures
    inequality_violations: list[str] = field(default_factory=list)
    epsilon_violations: list[str] = field(default_factory=list)
    tightness_witness: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return not self.inequality_violations and not self.epsilon_violations

    def to_dict(self) -> dict:
        m = self.measures
        return {
            "alpha": str(m.alpha),
            "delta_drift": str(m.delta_drift),
            "epsilon": str(m.epsilon),
            "w_max": str(m.w_max) if m.w_max is not None else "inf",
            "inequality_violations": self.inequality_violations,
            "epsilon_violations": self.epsilon_violations,
            "tightness_witness": self.tightness_witness,
        }


def drift_bound_check(
    model: VersionSpaceModel, histories: Sequence[History], epsilon: Fraction | float
) -> DriftReport:
    """Measure drift across the given histories and verify the windowed
    lower bound mu(window of w) >= alpha - (w - 1) * drift on every prefix.

    Any window w <= w_max whose measure falls below epsilon is a
    falsification; a window beyond w_max that falls below epsilon is
    reported as a tightness witness when one exists.
    """
    if not histories:
        raise ValueError("histories must be non-empty")
    epsilon = Fraction(epsilon).limit_denominator(10**9) if not isinstance(epsilon, Fraction) else epsilon
    alpha: Optional[Fraction] = None
    delta: Fraction = Fraction(0)
    constraint_lists: list[list[int]] = []
    for history in histories:
        history.validate(model)
        masks = [model.cons_mask(c, e) for c, e in history.steps]
        constraint_lists.append(masks)
        for mask in masks:
            mu = model.mu(mask)
            alpha = mu if alpha is None else min(alpha, mu)
        for prev, cur in zip(masks, masks[1:]):
            delta = max(delta, model.mu(prev & ~cur))
    assert alpha is not None
    measures = DriftMeasures.compute(alpha=alpha, delta_drift=delta, epsilon=epsilon)
    report = DriftReport(measures=measures)
    for h_idx, masks in enumerate(constraint_lists):
        for t in range(1, len(masks) + 1):
            window_mask = model.full_mask
            for w in range(1, t + 1):
                window_mask &= masks[t - w]
                mu = model.mu(window_mask)
                if mu < alpha - (w - 1) * delta:
                    report.inequality_violations.append(
                        f"history {h_idx}: mu(window {w} at t={t}) = {mu} < bound"
                    )
                if mu < epsilon:
                    if measures.w_max is not None and w <= measures.w_max:
                        report.epsilon_violations.append(
                            f"history {h_idx}: window {w} <= w_max but mu = {mu} < epsilon"
                        )
                    elif report.tightness_witness is None:
                        report.tightness_witness = {
                            "history": h_idx, "t": t, "w": w, "mu": str(mu)
                        }
    return report


def observation1_instance() -> tuple[VersionSpaceModel, History]:
    """The two-direction counterexample where a drifting two-step history
    empties the version space although each single-step set is non-empty."""
    model = VersionSpaceModel(
        directions=("d_a", "d_b"),
        codes=("c0", "c1"),
        counterexamples=("e",),
        passes=frozenset({("c0", "d_a"), ("c1", "d_b")}),
        consistent=frozenset({("c0", "d_a", "e"), ("c1", "d_b", "e")}),
        obs={"c0": ("e",), "c1": ("e",)},
    )
    return model, History(steps=(("c0", "e"), ("c1", "e")))


# ---------------------------------------------------------------------------
# Instance generation and history enumeration.
# ---------------------------------------------------------------------------


def random_model(
    n_directions: int,
    n_codes: int,
    n_counterexamples: int,
    seed: int,
    pass_density: float = 0.4,
    cons_density: float = 0.7,
    max_obs_per_code: Optional[int] = None,
    require_stable_for: Optional[Sequence[str]] = None,
    require_single_code: Optional[str] = None,
    max_attempts: int = 500,
) -> VersionSpaceModel:
    """Seeded random instance; optional rejection filters keep only models
    whose stable set (or single-code premise) is satisfiable."""
    if min(n_directions, n_codes, n_counterexamples) < 1:
        raise ValueError("sizes must be >= 1")
    for attempt in range(max_attempts):
        rng = random.Random(f"{seed}/{attempt}")
        directions = tuple(f"d{i}" for i in range(n_directions))
        codes = tuple(f"c{i}" for i in range(n_codes))
        counterexamples = tuple(f"e{i}" for i in range(n_counterexamples))
        passes = frozenset(
            (c, d) for c in codes for d in directions if rng.random() < pass_density
        )
        consistent = frozenset(
            (c, d, e)
            for c in codes
            for d in directions
            for e in counterexamples
            if rng.random() < cons_density
        )
        obs = {}
        for c in codes:
            candidates = [e for e in counterexamples if rng.random() < 0.5]
            if max_obs_per_code is not None:
                candidates = candidates[:max_obs_per_code]
            obs[c] = tuple(candidates)
        model = VersionSpaceModel(
            directions=directions,
            codes=codes,
            counterexamples=counterexamples,
            passes=passes,
            consistent=consistent,
            obs=obs,
        )
        if require_stable_for is not None and _stable_star_mask(model, require_stable_for) == 0:
            continue
        if require_single_code is not None:
            succeed = model.pass_mask(require_single_code)
            if succeed == 0 or any(
                succeed & ~model.cons_mask(require_single_code, e)
                for e in model.obs_of(require_single_code)
            ):
                continue
        return model
    raise ValueError(f"no model satisfying the filters after {max_attempts} attempts")


def enumerate_histories(
    model: VersionSpaceModel, codes: Sequence[str], max_len: int
) -> Iterator[History]:
    """All histories over (code, observable counterexample) steps up to max_len."""
    pairs = [(c, e) for c in codes for e in model.obs_of(c)]
    for length in range(1, max_len + 1):
        for steps in itertools.product(pairs, repeat=length):
            yield History(steps=steps)


# ---------------------------------------------------------------------------
# Theorem campaign over many random instances.
# ---------------------------------------------------------------------------


@dataclass
class CampaignReport:
    models: int
    multi_code_histories: int = 0
    single_code_histories: int = 0
    subset_pairs: int = 0
    drift_prefixes: int = 0
    violations: list[str] = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "models": self.models,
            "multi_code_histories": self.multi_code_histories,
            "single_code_histories": self.single_code_histories,
            "subset_pairs": self.subset_pairs,
            "drift_prefixes": self.drift_prefixes,
            "violations": self.violations,
            "elapsed_s": self.elapsed_s,
        }


def _check_drift_inequality_exhaustive(
    model: VersionSpaceModel, max_len: int
) -> tuple[int, list[str]]:
    """Depth-first enumeration of all drifting histories up to max_len,
    checking the windowed lower bound with running alpha and drift counts.

    Works on raw popcounts: the bound mu(V_w) >= alpha - (w-1) delta scaled
    by |D| becomes an exact integer inequality.
    """
    pairs = [(c, e, model.cons_mask(c, e)) for c in model.codes for e in model.obs_of(c)]
    checked = 0
    violations: list[str] = []

    def visit(masks: list[int], alpha_cnt: int, delta_cnt: int, steps: list) -> None:
        nonlocal checked
        t = len(masks)
        window = model.full_mask
        for w in range(1, t + 1):
            window &= masks[t - w]
            checked += 1
            if window.bit_count() < alpha_cnt - (w - 1) * delta_cnt:
                violations.append(f"drift bound broken at steps {steps} window {w}")
        if t == max_len:
            return
        for c, e, mask in pairs:
            new_alpha = min(alpha_cnt, mask.bit_count())
            new_delta = delta_cnt
            if masks:
                new_delta = max(new_delta, (masks[-1] & ~mask).bit_count())
            visit(masks + [mask], new_alpha, new_delta, steps + [(c, e)])

    for c, e, mask in pairs:
        visit([mask], mask.bit_count(), 0, [(c, e)])
    return checked, violations


def run_campaign(
    n_models: int = 200,
    seed: int = 2024,
    max_size: int = 5,
    max_history_len: int = 4,
    max_obs_per_code: int = 2,
) -> CampaignReport:
    """Verify the safety and drift theorems on seeded random instances.

    Per model: exhaustive multi-code histories against the three safety
    clauses, the single-code variants, all nested subset pairs of the initial
    codes, and the windowed drift bound on every drifting history prefix.
    """
    start = time.monotonic()
    report = CampaignReport(models=n_models)
    for i in range(n_models):
        rng = random.Random(f"{seed}/model/{i}")
        nd = rng.randint(2, max_size)
        nc = rng.randint(2, max_size)
        ne = rng.randint(1, max_size)
        model_seed = seed * 100003 + i

        # Multi-code safety and discriminative power share one model whose
        # stable set over the chosen initial codes is non-empty.
        codes = tuple(f"c{j}" for j in range(nc))
        c_init = list(codes[: min(nc, 4)])
        model = random_model(
            nd, nc, ne, seed=model_seed, max_obs_per_code=max_obs_per_code,
            require_stable_for=c_init,
        )
        safety = check_safety(model, c_init, enumerate_histories(model, c_init, max_history_len))
        report.multi_code_histories += safety.histories_checked
        if not safety.premise_met:
            report.violations.append(f"model {i}: multi-code premise lost after filtering")
        report.violations.extend(f"model {i}: {v}" for v in safety.violations)

        disc = check_discriminative(model, c_init)
        report.subset_pairs += disc.prefixes_checked
        report.violations.extend(f"model {i}: {v}" for v in disc.violations)

        # Single-code safety on its own filtered model.
        single_model = random_model(
            nd, nc, ne, seed=model_seed + 1, max_obs_per_code=max_obs_per_code,
            require_single_code="c0",
        )
        single = check_single_code_safety(
            single_model, "c0", enumerate_histories(single_model, ["c0"], max_history_len)
        )
        report.single_code_histories += single.histories_checked
        if not single.premise_met:
            report.violations.append(f"model {i}: single-code premise lost after filtering")
        report.violations.extend(f"model {i}: {v}" for v in single.violations)

        # Windowed drift bound over all drifting histories of the first model.
        checked, violations = _check_drift_inequality_exhaustive(model, max_history_len)
        report.drift_prefixes += checked
        report.violations.extend(f"model {i}: {v}" for v in violations)
    report.elapsed_s = time.monotonic() - start
    return report
