"""Substitution ("crochet") systems, exact layer recurrences and closed forms.

Layer contents of the (M, N)-tiling grow by a two-letter substitution:
``X -> X Y^(N-6)``, ``Y -> X Y^(N-5)`` for triangle tables and
``Y -> (Y Z^(M-3))^(N-4) Y Z^(M-4)``, ``Z -> (Y Z^(M-3))^(N-3) Y Z^(M-4)``
otherwise. Letter counts evolve by the 2x2 abelianization matrix, which is
iterated here in exact integer arithmetic (Python ints never overflow).
The closed forms are evaluated in floating point in both their published
and their integer-consistent ("corrected") versions.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

from .errors import CapExceeded, DegenerateGeometry, LayerOutOfRange, UnsupportedPair
from .hyperbolic import is_hyperbolic_pair

WORD_CAP = 10**6

Matrix = tuple[tuple[int, int], tuple[int, int]]
Vector = tuple[int, int]


class Family(str, Enum):
    """Which closed-form family describes a tiling.

    ``single``: one-shape {n,4} tiling (M = N = n, counted by overall rank);
    ``triangle``: M = 3; ``general``: M >= 4.
    """

    SINGLE = "single"
    TRIANGLE = "triangle"
    GENERAL = "general"


def _check_pair(M: int, N: int) -> None:
    if M < 3 or N < 3 or not is_hyperbolic_pair(M, N):
        raise DegenerateGeometry(f"({M}, {N}) is not a hyperbolic pair")
    if N == 3:
        # triangles around a larger table: no crochet pattern is known
        raise UnsupportedPair(f"({M}, 3): the counting families need M = 3 or M, N >= 4")


def is_counted_pair(M: int, N: int) -> bool:
    """Whether substitution rules and closed forms exist for ``(M, N)``."""
    return M >= 3 and N >= 4 and is_hyperbolic_pair(M, N)


@dataclass(frozen=True)
class SubstitutionRules:
    alphabet: tuple[str, str]
    rules: dict[str, str]

    def __post_init__(self):
        for sym in self.alphabet:
            word = self.rules[sym]
            if not word or set(word) - set(self.alphabet):
                raise ValueError(f"bad rule image for {sym!r}: {word!r}")

    def abelianization(self) -> Matrix:
        """``A[i][j]`` = number of ``alphabet[i]`` in the image of ``alphabet[j]``."""
        a, b = self.alphabet
        return (
            (self.rules[a].count(a), self.rules[b].count(a)),
            (self.rules[a].count(b), self.rules[b].count(b)),
        )

    def letter_counts(self, word: str) -> Vector:
        return word.count(self.alphabet[0]), word.count(self.alphabet[1])


def rules_for(M: int, N: int) -> SubstitutionRules:
    _check_pair(M, N)
    if M == 3:
        return SubstitutionRules(("X", "Y"), {"X": "X" + "Y" * (N - 6), "Y": "X" + "Y" * (N - 5)})
    unit = "Y" + "Z" * (M - 3)
    tail = "Y" + "Z" * (M - 4)
    return SubstitutionRules(("Y", "Z"), {"Y": unit * (N - 4) + tail, "Z": unit * (N - 3) + tail})


def expand(rules: SubstitutionRules, word: str, steps: int, cap: int = WORD_CAP) -> str:
    """Apply the substitution simultaneously to every letter, ``steps`` times."""
    for _ in range(steps):
        a, b = rules.letter_counts(word)
        grown = a * len(rules.rules[rules.alphabet[0]]) + b * len(rules.rules[rules.alphabet[1]])
        if grown > cap:
            raise CapExceeded(f"word would grow to {grown} letters (cap {cap})")
        word = "".join(rules.rules[c] for c in word)
    return word


def mat_vec(A: Matrix, v: Vector) -> Vector:
    return A[0][0] * v[0] + A[0][1] * v[1], A[1][0] * v[0] + A[1][1] * v[1]


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


def mat_pow(A: Matrix, e: int) -> Matrix:
    out: Matrix = ((1, 0), (0, 1))
    base = A
    while e:
        if e & 1:
            out = mat_mul(out, base)
        base = mat_mul(base, base)
        e >>= 1
    return out


def det(A: Matrix) -> int:
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


@dataclass(frozen=True)
class GrowthModel:
    """Abelianized growth of the N-gon layers.

    ``init`` is the type vector of layer ``init_layer`` (2 for triangle
    tables, whose layer-1 N-gons carry no type, 1 otherwise); ``cone_init``
    seeds the small-cone sums.
    """

    M: int
    N: int
    A: Matrix
    init: Vector
    init_layer: int
    cone_init: Vector


def growth_model(M: int, N: int) -> GrowthModel:
    _check_pair(M, N)
    if M == 3:
        A = ((1, 1), (N - 6, N - 5))
        model = GrowthModel(M, N, A, (3, 3 * (N - 4)), 2, (1, 0))
    else:
        A = ((N - 3, N - 2), ((M - 3) * (N - 3) - 1, (M - 3) * (N - 2) - 1))
        model = GrowthModel(M, N, A, (0, M), 1, (2, M - 4))
    if det(model.A) != 1:
        raise AssertionError(f"abelianization of ({M}, {N}) has determinant {det(model.A)}")
    return model


def layer_vector(model: GrowthModel, k: int) -> Vector:
    """Type counts ``(x, y)`` or ``(y, z)`` of N-gon layer ``k``."""
    if k < model.init_layer:
        raise LayerOutOfRange(f"layer {k} precedes the recurrence start {model.init_layer}")
    return mat_vec(mat_pow(model.A, k - model.init_layer), model.init)


def cone_vector(model: GrowthModel, k: int) -> Vector:
    """Type counts of the N-gons of layer ``k`` inside one small cone, ``sum_{i<=k-2} A^i c``."""
    if k < 2:
        raise LayerOutOfRange("small-cone counts are defined from layer 2 on")
    total = (0, 0)
    term = model.cone_init
    for _ in range(k - 1):
        total = (total[0] + term[0], total[1] + term[1])
        term = mat_vec(model.A, term)
    return total


@dataclass(frozen=True)
class LayerCounts:
    """Exact integer counts for layer ``k``: sizes q (N-gons), l (M-gons), cone s, jumps p, j."""

    k: int
    q: int
    l: int
    s: int | None
    p: int | None
    j: int | None
    types: Vector | None


def _triangle_weights(model: GrowthModel) -> tuple[int, int]:
    N = model.N
    return (N - 4, N - 3) if model.M == 3 else (N - 3, N - 2)


def exact_counts(model: GrowthModel, k: int) -> LayerCounts:
    """Exact q, l, s, p, j for layer ``k``.

    Jumps: ``p = q/M + s`` and ``j = l/M + w.cone + 1`` with ``w`` the
    M-gons-per-N-gon weights. For triangle tables layer 1 has only sizes
    (``q = 3``, ``l = 3(N-2)``); for M >= 4 the layer-1 cone is empty.
    """
    M = model.M
    wa, wb = _triangle_weights(model)
    if k < 1:
        raise LayerOutOfRange("layers start at 1")
    if M == 3 and k == 1:
        return LayerCounts(1, 3, 3 * (model.N - 2), None, None, None, None)
    a, b = layer_vector(model, k)
    q = a + b
    l = wa * a + wb * b
    ca, cb = cone_vector(model, k) if k >= 2 else (0, 0)
    if q % M or l % M:
        raise AssertionError(f"layer {k} sizes ({q}, {l}) are not divisible by {M}")
    s = ca + cb
    return LayerCounts(k, q, l, s, q // M + s, l // M + wa * ca + wb * cb + 1, (a, b))


def single_counts(n: int, k: int) -> tuple[int, int]:
    """Exact (q_k, p_k) for the one-shape {n,4} tiling, counted by overall rank."""
    if k < 1:
        raise LayerOutOfRange("ranks start at 1")
    u_prev, u = 0, 1  # U_0, U_1 with U_k = (n-2) U_{k-1} - U_{k-2}
    for _ in range(k - 1):
        u_prev, u = u, (n - 2) * u - u_prev
    return n * u, u_prev + u


@dataclass(frozen=True)
class ClosedFormParams:
    family: Family
    M: int
    N: int
    b: float | None
    eigen_pair: tuple[float, float]

    @property
    def n(self) -> int:
        return self.M


def closed_form_params(M: int, N: int | None = None, family: Family | None = None) -> ClosedFormParams:
    """Parameters for a pair; ``family`` defaults to triangle (M=3) or general.

    Pass ``family=Family.SINGLE`` with ``N`` omitted (or equal to M) for the
    one-shape {n,4} tiling.
    """
    if N is None:
        N = M
        family = family or Family.SINGLE
    if family is None:
        family = Family.TRIANGLE if M == 3 else Family.GENERAL
    _check_pair(M, N)
    if family is Family.SINGLE:
        if M != N:
            raise ValueError("the single-shape family needs M = N")
        n = M
        r = math.sqrt(n * (n - 4))
        return ClosedFormParams(family, n, n, None, ((n - 2 + r) / 2, (n - 2 - r) / 2))
    if family is Family.TRIANGLE:
        if M != 3:
            raise ValueError("the triangle family needs M = 3")
        a, c = math.sqrt(N - 6), math.sqrt(N - 2)
        return ClosedFormParams(family, 3, N, None, ((a + c) / 2, (a - c) / 2))
    if M < 4:
        raise ValueError("the general family needs M >= 4")
    b = float((M - 2) * (N - 2) - 2)
    a, c = math.sqrt(b - 2), math.sqrt(b + 2)
    return ClosedFormParams(family, M, N, b, ((a + c) / 2, (a - c) / 2))


@dataclass(frozen=True)
class ClosedForms:
    """Closed-form values at one layer; ``*_printed`` are the published expressions."""

    k: int
    q: float
    l: float | None
    s: float | None
    p: float
    j: float | None
    q_printed: float
    l_printed: float | None
    s_printed: float | None
    p_printed: float
    j_printed: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def _single_forms(params: ClosedFormParams, k: int) -> ClosedForms:
    if k < 1:
        raise LayerOutOfRange("ranks start at 1")
    l1, l2 = params.eigen_pair
    n = params.M

    def U(e):
        return (l1**e - l2**e) / (l1 - l2)

    q = n * U(k)
    p = U(k - 1) + U(k)
    return ClosedForms(k, q, None, None, p, None, q, None, None, p, None)


def _triangle_forms(params: ClosedFormParams, k: int) -> ClosedForms:
    if k < 2:
        raise LayerOutOfRange("triangle-table closed forms start at layer 2")
    f1, f2 = params.eigen_pair
    N = params.N
    r6, r2 = math.sqrt(N - 6), math.sqrt(N - 2)

    def plus(e):
        return f1**e + f2**e

    def minus(e):
        return f1**e - f2**e

    q_printed = plus(2 * k - 3) / r6 + plus(2 * k - 2)
    l_printed = (N - 4) / r6 * plus(2 * k - 3) + (N - 3) * plus(2 * k - 2)
    xs = 1 + minus(2 * k - 4) / (r6 * r2)
    ys = -1 + minus(2 * k - 3) / r2
    cone_p = minus(2 * k - 4) / (r6 * r2) + minus(2 * k - 3) / r2
    cone_j = (N - 4) * minus(2 * k - 4) / (r6 * r2) + (N - 3) * minus(2 * k - 3) / r2
    # the layer general term carries an overall factor 3 that the size displays drop
    x = 3 * plus(2 * k - 3) / r6
    y = 3 * plus(2 * k - 2)
    q = x + y
    l = (N - 4) * x + (N - 3) * y
    s = xs + ys
    return ClosedForms(
        k,
        q=q,
        l=l,
        s=s,
        p=q / 3 + s,
        j=l / 3 + (N - 4) * xs + (N - 3) * ys + 1,
        q_printed=q_printed,
        l_printed=l_printed,
        s_printed=cone_p,
        p_printed=q_printed / 3 + cone_p,
        j_printed=l_printed / 3 + cone_j,
    )


def _general_forms(params: ClosedFormParams, k: int) -> ClosedForms:
    if k < 1:
        raise LayerOutOfRange("layers start at 1")
    a1, a2 = params.eigen_pair
    M, N, b = params.M, params.N, params.b

    def minus(e):
        return a1**e - a2**e

    root = math.sqrt(b * b - 4)
    q = M / root * ((b + 1) * minus(2 * k - 2) - minus(2 * k - 4))
    l = M * (N - 2) / root * (b * minus(2 * k - 2) - minus(2 * k - 4))
    den = (b - 2) * math.sqrt(b + 2)
    s = (M - 2) / den * ((b - 1) * minus(2 * k - 3) - minus(2 * k - 5))
    # the same cone count written with plus signs inside the first bracket
    s_plus = (M - 2) / den * ((b - 1) * (a1 ** (2 * k - 3) + a2 ** (2 * k - 3)) + a2 ** (2 * k - 5) - a1 ** (2 * k - 5))
    cone_j = ((b * b - 2) * minus(2 * k - 3) - b * minus(2 * k - 5)) / den
    return ClosedForms(
        k,
        q=q,
        l=l,
        s=s,
        p=q / M + s,
        j=l / M + cone_j,
        q_printed=q,
        l_printed=l,
        s_printed=s_plus,
        p_printed=q / M + s,
        j_printed=l / M + cone_j,
    )


def closed_forms(params: ClosedFormParams, k: int) -> ClosedForms:
    """Evaluate every closed form at layer ``k`` (overall rank ``k`` for the single family)."""
    if params.family is Family.SINGLE:
        return _single_forms(params, k)
    if params.family is Family.TRIANGLE:
        return _triangle_forms(params, k)
    return _general_forms(params, k)


def rotation_number_closed(params: ClosedFormParams) -> float:
    """Rotation number of the circle map at infinity."""
    if params.family is Family.SINGLE:
        n = params.M
        return (n - math.sqrt(n * (n - 4))) / (2 * n)
    if params.family is Family.TRIANGLE:
        return 1 / 3 + 1 / (3 * math.sqrt(params.N - 2) * params.eigen_pair[0])
    M, b = params.M, params.b
    a1 = params.eigen_pair[0]
    return 1 / M + (M - 2) / (M * math.sqrt(b - 2) * a1) * (((b - 1) * a1**2 - 1) / ((b + 1) * a1**2 - 1))


def rotation_number_closed_alt(params: ClosedFormParams) -> float:
    """Triangle family only: the equivalent form ``1/3 + 1/(3(1 + Phi_1^2))``."""
    if params.family is not Family.TRIANGLE:
        raise ValueError("only the triangle family has the alternative form")
    return 1 / 3 + 1 / (3 * (1 + params.eigen_pair[0] ** 2))


def eigenvalue_from_rotation(rho: float, N: int) -> float:
    """Triangle family: recover the leading eigenvalue from the rotation number."""
    return 1 / (3 * math.sqrt(N - 2) * (rho - 1 / 3))


def characteristic_residual(params: ClosedFormParams) -> float:
    """Largest residual of the defining quadratic over the eigenvalue pair."""
    out = 0.0
    for e in params.eigen_pair:
        if params.family is Family.SINGLE:
            r = e * e - (params.M - 2) * e + 1
        elif params.family is Family.TRIANGLE:
            r = e * e - math.sqrt(params.N - 6) * e - 1
        else:
            r = e * e - math.sqrt(params.b - 2) * e - 1
        out = max(out, abs(r))
    return out


REPORT_FIELDS = ("family", "m", "n", "k", "q", "l", "s", "p", "j", "q_printed", "p_printed", "rho")


def closed_form_report(M: int, N: int, k_max: int) -> list[dict]:
    """One row per layer ``k <= k_max`` with the fields in ``REPORT_FIELDS``.

    Layers with no closed form (layer 1 of a triangle table) carry the exact
    recurrence values and ``None`` for the printed displays.
    """
    params = closed_form_params(M, N)
    model = growth_model(M, N)
    rho = rotation_number_closed(params)
    rows = []
    for k in range(1, k_max + 1):
        try:
            cf = closed_forms(params, k)
            vals = dict(q=cf.q, l=cf.l, s=cf.s, p=cf.p, j=cf.j, q_printed=cf.q_printed, p_printed=cf.p_printed)
        except LayerOutOfRange:
            ex = exact_counts(model, k)
            vals = dict(q=ex.q, l=ex.l, s=ex.s, p=ex.p, j=ex.j, q_printed=None, p_printed=None)
        rows.append({"family": params.family.value, "m": M, "n": N, "k": k, **vals, "rho": rho})
    return rows
