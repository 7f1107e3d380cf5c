"""Virtual-triangle, polygonal-area and infimal-length spectra with gap diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CROOKED, classify, enumerate_simple_closed_geodesics
from .errors import EmptySpectrum, FlatSpecError
from .geodesy import cached_holonomies, enumerate_saddle_connections
from .sl2opt import infimal_length
from .zonogon import auxiliary_polygon

DEDUP_TOL = 1e-12
KINDS = ("vt", "vt0", "polyarea", "illength")

CAVEAT = (
    "finite cutoffs can exhibit a collapsing minimum but can never certify a gap above zero"
)


@dataclass
class Spectrum:
    """Distinct sorted values with multiplicities and one witness per value.

    Witnesses are pairs of saddle-connection indices for vt/vt0 and curve
    indices (into ``curves``) for polyarea/illength.
    """

    kind: str
    cutoff: float
    values: list
    multiplicities: list
    provenance: list
    errors: list = field(default_factory=list)
    curves: list = field(default_factory=list, repr=False)
    crosscheck: float | None = None
    area: float | None = None  # surface area, the natural scale for histogram caps

    def __len__(self):
        return len(self.values)

    @property
    def total(self) -> int:
        return int(sum(self.multiplicities))

    @property
    def min_positive(self):
        for v in self.values:
            if v > DEDUP_TOL:
                return v
        return None

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "cutoff": self.cutoff,
            "values": list(self.values),
            "multiplicities": list(self.multiplicities),
            "provenance": [list(p) if isinstance(p, tuple) else p for p in self.provenance],
            "minPositive": self.min_positive,
        }
        if self.errors:
            out["errors"] = list(self.errors)
        if self.crosscheck is not None:
            out["crosscheck"] = self.crosscheck
        return out


def _dedup(raw, witnesses):
    """Group values within DEDUP_TOL of each group's first member."""
    order = sorted(range(len(raw)), key=lambda i: raw[i])
    values, mult, prov = [], [], []
    for i in order:
        v = raw[i]
        if values and v - values[-1] <= DEDUP_TOL:
            mult[-1] += 1
            continue
        values.append(v)
        mult.append(1)
        prov.append(witnesses[i])
    return values, mult, prov


def _holonomies(q, L, workers=1, cache_dir=None):
    if cache_dir is not None or workers == 1:
        recs = cached_holonomies(q, L, cache_dir=cache_dir, workers=workers)
    else:
        recs = enumerate_saddle_connections(q, L, workers=workers)
    idx = [r.idx for r in recs]
    ends = [(r.start, r.end) for r in recs]
    H = np.array([r.holonomy for r in recs], dtype=float).reshape(-1, 2)
    return idx, ends, H


def _wedge_spectrum(kind, q, L, based, workers, cache_dir):
    idx, ends, H = _holonomies(q, L, workers, cache_dir)
    n = len(idx)
    if n < 2:
        return Spectrum(kind, L, [], [], [], area=q.area)
    i, j = np.triu_indices(n, 1)
    w = np.abs(H[i, 0] * H[j, 1] - H[i, 1] * H[j, 0])
    if based:
        keep = np.array([bool(set(ends[a]) & set(ends[b])) for a, b in zip(i, j)], dtype=bool)
        i, j, w = i[keep], j[keep], w[keep]
    wit = [(idx[a], idx[b]) for a, b in zip(i.tolist(), j.tolist())]
    values, mult, prov = _dedup(w.tolist(), wit)
    return Spectrum(kind, L, values, mult, prov, area=q.area)


def vt_spectrum(q, L, workers=1, cache_dir=None) -> Spectrum:
    """|u ^ v| over unordered pairs of saddle connections with length <= L."""
    return _wedge_spectrum("vt", q, L, False, workers, cache_dir)


def vt0_spectrum(q, L, workers=1, cache_dir=None) -> Spectrum:
    """Like vt_spectrum, restricted to pairs sharing an endpoint cone point."""
    return _wedge_spectrum("vt0", q, L, True, workers, cache_dir)


def pairwise_wedge_area(rep) -> float:
    """Sum over pairs of distinct saddle connections of m_e m_f |v_e ^ v_f|."""
    ws = rep.weighted_holonomies()
    total = 0.0
    for a in range(len(ws)):
        for b in range(a + 1, len(ws)):
            total += abs(ws[a][0] * ws[b][1] - ws[a][1] * ws[b][0])
    return total


def _curves(q, L, curves):
    return list(curves) if curves is not None else enumerate_simple_closed_geodesics(q, L)


def poly_area_spectrum(q, L, curves=None) -> Spectrum:
    """Auxiliary-polygon areas of simple closed geodesics of length <= L."""
    reps = _curves(q, L, curves)
    raw, worst = [], 0.0
    for rep in reps:
        Z = auxiliary_polygon(rep)
        a = Z.shoelace_area() if not Z.degenerate else 0.0
        ref = pairwise_wedge_area(rep)
        worst = max(worst, abs(a - ref) / max(1.0, ref))
        raw.append(ref)
    values, mult, prov = _dedup(raw, list(range(len(reps))))
    return Spectrum("polyarea", L, values, mult, prov, curves=reps, crosscheck=worst, area=q.area)


def illength_spectrum(q, L, curves=None, tol=1e-12) -> Spectrum:
    """Infimal length over the SL(2,R) orbit for each simple closed geodesic of length <= L."""
    reps = _curves(q, L, curves)
    raw, wit, errors = [], [], []
    for k, rep in enumerate(reps):
        try:
            raw.append(infimal_length(auxiliary_polygon(rep), tol=tol).value)
            wit.append(k)
        except FlatSpecError as exc:
            errors.append({"curve": k, "error": type(exc).__name__, "message": str(exc)})
    values, mult, prov = _dedup(raw, wit)
    return Spectrum("illength", L, values, mult, prov, errors=errors, curves=reps, area=q.area)


def spectrum(kind, q, L, workers=1, cache_dir=None, curves=None) -> Spectrum:
    if kind == "vt":
        return vt_spectrum(q, L, workers, cache_dir)
    if kind == "vt0":
        return vt0_spectrum(q, L, workers, cache_dir)
    if kind == "polyarea":
        return poly_area_spectrum(q, L, curves)
    if kind == "illength":
        return illength_spectrum(q, L, curves)
    raise ValueError(f"unknown spectrum kind {kind!r}; expected one of {KINDS}")


@dataclass
class GapReport:
    min_positive: float | None
    bins: list  # (lo, hi, count)
    density_score: float
    trend: list  # (cutoff, min_positive)

    def to_json(self) -> dict:
        return {
            "minPositive": self.min_positive,
            "histogram": [list(b) for b in self.bins],
            "densityScore": self.density_score,
            "trend": [list(t) for t in self.trend],
        }

    def histogram_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        lines += [f"{lo!r},{hi!r},{c}" for lo, hi, c in self.bins]
        return "\n".join(lines) + "\n"


def gap_report(spec: Spectrum, bins: int = 20, cap: float | None = None) -> GapReport:
    """Histogram on [0, cap] counted with multiplicity, plus gap statistics.

    ``cap`` defaults to the surface area when known, else the largest value.
    """
    if not spec.values:
        raise EmptySpectrum(f"{spec.kind} spectrum is empty at cutoff {spec.cutoff!r}")
    if bins < 1:
        raise ValueError("bins must be positive")
    vals = np.array(spec.values, dtype=float)
    mult = np.array(spec.multiplicities, dtype=int)
    if cap is None:
        cap = spec.area if spec.area else (float(vals.max()) if vals.max() > 0 else 1.0)
    if cap <= 0:
        raise ValueError("cap must be positive")
    edges = np.linspace(0.0, cap, bins + 1)
    inside = vals <= cap
    counts, _ = np.histogram(vals[inside], bins=edges, weights=mult[inside])
    rows = [(float(edges[b]), float(edges[b + 1]), int(counts[b])) for b in range(bins)]
    mp = spec.min_positive
    pos = vals[(vals > DEDUP_TOL) & inside]
    if pos.size:
        a = float(pos.max())
        covering = [r for r in rows if r[0] <= a]
        score = sum(1 for r in covering if r[2] > 0) / len(covering)
    else:
        score = 0.0
    return GapReport(mp, rows, score, [(spec.cutoff, mp)])


@dataclass
class ProbeReport:
    cutoffs: list
    vt: list  # minPositive per cutoff
    vt0: list
    caveat: str = CAVEAT

    def trend(self, kind="vt"):
        seq = self.vt if kind == "vt" else self.vt0
        return list(zip(self.cutoffs, seq))

    def stabilized(self, kind="vt", tol=1e-9) -> bool:
        seq = self.vt if kind == "vt" else self.vt0
        return len(seq) >= 2 and None not in seq[-2:] and abs(seq[-1] - seq[-2]) <= tol

    def strictly_decreasing(self, kind="vt", tol=1e-9) -> bool:
        seq = self.vt if kind == "vt" else self.vt0
        if None in seq:
            return False
        return all(b < a - tol for a, b in zip(seq, seq[1:]))

    def to_json(self) -> dict:
        return {
            "cutoffs": list(self.cutoffs),
            "vt": {"minPositive": list(self.vt)},
            "vt0": {"minPositive": list(self.vt0)},
            "stabilized": self.stabilized("vt"),
            "strictlyDecreasing": self.strictly_decreasing("vt"),
            "caveat": self.caveat,
        }

    def trend_csv(self, kind="vt") -> str:
        lines = ["cutoff,min_positive"]
        lines += [f"{c!r},{'' if m is None else repr(m)}" for c, m in self.trend(kind)]
        return "\n".join(lines) + "\n"


def veech_probe(q, cutoffs, workers=1, cache_dir=None) -> ProbeReport:
    cutoffs = [float(c) for c in cutoffs]
    if not cutoffs or any(c <= 0 for c in cutoffs) or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be positive and strictly ascending")
    vt, vt0 = [], []
    for L in cutoffs:
        vt.append(vt_spectrum(q, L, workers, cache_dir).min_positive)
        vt0.append(vt0_spectrum(q, L, workers, cache_dir).min_positive)
    return ProbeReport(cutoffs, vt, vt0)


def pa_il_query(q, a, L, curves=None) -> dict:
    """Check every crooked curve up to ``L`` against area >= a and infimal length >= a."""
    if not a > 0:
        raise ValueError("the threshold a must be positive")
    reps = _curves(q, L, curves)
    crooked = [(k, r) for k, r in enumerate(reps) if classify(r) == CROOKED]
    pa_bad, il_bad = None, None
    pa_min, il_min = math.inf, math.inf
    for k, rep in crooked:
        Z = auxiliary_polygon(rep)
        area = Z.area
        il = infimal_length(Z).value
        if area < pa_min:
            pa_min = area
            if area < a:
                pa_bad = {"curve": k, "area": area, "word": _word(rep)}
        if il < il_min:
            il_min = il
            if il < a:
                il_bad = {"curve": k, "illength": il, "word": _word(rep)}
    return {
        "a": a,
        "cutoff": L,
        "scope": f"up to cutoff L={L!r}",
        "crookedCount": len(crooked),
        "noCrookedWitnesses": not crooked,
        "PA": {"member": pa_bad is None, "violation": pa_bad, "minArea": pa_min if crooked else None},
        "IL": {"member": il_bad is None, "violation": il_bad, "minIllength": il_min if crooked else None},
    }


def _word(rep):
    return [[sc.idx, s] for sc, s in rep.edges]
