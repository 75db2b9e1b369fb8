"""Implied-volatility inversion and smile construction from quotes.

Quoting under parameter uncertainty deforms prices away from the flat
reference model, and re-expressing the deformed prices as implied
volatilities produces a smile.  This module inverts prices with a
safeguarded Newton iteration, assembles bid/mid/ask smiles over a
strike/maturity grid, and classifies the at-the-money curvature of the
result (present/absent, convex, growing or shrinking with maturity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InsufficientGridError, InvalidInputError, RootBracketError
from .lognormal import (
    CallSpec,
    LognormalMarket,
    TotalVolUncertainty,
    call_price,
    call_vega,
)
from .quotes import QuoteTriple, RiskPolicy, quote_call

__all__ = [
    "SIGMA_BRACKET",
    "implied_vol",
    "SmileGrid",
    "build_smile",
    "SmileDiagnostics",
    "smile_diagnostics",
    "smile_to_csv",
]

# Root bracket for the implied-volatility search, in annualised vol units.
SIGMA_BRACKET = (1e-8, 5.0)

# Relative volatility accuracy of the inversion (with a 1e-3 absolute
# floor for tiny vols); the price-space exit below is scaled by the vega
# so it never fires before this accuracy is reached.
_VOL_TOL_REL = 1e-11

# Price convergence tolerance, relative to spot.


def implied_vol(price: float, m: LognormalMarket, c: CallSpec) -> float:
    """Invert an undiscounted call price to an annualised volatility.

    The price must lie strictly inside the static no-arbitrage band
    (max(spot-strike, 0), spot); values on or outside the band raise
    DomainError.  The search runs Newton steps on the vega, falling back
    to bisection whenever a step leaves the current bracket, and stops
    once the volatility is pinned to about ``_VOL_TOL_REL`` relative
    accuracy (either through a vega-scaled price test or by the bracket
    collapsing).  A root outside ``SIGMA_BRACKET`` raises
    RootBracketError.
    """
    price = float(price)
    if not math.isfinite(price):
        raise InvalidInputError(f"price must be finite, got {price!r}")
    intrinsic = max(m.spot - c.strike, 0.0)
    if not (intrinsic < price < m.spot):
        raise DomainError(
            f"price {price} outside the open no-arbitrage band "
            f"({intrinsic}, {m.spot}) for strike {c.strike}"
        )

    lo, hi = SIGMA_BRACKET

    def f(sig: float) -> float:
        return call_price(LognormalMarket(m.spot, sig, m.mu), c) - price

    flo, fhi = f(lo), f(hi)
    if flo > 0.0 or fhi < 0.0:
        raise RootBracketError(
            f"no implied volatility in [{lo}, {hi}] for price {price} "
            f"(strike {c.strike}, maturity {c.maturity})"
        )

    # Moneyness-free starting point: at the money, C ~ 0.4 x sigma sqrt(T).
    sig = (price - 0.5 * intrinsic) / (0.4 * m.spot * math.sqrt(c.maturity))
    sig = min(max(sig, lo), hi)

    for _ in range(200):
        mkt = LognormalMarket(m.spot, sig, m.mu)
        err = call_price(mkt, c) - price
        vega = call_vega(mkt, c)
        vol_tol = _VOL_TOL_REL * max(sig, 1e-3)
        if abs(err) <= vega * vol_tol + 2e-16 * m.spot:
            return sig
        if err > 0.0:
            hi = sig
        else:
            lo = sig
        if hi - lo <= vol_tol:
            return 0.5 * (lo + hi)
        step = sig - err / vega if vega > 0.0 else lo
        sig = step if lo < step < hi else 0.5 * (lo + hi)
    raise RootBracketError(
        f"implied volatility iteration failed to converge for price {price}"
    )


@dataclass(frozen=True)
class SmileGrid:
    """Implied vols of one quote side over a strike/maturity grid.

    ``vols`` has shape (len(maturities), len(strikes)); cells where the
    quoted price could not be inverted (outside the arbitrage band or the
    vol bracket) hold NaN.
    """

    strikes: tuple[float, ...]
    maturities: tuple[float, ...]
    vols: np.ndarray
    source: str

    def to_jsonable(self) -> dict:
        cells = [
            [None if math.isnan(v) else float(v) for v in row] for row in self.vols
        ]
        return {
            "source": self.source,
            "strikes": list(self.strikes),
            "maturities": list(self.maturities),
            "vols": cells,
        }


_SOURCES = ("bid", "mid", "ask")


def _uncertainty_for(
    uncertainties, maturities: Sequence[float]
) -> Callable[[int, float], TotalVolUncertainty]:
    if isinstance(uncertainties, TotalVolUncertainty):
        return lambda i, t: uncertainties
    if callable(uncertainties):
        return lambda i, t: uncertainties(t)
    seq = list(uncertainties)
    if len(seq) != len(maturities):
        raise InvalidInputError(
            f"need one uncertainty per maturity: got {len(seq)} "
            f"for {len(maturities)} maturities"
        )
    return lambda i, t: seq[i]


def build_smile(
    m: LognormalMarket,
    uncertainties,
    policy: RiskPolicy,
    strikes: Sequence[float],
    maturities: Sequence[float],
    source: str = "mid",
) -> SmileGrid:
    """Quote every grid cell and invert the chosen side to implied vol.

    ``uncertainties`` is a single :class:`TotalVolUncertainty`, a sequence
    aligned with ``maturities``, or a callable maturity -> uncertainty.
    Cells whose quote cannot be inverted come back as NaN rather than
    aborting the grid.
    """
    if source not in _SOURCES:
        raise InvalidInputError(f"source must be one of {_SOURCES}, got {source!r}")
    strikes = tuple(float(k) for k in strikes)
    maturities = tuple(float(t) for t in maturities)
    u_of = _uncertainty_for(uncertainties, maturities)

    vols = np.full((len(maturities), len(strikes)), np.nan)
    for i, t in enumerate(maturities):
        u = u_of(i, t)
        for j, k in enumerate(strikes):
            c = CallSpec(strike=k, maturity=t)
            q = quote_call(m, c, u, policy)
            p = getattr(q, source)
            try:
                vols[i, j] = implied_vol(p, m, c)
            except (DomainError, RootBracketError):
                pass
    return SmileGrid(strikes=strikes, maturities=maturities, vols=vols, source=source)


@dataclass(frozen=True)
class SmileDiagnostics:
    """At-the-money curvature classification of a smile grid."""

    maturities: tuple[float, ...]
    atm_curvatures: tuple[float, ...]
    curvature_floor: float
    convex: tuple[bool, ...]
    curvature_decreasing: bool
    verdict: str


def _second_difference(k: np.ndarray, f: np.ndarray, j: int) -> float:
    """Three-point second derivative at index j on a possibly uneven grid."""
    hm = k[j] - k[j - 1]
    hp = k[j + 1] - k[j]
    return 2.0 * (
        f[j - 1] / (hm * (hm + hp)) - f[j] / (hm * hp) + f[j + 1] / (hp * (hm + hp))
    )


def smile_diagnostics(grid: SmileGrid, m: LognormalMarket) -> SmileDiagnostics:
    """Classify the smile's at-the-money curvature across maturities.

    Requires at least three strikes with the spot strictly bracketed and
    at least two maturities.  The curvature at each maturity is the
    three-point second difference of implied vol at the strike closest to
    spot; values below the inversion noise floor count as flat.

    Verdicts: 'convex_decreasing' (positive curvature shrinking with
    maturity), 'convex' (positive, not monotone), 'no_smile' (all within
    the noise floor), 'mixed' otherwise.
    """
    ks = np.asarray(grid.strikes)
    if len(ks) < 3 or not (ks.min() < m.spot < ks.max()):
        raise InsufficientGridError(
            "diagnostics need >= 3 strikes bracketing the spot"
        )
    if len(grid.maturities) < 2:
        raise InsufficientGridError("diagnostics need >= 2 maturities")
    j = int(np.argmin(np.abs(ks - m.spot)))
    j = min(max(j, 1), len(ks) - 2)

    # The inversion pins each vol to ~1e-10 absolute at these scales; a
    # second difference amplifies that by 4 / h^2.  Anything below a few
    # times this floor is indistinguishable from a flat smile.
    h = min(ks[j] - ks[j - 1], ks[j + 1] - ks[j])
    noise = 4.0 * 1e-10 / (h * h)
    floor = max(4.0 * noise, 1e-14)

    curvatures = []
    for i, t in enumerate(grid.maturities):
        row = grid.vols[i]
        if any(math.isnan(row[jj]) for jj in (j - 1, j, j + 1)):
            raise InsufficientGridError(
                f"implied vol missing near the money at maturity {t} "
                f"(strikes {ks[j-1]}, {ks[j]}, {ks[j+1]})"
            )
        curvatures.append(_second_difference(ks, row, j))

    convex = tuple(c > floor for c in curvatures)
    flat = all(abs(c) <= floor for c in curvatures)
    decreasing = all(
        curvatures[i] > curvatures[i + 1] for i in range(len(curvatures) - 1)
    )
    if flat:
        verdict = "no_smile"
    elif all(convex):
        verdict = "convex_decreasing" if decreasing else "convex"
    else:
        verdict = "mixed"
    return SmileDiagnostics(
        maturities=grid.maturities,
        atm_curvatures=tuple(curvatures),
        curvature_floor=floor,
        convex=convex,
        curvature_decreasing=decreasing,
        verdict=verdict,
    )


def smile_to_csv(bid: SmileGrid, mid: SmileGrid, ask: SmileGrid) -> str:
    """Render three aligned smile grids as CSV text.

    Header: maturity,strike,bid_vol,mid_vol,ask_vol.  Rows are ordered by
    maturity then strike; non-invertible cells are left empty.
    """
    for g in (bid, mid, ask):
        if g.strikes != mid.strikes or g.maturities != mid.maturities:
            raise InvalidInputError("smile grids must share the same axes")

    def cell(x: float) -> str:
        return "" if math.isnan(x) else repr(float(x))

    lines = ["maturity,strike,bid_vol,mid_vol,ask_vol"]
    for i, t in enumerate(mid.maturities):
        for j, k in enumerate(mid.strikes):
            lines.append(
                f"{t!r},{k!r},{cell(bid.vols[i, j])},"
                f"{cell(mid.vols[i, j])},{cell(ask.vols[i, j])}"
            )
    return "\n".join(lines) + "\n"
