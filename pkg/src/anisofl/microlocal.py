"""M-conic sectors, cutoffs, microlocal membership probes, wave-front scans and
the microlocal regularity pipeline."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Transition
from .flnorm import lp
from .lattice import FREQUENCY, PHYSICAL, GridFunction, as_lattice
from .mweight import as_anisotropy, m_norm, m_projection, unit_directions
from .symbol import Multiplier, estimate_smooth_class


def m_angular_distance(M, xi, eta):
    """Euclidean distance between the M-projections of xi and eta on the unit M-sphere."""
    M = as_anisotropy(M)
    a = m_projection(M, np.asarray(xi, dtype=float))
    b = m_projection(M, np.asarray(eta, dtype=float))
    return np.linalg.norm(a - b, axis=-1)


@dataclass(frozen=True)
class ConicSector:
    """Directions within ``aperture`` (M-angular distance) of xi0, at |xi|_M above eps0.

    ``aperture=1`` is read as the whole sphere."""

    xi0: tuple
    aperture: float = 0.25
    eps0: float = 0.5

    def __post_init__(self):
        xi0 = tuple(float(v) for v in np.ravel(self.xi0))
        if not any(xi0):
            raise ValueError("sector axis must be nonzero")
        if not 0 < self.aperture <= 1:
            raise ValueError("aperture must lie in (0, 1]")
        object.__setattr__(self, "xi0", xi0)

    def direction(self, M):
        M = as_anisotropy(M)
        if not 0 < self.eps0 < float(m_norm(M, np.array(self.xi0))):
            raise ValueError("eps0 must lie strictly between 0 and |xi0|_M")
        return m_projection(M, np.array(self.xi0))

    def contains(self, M, xi):
        """Membership in the inner sector (where the sector symbol equals 1)."""
        self.direction(M)
        xi = np.asarray(xi, dtype=float)
        d = m_angular_distance(M, xi, np.broadcast_to(self.xi0, xi.shape))
        inside = d <= self.aperture if self.aperture < 1 else np.ones(d.shape, dtype=bool)
        return inside & (m_norm(M, xi) >= self.eps0)

    def reach(self, M, lat):
        """Largest t with t^(1/M) w inside the box along the sector axis w."""
        M = as_anisotropy(M)
        w = self.direction(M)
        out = math.inf
        for mu, N, v in zip(M.as_float(), lat.sizes, w):
            if abs(v) > 1e-12:
                out = min(out, (N / 2 / abs(v)) ** mu)
        return out

    def to_dict(self):
        return {"xi0": list(self.xi0), "aperture": self.aperture, "eps0": self.eps0}


def sector_values(sec, M, xi):
    """psi(xi): 1 on the inner sector above eps0, 0 beyond 1.5x aperture or below eps0/2."""
    M = as_anisotropy(M)
    xi = np.asarray(xi, dtype=float)
    sec.direction(M)
    d = m_angular_distance(M, xi, np.broadcast_to(sec.xi0, xi.shape))
    ang = Transition(sec.aperture, 1.5 * sec.aperture)(d) if sec.aperture < 1 else np.ones(d.shape)
    rad = 1.0 - Transition(sec.eps0 / 2, sec.eps0)(m_norm(M, xi))
    return ang * rad


def sector_symbol(sec, M, lat, measure=True):
    """The sector symbol as a Multiplier; S^0_M constants are attached as ``constants``."""
    M = as_anisotropy(M)
    lat = as_lattice(lat)
    sec.direction(M)
    psi = Multiplier(values=sector_values(sec, M, lat.freq_grid()), lattice=lat, name="sector")
    psi.sector = sec
    psi.constants = estimate_smooth_class(psi, lat, 0.0, 0.0, M, max_orders=(2, 0)).to_dict() if measure else None
    return psi


def cutoff_function(x0, radius, lat):
    """Smooth bump on the torus: 1 within radius/2 of x0, 0 beyond radius."""
    lat = as_lattice(lat)
    if not 0 < radius < math.pi:
        raise ValueError("radius must lie in (0, pi) so the bump does not wrap around")
    x0 = np.asarray(x0, dtype=float)
    diff = lat.x_grid() - x0
    diff = np.mod(diff + math.pi, 2 * math.pi) - math.pi
    dist = np.linalg.norm(diff, axis=-1)
    return GridFunction(lat, PHYSICAL, Transition(radius / 2, radius)(dist).astype(complex))


@dataclass
class ProbeResult:
    shells: list
    masses: list
    fit_shells: list
    slope: float
    member: bool
    score: float
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "shells": self.shells,
            "masses": self.masses,
            "fit_shells": self.fit_shells,
            "slope": self.slope,
            "member": self.member,
            "score": self.score,
            "params": self.params,
        }


REL_FLOOR = 1e-10


def _probe(vhat, psi, part, s, p, reach, params):
    """Shell masses 2^(s h) ||psi phi_h vhat||_p and the slope verdict.

    Shells count as populated above REL_FLOOR times the largest unfiltered
    shell norm, so round-off in an empty sector is never fitted."""
    w = psi * vhat if psi is not None else vhat
    shells = list(part.shells)
    raw = np.array([lp(part.phi(h) * w, p) for h in shells])
    masses = [float(2.0 ** (s * h) * m) for h, m in zip(shells, raw)]
    top = lp(vhat, math.inf)
    usable = [i for i, h in enumerate(shells)
              if top > 0 and raw[i] > REL_FLOOR * top and 2.0 ** (h + 1) <= reach]
    if len(usable) < 2:
        slope = -math.inf
    else:
        k = max(2, math.ceil(len(usable) / 2))
        pick = usable[-k:]
        hs = np.array([shells[i] for i in pick], dtype=float)
        slope = float(np.polyfit(hs, np.log2([masses[i] for i in pick]), 1)[0])
        usable = pick
    return ProbeResult(
        shells=shells,
        masses=masses,
        fit_shells=[shells[i] for i in usable] if len(usable) >= 2 else [],
        slope=slope,
        member=bool(slope <= 0),
        score=float(s - slope),
        params=params,
    )


def _inscribed_reach(M, lat):
    return min((N / 2) ** mu for mu, N in zip(M.as_float(), lat.sizes))


def mcl_membership_score(u, x0, sec, s, p, M, part, radius=0.9 * math.pi):
    """Membership verdict of psi(D)(phi u) at order s.

    ``x0=None`` skips the x-cutoff and ``sec=None`` the sector filter.  The
    fitted quantity is the log2 slope of the shell masses over the top half of
    the populated shells (at least two) with 2^(h+1) inside the box along
    the sector axis; member iff slope <= 0, score = s - slope is the
    critical order."""
    M = as_anisotropy(M)
    lat = u.lattice
    v = u.phys()
    if x0 is not None:
        v = v * cutoff_function(x0, radius, lat).phys()
    vhat = np.fft.fftn(v) / lat.count
    psi = sector_values(sec, M, lat.freq_grid()) if sec is not None else None
    reach = sec.reach(M, lat) if sec is not None else _inscribed_reach(M, lat)
    params = {
        "x0": None if x0 is None else [float(t) for t in x0],
        "sector": None if sec is None else sec.to_dict(),
        "s": s,
        "p": "inf" if math.isinf(float(p)) else p,
        "M": M.label(),
        "radius": radius,
    }
    return _probe(vhat, psi, part, s, p, reach, params)


@dataclass
class WavefrontTable:
    x_points: list
    directions: np.ndarray
    results: dict
    s: float
    p: float

    def flagged(self):
        """(x index, direction index) pairs where membership fails."""
        return {k for k, r in self.results.items() if not r.member}

    def projection(self):
        return {i for i, _ in self.flagged()}

    def rows(self):
        out = []
        for (i, d), r in self.results.items():
            out.append((r.score, i, d, r))
        out.sort(key=lambda t: (-t[0], t[1], t[2]))
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            nshell = len(next(iter(self.results.values())).shells) if self.results else 0
            first = next(iter(self.results.values())).shells if self.results else []
            n = len(self.x_points[0]) if self.x_points else 0
            w.writerow([f"x{j}" for j in range(n)] + [f"w{j}" for j in range(n)]
                       + ["score", "slope", "flagged"] + [f"mass_h{h}" for h in first][:nshell])
            for score, i, d, r in self.rows():
                w.writerow([format(v, ".17g") for v in self.x_points[i]]
                           + [format(v, ".17g") for v in self.directions[d]]
                           + [format(score, ".17g"), format(r.slope, ".17g"), int(not r.member)]
                           + [format(m, ".17g") for m in r.masses])


def wavefront_scan(u, x_points, directions, s, p, M, part, aperture=0.25, eps0=0.5, radius=0.9 * math.pi):
    """Membership probes at every (x0, direction) pair; flagged pairs estimate the wave-front set."""
    M = as_anisotropy(M)
    lat = u.lattice
    dirs = unit_directions(M, directions) if np.ndim(directions) == 0 else np.asarray(directions, float)
    x_points = [tuple(float(t) for t in x) for x in x_points]
    grid = lat.freq_grid()
    sectors = [ConicSector(tuple(om), aperture, eps0) for om in dirs]
    psis = [sector_values(sec, M, grid) for sec in sectors]
    reaches = [sec.reach(M, lat) for sec in sectors]
    results = {}
    for i, x0 in enumerate(x_points):
        v = u.phys() * cutoff_function(x0, radius, lat).phys()
        vhat = np.fft.fftn(v) / lat.count
        for d, sec in enumerate(sectors):
            params = {"x0": list(x0), "sector": sec.to_dict(), "s": s}
            results[(i, d)] = _probe(vhat, psis[d], part, s, p, reaches[d], params)
    return WavefrontTable(x_points, dirs, results, s, p)


def local_scan(u, x_points, s, p, M, part, radius=0.9 * math.pi):
    """Sector-free probes; flagged points estimate the singular support."""
    return {i: mcl_membership_score(u, x, None, s, p, M, part, radius) for i, x in enumerate(x_points)}


def regularity_pipeline(a, u, x0, sec, s, r, delta, p, M, m, part, N_terms=2, radius=0.9 * math.pi, c0=0.5):
    """Numerical walk through the microlocal regularity argument.

    (1) localize by the cutoff phi, (2) split a = a_sharp + a_natural, (3) f = a(psi(D) u)
    and g = phi f - a_natural(psi(D) u), (4) apply the microlocal parametrix of
    a_sharp to g, (5) score the result at order s next to the direct score of u."""
    from .parametrix import microlocal_parametrix
    from .quantize import kohn_nirenberg_apply
    from .split import exact_kappa, taylor_split

    M = as_anisotropy(M)
    lat = u.lattice
    kap = float(exact_kappa(r, p, lat.n, M))
    lo = m + (delta - 1) * kap
    if not (lo < s <= r + m):
        raise ValueError(f"order s={s} outside the admissible window ({lo}, {r + m}]")
    if x0 is None:
        phi = GridFunction(lat, PHYSICAL, np.ones(lat.shape, dtype=complex))
    else:
        phi = cutoff_function(x0, radius, lat)
    psi = sector_symbol(sec, M, lat, measure=False)
    psi_u = GridFunction(lat, FREQUENCY, psi.on(lat) * u.freq())
    split = taylor_split(a, delta, part, r, p)
    f = kohn_nirenberg_apply(a, psi_u)
    g = f.with_values(phi.phys() * f.phys(), PHYSICAL) - kohn_nirenberg_apply(split.a_natural, psi_u)
    b = microlocal_parametrix(split.a_sharp, lat, m, sec, phi, N_terms, M, c0=c0, delta=0.0)
    recovered = kohn_nirenberg_apply(b, g)
    target = GridFunction(lat, PHYSICAL, phi.phys() * psi_u.phys())
    diff = recovered - target
    residual = lp(diff.freq(), 2) / max(lp(target.freq(), 2), 1e-300)
    direct = mcl_membership_score(u, x0, sec, s, p, M, part, radius)
    apriori = mcl_membership_score(u, x0, sec, s - delta * kap, p, M, part, radius)
    result = mcl_membership_score(recovered, None, sec, s, p, M, part, radius)
    return {
        "kappa": kap,
        "window": [lo, r + m],
        "residual": residual,
        "direct": direct.to_dict(),
        "apriori": apriori.to_dict(),
        "pipeline": result.to_dict(),
        "f_masses": mcl_membership_score(f, x0, sec, s - m, p, M, part, radius).masses,
        "g_masses": mcl_membership_score(g, None, sec, s - m, p, M, part, radius).masses,
    }
