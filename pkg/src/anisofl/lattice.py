"""Periodic grids on [0, 2pi)^n, their integer frequency boxes and the DFT.

Arrays are kept in numpy FFT storage order along every axis, so index k of
an axis of length N holds frequency k for k < N/2 and k - N otherwise.
"""
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

PHYSICAL = "physical"
FREQUENCY = "frequency"


@dataclass(frozen=True)
class FrequencyLattice:
    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not 1 <= len(sizes) <= 3:
            raise ValueError("lattice dimension must be 1, 2 or 3")
        if any(s <= 0 or s % 2 for s in sizes):
            raise ValueError(f"lattice sizes must be even and positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def parse(cls, text):
        return cls(tuple(int(t) for t in str(text).lower().split("x")))

    @property
    def n(self):
        return len(self.sizes)

    @property
    def shape(self):
        return self.sizes

    @property
    def count(self):
        return math.prod(self.sizes)

    def label(self):
        return "x".join(str(s) for s in self.sizes)

    def freq_axes(self):
        return [np.fft.fftfreq(N, 1.0 / N).round().astype(np.int64) for N in self.sizes]

    def x_axes(self):
        return [2 * np.pi * np.arange(N) / N for N in self.sizes]

    def freq_grid(self):
        """Integer frequencies, shape (*sizes, n)."""
        return np.stack(np.meshgrid(*self.freq_axes(), indexing="ij"), axis=-1)

    def x_grid(self):
        return np.stack(np.meshgrid(*self.x_axes(), indexing="ij"), axis=-1)

    def freq_index(self, xi):
        """Storage indices of integer frequencies (wrapping modulo the sizes)."""
        xi = np.asarray(np.round(xi), dtype=np.int64)
        return tuple(xi[..., j] % N for j, N in enumerate(self.sizes))

    def in_box(self, xi):
        xi = np.asarray(xi)
        ok = np.ones(xi.shape[:-1], dtype=bool)
        for j, N in enumerate(self.sizes):
            ok &= (xi[..., j] >= -N // 2) & (xi[..., j] <= N // 2 - 1)
        return ok


def as_lattice(lat):
    if isinstance(lat, FrequencyLattice):
        return lat
    if isinstance(lat, str):
        return FrequencyLattice.parse(lat)
    if isinstance(lat, int):
        return FrequencyLattice((lat,))
    return FrequencyLattice(tuple(lat))


@dataclass(frozen=True)
class GridFunction:
    lattice: FrequencyLattice
    side: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.side not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown side {self.side!r}")
        v = np.array(self.values, dtype=complex)
        if v.shape != self.lattice.shape:
            if v.size != self.lattice.count:
                raise ValueError("value count does not match the lattice")
            v = v.reshape(self.lattice.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def freq(self):
        """Frequency-side values (transforming if needed)."""
        return self.values if self.side == FREQUENCY else forward_transform(self).values

    def phys(self):
        return self.values if self.side == PHYSICAL else inverse_transform(self).values

    def with_values(self, values, side=None):
        return GridFunction(self.lattice, side or self.side, values)

    def __add__(self, other):
        _same_lattice(self, other)
        if self.side == other.side:
            return self.with_values(self.values + other.values)
        return GridFunction(self.lattice, FREQUENCY, self.freq() + other.freq())

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c):
        return self.with_values(self.values * c)


def _same_lattice(u, v):
    if u.lattice != v.lattice:
        raise ValueError(f"lattice mismatch: {u.lattice.label()} vs {v.lattice.label()}")


def physical(lat, values):
    return GridFunction(as_lattice(lat), PHYSICAL, values)


def spectral(lat, values):
    return GridFunction(as_lattice(lat), FREQUENCY, values)


def forward_transform(u):
    if u.side != PHYSICAL:
        raise ValueError("forward transform expects a physical-side function")
    return GridFunction(u.lattice, FREQUENCY, np.fft.fftn(u.values) / u.lattice.count)


def inverse_transform(v):
    if v.side != FREQUENCY:
        raise ValueError("inverse transform expects a frequency-side function")
    return GridFunction(v.lattice, PHYSICAL, np.fft.ifftn(v.values) * v.lattice.count)


def fft_x(a, axes_count):
    """Normalized forward DFT over the leading ``axes_count`` axes of an array."""
    axes = tuple(range(axes_count))
    n = math.prod(a.shape[:axes_count])
    return np.fft.fftn(a, axes=axes) / n


def ifft_x(a, axes_count):
    axes = tuple(range(axes_count))
    n = math.prod(a.shape[:axes_count])
    return np.fft.ifftn(a, axes=axes) * n


def frequency_coordinates(lat):
    """All frequencies in row-major storage order plus a coordinate -> flat index map."""
    lat = as_lattice(lat)
    coords = lat.freq_grid().reshape(-1, lat.n)
    index = {tuple(int(c) for c in row): i for i, row in enumerate(coords)}
    return coords, index


def unit_mode(lat, xi0):
    """Frequency-side function with a unit mass at xi0."""
    lat = as_lattice(lat)
    v = np.zeros(lat.shape, dtype=complex)
    v[lat.freq_index(np.asarray(xi0))] = 1.0
    return GridFunction(lat, FREQUENCY, v)


def plane_wave(lat, xi0):
    lat = as_lattice(lat)
    x = lat.x_grid()
    return GridFunction(lat, PHYSICAL, np.exp(1j * x @ np.asarray(xi0, dtype=float)))


def random_band_limited(lat, rng, modes=8, fraction=0.5, band=None):
    """Random function whose frequencies lie in the inner box |xi_j| < fraction*N_j/2,
    or in |xi_j| < band_j when a lattice-independent band is given.

    Coefficients are unit-modulus with random phases."""
    lat = as_lattice(lat)
    v = np.zeros(lat.shape, dtype=complex)
    if band is None:
        lim = [max(1, int(fraction * N / 2)) for N in lat.sizes]
    else:
        lim = [int(b) for b in np.broadcast_to(band, (lat.n,))]
        if any(L < 1 or L > N // 2 for L, N in zip(lim, lat.sizes)):
            raise ValueError("band does not fit the lattice")
    for _ in range(modes):
        xi = [int(rng.integers(-L, L)) for L in lim]
        v[lat.freq_index(np.array(xi))] += np.exp(2j * np.pi * rng.random())
    return GridFunction(lat, FREQUENCY, v)


# serialization

def header(u):
    return {
        "format": "grid-function",
        "side": u.side,
        "sizes": list(u.lattice.sizes),
        "index_columns": ["k%d" % j for j in range(u.lattice.n)],
        "index_meaning": "frequency" if u.side == FREQUENCY else "grid point",
    }


def write_grid_function(u, stem):
    """Write ``stem.csv`` (index columns then re, im) and ``stem.json``."""
    stem = str(stem)
    with open(stem + ".json", "w") as fh:
        fh.write(dumps(header(u)) + "\n")
    if u.side == FREQUENCY:
        idx = u.lattice.freq_grid().reshape(-1, u.lattice.n)
    else:
        idx = np.stack(np.meshgrid(*[np.arange(N) for N in u.lattice.sizes], indexing="ij"),
                       axis=-1).reshape(-1, u.lattice.n)
    vals = u.values.reshape(-1)
    with open(stem + ".csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header(u)["index_columns"] + ["re", "im"])
        for k, z in zip(idx, vals):
            w.writerow([int(c) for c in k] + [repr(float(z.real)), repr(float(z.imag))])


def read_grid_function(stem):
    stem = str(stem)
    with open(stem + ".json") as fh:
        meta = json.load(fh)
    lat = FrequencyLattice(tuple(meta["sizes"]))
    vals = np.zeros(lat.shape, dtype=complex)
    with open(stem + ".csv", newline="") as fh:
        r = csv.reader(fh)
        next(r)
        for row in r:
            k = np.array([int(c) for c in row[: lat.n]])
            if meta["side"] == FREQUENCY:
                pos = lat.freq_index(k)
            else:
                pos = tuple(int(c) for c in k)
            vals[pos] = complex(float(row[-2]), float(row[-1]))
    return GridFunction(lat, meta["side"], vals)


def _stable(obj):
    if isinstance(obj, dict):
        return {str(k): _stable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_stable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(float(obj))
    if isinstance(obj, complex):
        return [_Float(obj.real), _Float(obj.imag)]
    return obj


class _Float(float):
    def __repr__(self):
        if math.isnan(self):
            return '"nan"'
        if math.isinf(self):
            return '"inf"' if self > 0 else '"-inf"'
        return format(float(self), ".17g")


def dumps(obj):
    """JSON text with sorted keys and floats at 17 significant digits."""
    return _encode(_stable(obj))


def _encode(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _encode(obj[k], indent + 1) for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, _Float):
        return repr(obj)
    return json.dumps(obj)
