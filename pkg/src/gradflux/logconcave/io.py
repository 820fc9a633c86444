"""Text grids for densities: ``# density v1``.

Layout::

    # density v1
    dimension 2
    bounds lo_1 hi_1 lo_2 hi_2
    step h_1 h_2
    shape n_1 n_2
    values
    <row-major values, one line per index of the leading axes>
"""

import numpy as np

from ..errors import FormatError
from .density1d import DensityGrid1D
from .densitynd import LogConcaveDensityND

__all__ = ["save_density", "load_density", "tabulate", "GridDensity"]

HEADER = "# density v1"


class GridDensity:
    """Density values on a regular box grid in dimension 1 to 3."""

    def __init__(self, lo, step, values):
        self.values = np.asarray(values, dtype=float)
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.step = np.atleast_1d(np.asarray(step, dtype=float))
        if self.values.ndim != self.lo.size or self.step.size != self.lo.size:
            raise ValueError("lo, step and values disagree on the dimension")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("density values must be finite and nonnegative")

    @property
    def dimension(self):
        return self.lo.size

    @property
    def shape(self):
        return self.values.shape

    @property
    def hi(self):
        return self.lo + self.step * (np.array(self.shape) - 1)

    def axes(self):
        return [lo + h * np.arange(k) for lo, h, k in zip(self.lo, self.step, self.shape)]

    def to_1d(self, normalize=True):
        if self.dimension != 1:
            raise ValueError("not a one-dimensional grid")
        return DensityGrid1D(self.lo[0], self.step[0], self.values, normalize=normalize)

    def to_density(self):
        """A :class:`LogConcaveDensityND` with ``-log`` of the multilinear interpolant."""
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(self.axes(), self.values, bounds_error=False,
                                         fill_value=0.0)

        def g(x):
            x = np.asarray(x, dtype=float)
            v = interp(x.reshape(-1, self.dimension)).reshape(x.shape[:-1])
            with np.errstate(divide="ignore"):
                return -np.log(v)

        return LogConcaveDensityND(g, self.lo, self.hi, name="grid")


def tabulate(rho, shape):
    """Unnormalized values ``exp(-(f - f_shift))`` of a density on its box."""
    shape = tuple(np.broadcast_to(shape, (rho.n,)))
    axes = [np.linspace(a, b, k) for a, b, k in zip(rho.lo, rho.hi, shape)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    with np.errstate(over="ignore", under="ignore"):
        vals = np.exp(-(rho.f(mesh) - rho.f_shift))
    step = [(b - a) / (k - 1) for a, b, k in zip(rho.lo, rho.hi, shape)]
    return GridDensity(rho.lo, step, vals)


def save_density(path, grid):
    """Write a :class:`GridDensity` or :class:`DensityGrid1D`."""
    if isinstance(grid, DensityGrid1D):
        grid = GridDensity([grid.s_min], [grid.h], grid.values)
    d = grid.dimension
    with open(path, "w") as fh:
        fh.write(HEADER + "\n")
        fh.write(f"dimension {d}\n")
        fh.write("bounds " + " ".join(f"{float(a)!r} {float(b)!r}" for a, b in zip(grid.lo, grid.hi)) + "\n")
        fh.write("step " + " ".join(repr(float(h)) for h in grid.step) + "\n")
        fh.write("shape " + " ".join(str(k) for k in grid.shape) + "\n")
        fh.write("values\n")
        rows = grid.values.reshape(-1, grid.shape[-1])
        for row in rows:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_density(path):
    """Read a ``# density v1`` file into a :class:`GridDensity`."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != HEADER:
        raise FormatError(f"{path}: missing '{HEADER}' header")
    fields = {}
    i = 1
    while i < len(lines) and lines[i] != "values":
        key, *rest = lines[i].split()
        fields[key] = rest
        i += 1
    try:
        d = int(fields["dimension"][0])
        bounds = np.array(fields["bounds"], dtype=float).reshape(d, 2)
        step = np.array(fields["step"], dtype=float)
        shape = tuple(int(k) for k in fields["shape"])
        vals = np.array(" ".join(lines[i + 1:]).split(), dtype=float)
    except (KeyError, ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed density file ({exc})") from exc
    if step.size != d or len(shape) != d or vals.size != int(np.prod(shape)):
        raise FormatError(f"{path}: sizes disagree with the declared shape")
    expect_hi = bounds[:, 0] + step * (np.array(shape) - 1)
    if not np.allclose(expect_hi, bounds[:, 1], rtol=1e-9, atol=1e-12):
        raise FormatError(f"{path}: bounds disagree with step and shape")
    return GridDensity(bounds[:, 0], step, vals.reshape(shape))
