#-*- coding: utf-8 -*-
'''
Heatmaps of slab-averaged concentration.

Presentation only. matplotlib is an optional dependency
(``pip install mesaplume[render]``) and imported on first use.

:func:`render_heatmap` writes one pixel per grid column (``nx`` wide,
``ny`` high, ``y`` upwards) on a logarithmic color scale, with the
cells holding microspheres marked white. :func:`render_figure` adds
axes, a colorbar and a title.
'''
import logging
import os

import numpy as np

from mesaplume.exceptions import StorageError
from mesaplume.exceptions import UserError
from mesaplume.grid import read_slab_csv
from mesaplume.grid import read_snapshot
from mesaplume.grid import slab_mean


LOG = logging.getLogger(__name__)


DEFAULT_CMAP = 'viridis'
FOOTPRINT_COLOR = (1.0, 1.0, 1.0, 1.0)
UNITS = 'molecules/m^3'


def _matplotlib():
    try:
        import matplotlib
        from matplotlib import colors
        from matplotlib import image
    except ImportError:
        raise UserError(('Rendering needs matplotlib;'
            ' install it with "pip install mesaplume[render]".'))
    return matplotlib, colors, image


def load_slab(path, z_center=2.0, half_width=0.5):
    '''Read a slab CSV or a field snapshot (averaged over the slab).

    :rtype tuple:
        ``(xs, ys, values, meta)``
    :raises StorageError: missing or unreadable input.
    '''
    if not os.path.isfile(path):
        raise StorageError('No such file: {!r}.'.format(path))
    if path.lower().endswith('.snap'):
        field = read_snapshot(path)
        values = slab_mean(field, z_center, half_width)
        meta = {'time_s': repr(field.time), 'slab_center': repr(z_center),
                'slab_half_width': repr(half_width)}
        return field.grid.axis('x'), field.grid.axis('y'), values, meta
    elif path.lower().endswith('.csv'):
        return read_slab_csv(path)
    raise StorageError('Cannot render {!r}: expected a .csv slab or a .snap file.'.format(path))


def _log_norm(colors, values):
    positive = values[values > 0]
    if positive.size == 0:
        return None
    vmin = float(positive.min())
    vmax = float(positive.max())
    if vmax <= vmin:
        vmin = vmax / 10.0
    return colors.LogNorm(vmin=vmin, vmax=vmax, clip=True)


def _nearest(axis, value):
    return int(np.argmin(np.abs(axis - value)))


def footprint_pixels(xs, ys, positions):
    '''``(i, j)`` pixels of the grid columns nearest to ``positions``.'''
    return sorted({(_nearest(xs, x), _nearest(ys, y)) for x, y, *__ in positions})


def render_heatmap(path, values, xs=None, ys=None, footprint=None,
    cmap=DEFAULT_CMAP):
    '''Write ``values`` (``(nx, ny)``) as an image of exactly ``nx`` by
    ``ny`` pixels.

    :param list footprint:
        Source positions (metres) to mark; needs ``xs`` and ``ys``.
    '''
    matplotlib, colors, image = _matplotlib()
    values = np.asarray(values, dtype=np.float64)
    colormap = matplotlib.colormaps[cmap]

    rgba = np.empty(values.shape + (4,))
    rgba[...] = colormap(0.0)
    norm = _log_norm(colors, values)
    if norm is not None:
        covered = values > 0
        rgba[covered] = colormap(norm(values[covered]))

    if footprint:
        for i, j in footprint_pixels(xs, ys, footprint):
            rgba[i, j] = FOOTPRINT_COLOR

    image.imsave(path, np.ascontiguousarray(rgba.transpose(1, 0, 2)),
                 origin='lower')
    LOG.info('Wrote heatmap %r (%sx%s).', path, values.shape[0], values.shape[1])
    return path


def render_figure(path, xs, ys, values, footprint=None, title=None,
    cmap=DEFAULT_CMAP):
    '''Annotated heatmap with axes in metres and a colorbar.'''
    __, colors, __ = _matplotlib()
    from matplotlib.figure import Figure

    values = np.asarray(values, dtype=np.float64)
    dx = xs[1] - xs[0] if len(xs) > 1 else 1.0
    dy = ys[1] - ys[0] if len(ys) > 1 else 1.0
    extent = (xs[0] - dx / 2, xs[-1] + dx / 2, ys[0] - dy / 2, ys[-1] + dy / 2)

    norm = _log_norm(colors, values) or colors.LogNorm(vmin=1.0, vmax=10.0)
    masked = np.ma.masked_less_equal(values.T, 0.0)

    fig = Figure(figsize=(6.4, 5.2))
    ax = fig.add_subplot()
    im = ax.imshow(masked, origin='lower', extent=extent, cmap=cmap, norm=norm)
    cbar = fig.colorbar(im, ax=ax, shrink=0.84, pad=0.02)
    cbar.set_label(UNITS)
    if footprint:
        fx = [p[0] for p in footprint]
        fy = [p[1] for p in footprint]
        ax.scatter(fx, fy, s=4, c='white', marker='s', linewidths=0)
    ax.set_xlabel('x [m]')
    ax.set_ylabel('y [m]')
    if title:
        ax.set_title(title)
    fig.savefig(path, bbox_inches='tight')
    LOG.info('Wrote figure %r.', path)
    return path
