#-*- coding: utf-8 -*-
'''
Explicit finite-difference solver for the advection-diffusion equation::

    dC/dt = D lap(C) - v . grad(C) + S

One step (forward Euler, double buffered)::

    1. sample the wind on every cell for this step
    2. interior cells: C' = C + dt * (D lap(C) - v . grad(C))
       7-point central Laplacian, first-order upwind advection
    3. add the molecules released by the sources during [t, t + dt)
    4. boundaries: absorbing ground plane (k = 0); first-order
       advective outflow on the lateral and top faces, zero on inflow
    5. clamp round-off negatives, update the mass budget

Everything reads the previous buffer only, so the result does not
depend on evaluation order.

Mass budget: mass crossing from the interior into the ground plane is
deposited there and counted as *absorbed* when the plane is zeroed.
Mass crossing into the lateral/top boundary cells plus whatever those
cells lose in their own update counts as *boundary outflow*.
For zero wind the budget closes to round-off; a divergent wind field
breaks closure because the advection term is not in conservative form.
'''
import logging
import math

import numpy as np

from mesaplume import kernels
from mesaplume.exceptions import DomainError
from mesaplume.exceptions import NumericalError
from mesaplume.exceptions import StabilityError
from mesaplume.grid import ConcentrationField
from mesaplume.grid import is_interior
from mesaplume.grid import slab_mean
from mesaplume.grid import total_mass
from mesaplume.wind import WindField
from mesaplume.wind import velocity_bounds


LOG = logging.getLogger(__name__)


# negatives above -NEGATIVE_TOLERANCE * max are round-off
NEGATIVE_TOLERANCE = 1e-9
# relative round-off allowed on top of the velocity bound
VELOCITY_SLACK = 1e-9

BUDGET_HEADER = ('step', 'time_s', 'released', 'in_domain',
                 'absorbed_ground', 'boundary_outflow')


class SolverConfig:
    '''Numerical settings.

    :var float diffusion_coefficient: m^2/s
    :var float dt: s
    :var int total_steps:
    :var bool cfl_runtime_check:
        Check the sampled wind against the speed bounds and the
        advective limit every step.
    :var float noise_clamp_sigmas:
        Noise clamp used for the wind speed bound of the CFL pre-check.
    :var int nan_check_every:
        Steps between checks for non-finite values.
    :var int progress_every:
        Steps between progress log lines.
    :var str backend:
        ``'numpy'``, ``'numba'`` or ``'auto'``, see :mod:`mesaplume.kernels`.
    '''

    def __init__(self, diffusion_coefficient, dt, total_steps,
        cfl_runtime_check=True, noise_clamp_sigmas=3.0, nan_check_every=100,
        progress_every=3600, backend='numpy'):
        self.diffusion_coefficient = float(diffusion_coefficient)
        self.dt = float(dt)
        self.total_steps = int(total_steps)
        self.cfl_runtime_check = bool(cfl_runtime_check)
        self.noise_clamp_sigmas = float(noise_clamp_sigmas)
        self.nan_check_every = max(1, int(nan_check_every))
        self.progress_every = max(1, int(progress_every))
        self.backend = backend
        kernels.resolve_backend(backend)

        if not self.dt > 0:
            raise ValueError('dt must be > 0, got {!r}.'.format(self.dt))
        if self.diffusion_coefficient < 0:
            raise ValueError('diffusion_coefficient must be >= 0.')
        if self.total_steps < 1:
            raise ValueError('total_steps must be >= 1, got {!r}.'.format(
                self.total_steps))

    def as_dict(self):
        return {
            'diffusion_coefficient': self.diffusion_coefficient,
            'dt': self.dt,
            'total_steps': self.total_steps,
            'cfl_runtime_check': self.cfl_runtime_check,
            'noise_clamp_sigmas': self.noise_clamp_sigmas,
            'nan_check_every': self.nan_check_every,
            'progress_every': self.progress_every,
            'backend': self.backend,
        }

    def __repr__(self):
        return '<SolverConfig D={s.diffusion_coefficient!r} dt={s.dt!r} steps={s.total_steps}>'.format(s=self)


class MassBudget:
    '''Where the released molecules went, in molecules.'''

    def __init__(self, released=0.0, in_domain=0.0, absorbed_ground=0.0,
        boundary_outflow=0.0):
        self.released = released
        self.in_domain = in_domain
        self.absorbed_ground = absorbed_ground
        self.boundary_outflow = boundary_outflow

    @property
    def imbalance(self):
        return self.released - (self.in_domain + self.absorbed_ground
                                + self.boundary_outflow)

    def copy(self):
        return MassBudget(self.released, self.in_domain,
                          self.absorbed_ground, self.boundary_outflow)

    def row(self, step, time):
        return (step, time, self.released, self.in_domain,
                self.absorbed_ground, self.boundary_outflow)

    def as_dict(self):
        return {
            'released': self.released,
            'in_domain': self.in_domain,
            'absorbed_ground': self.absorbed_ground,
            'boundary_outflow': self.boundary_outflow,
        }

    def __repr__(self):
        return ('<MassBudget released={s.released:.6g} in_domain={s.in_domain:.6g}'
            ' absorbed={s.absorbed_ground:.6g} outflow={s.boundary_outflow:.6g}>'
            ).format(s=self)


# Stability -------------------------------------------------------------------


class CflReport:
    '''Outcome of :func:`check_cfl`. Limits are in seconds; an axis
    without velocity (or ``D = 0``) imposes no limit (``inf``).'''

    def __init__(self, dt, advective_limit, diffusive_limit, vmax,
        binding_axis=None):
        self.dt = dt
        self.advective_limit = advective_limit
        self.diffusive_limit = diffusive_limit
        self.vmax = tuple(vmax)
        self.binding_axis = binding_axis

    @property
    def advective_ok(self):
        return self.dt <= self.advective_limit

    @property
    def diffusive_ok(self):
        return self.dt <= self.diffusive_limit

    @property
    def passed(self):
        return self.advective_ok and self.diffusive_ok

    def describe(self):
        lines = [
            'dt               = {!r} s'.format(self.dt),
            'advective limit  = {:.6g} s{}'.format(
                self.advective_limit,
                ' ({}-axis)'.format(self.binding_axis) if self.binding_axis else ''),
            'diffusive limit  = {:.6g} s'.format(self.diffusive_limit),
            'velocity bounds  = ({:.6g}, {:.6g}, {:.6g}) m/s'.format(*self.vmax),
            'status           = {}'.format('pass' if self.passed else 'FAIL'),
        ]
        return '\n'.join(lines)

    def failure_message(self):
        reasons = []
        if not self.advective_ok:
            reasons.append('dt = {!r} s exceeds the advective limit {:.6g} s'.format(
                self.dt, self.advective_limit))
        if not self.diffusive_ok:
            reasons.append('dt = {!r} s exceeds the diffusive limit {:.6g} s'.format(
                self.dt, self.diffusive_limit))
        return 'CFL check failed: {}.'.format('; '.join(reasons))

    def as_dict(self):
        return {
            'dt': self.dt,
            'advective_limit': self.advective_limit,
            'diffusive_limit': self.diffusive_limit,
            'vmax': list(self.vmax),
            'binding_axis': self.binding_axis,
            'passed': self.passed,
        }

    def __repr__(self):
        return '<CflReport passed={s.passed} adv={s.advective_limit:.4g} diff={s.diffusive_limit:.4g}>'.format(s=self)


def check_cfl(grid, config, vmax):
    '''Check ``config.dt`` against the advective and diffusive limits::

        dt <= min(dx / max|vx|, dy / max|vy|, dz / max|vz|)
        dt <= min(dx^2, dy^2, dz^2) / (2 * D * 3)

    :param tuple vmax: per-axis speed bounds, m/s.
    '''
    if any(v < 0 for v in vmax):
        raise ValueError('Velocity bounds must be >= 0, got {!r}.'.format(vmax))

    advective = math.inf
    binding = None
    for axis, step, speed in zip('xyz', grid.spacing, vmax):
        if speed > 0 and step / speed < advective:
            advective = step / speed
            binding = axis

    D = config.diffusion_coefficient
    if D > 0:
        diffusive = min(s * s for s in grid.spacing) / (2.0 * D * 3.0)
    else:
        diffusive = math.inf

    return CflReport(config.dt, advective, diffusive, vmax, binding)


def precheck(grid, config, wind_params):
    '''CFL check with the noise-clamped wind bound.

    :raises StabilityError: if either limit is violated.
    '''
    vmax = velocity_bounds(wind_params, grid.z_max,
                           config.noise_clamp_sigmas)
    report = check_cfl(grid, config, vmax)
    if not report.passed:
        raise StabilityError(report.failure_message())
    return report


# Stencils --------------------------------------------------------------------


def _require_interior(grid, cell):
    if not is_interior(grid, cell):
        raise ValueError('Cell {!r} is not an interior cell.'.format(tuple(cell)))


def diffusion_term(field, cell, diffusion_coefficient):
    '''``D * lap(C)`` at an interior cell, 7-point central differences.'''
    grid = field.grid
    _require_interior(grid, cell)
    C = field.values
    i, j, k = cell
    c = C[i, j, k]
    lap = ((C[i + 1, j, k] - 2.0 * c + C[i - 1, j, k]) / grid.dx ** 2
         + (C[i, j + 1, k] - 2.0 * c + C[i, j - 1, k]) / grid.dy ** 2
         + (C[i, j, k + 1] - 2.0 * c + C[i, j, k - 1]) / grid.dz ** 2)
    return diffusion_coefficient * float(lap)


def _upwind(c, behind, ahead, velocity, step):
    if velocity >= 0:
        return velocity * (c - behind) / step
    return velocity * (ahead - c) / step


def advection_term(field, cell, wind):
    '''``-v . grad(C)`` at an interior cell, first-order upwind per axis.'''
    grid = field.grid
    _require_interior(grid, cell)
    C = field.values
    i, j, k = cell
    c = C[i, j, k]
    flux = (_upwind(c, C[i - 1, j, k], C[i + 1, j, k], wind.vx, grid.dx)
          + _upwind(c, C[i, j - 1, k], C[i, j + 1, k], wind.vy, grid.dy)
          + _upwind(c, C[i, j, k - 1], C[i, j, k + 1], wind.vz, grid.dz))
    return -float(flux)


_INNER = (slice(1, -1), slice(1, -1), slice(1, -1))


def _shifted(C, axis, offset):
    index = [slice(1, -1)] * 3
    index[axis] = slice(1 + offset, C.shape[axis] - 1 + offset)
    return C[tuple(index)]


def interior_rate(C, velocity, grid, diffusion_coefficient):
    '''``D lap(C) - v . grad(C)`` on all interior cells at once,
    shaped ``(nx - 2, ny - 2, nz - 2)``.'''
    c = C[_INNER]
    rate = np.zeros_like(c)
    for axis, step in enumerate(grid.spacing):
        behind = _shifted(C, axis, -1)
        ahead = _shifted(C, axis, +1)
        if diffusion_coefficient:
            rate += diffusion_coefficient * (ahead - 2.0 * c + behind) / step ** 2
        v = velocity[axis][_INNER]
        gradient = np.where(v >= 0, c - behind, ahead - c) / step
        rate -= v * gradient
    return rate


# Sources ---------------------------------------------------------------------


def inject_sources(field, sources, model, t, dt, budget):
    '''Add the molecules released during ``[t, t + dt)`` (seconds) to
    the cells holding microspheres.

    :param object sources:
        A :class:`mesaplume.scenarios.Deployment` or the
        ``(cells, counts)`` pair from ``Deployment.source_cells``.
    :rtype float:
        Molecules injected.
    '''
    if hasattr(sources, 'source_cells'):
        sources = sources.source_cells(field.grid)
    cells, counts = sources
    if len(counts) == 0:
        return 0.0
    if np.any(cells[:, 2] < 1):
        raise DomainError('Sources must not sit on the ground plane.')

    per_sphere = model.release_between_seconds(t, t + dt)
    if per_sphere == 0.0:
        return 0.0
    molecules = per_sphere * counts
    field.values[cells[:, 0], cells[:, 1], cells[:, 2]] += (
        molecules / field.grid.cell_volume)
    injected = float(np.sum(molecules))
    budget.released += injected
    return injected


# Boundaries ------------------------------------------------------------------


def _face_outflow(P, velocity, grid, dt, D, axis, side):
    '''Molecules per cell volume leaving the interior through one face
    during ``dt``; ``side`` is -1 (low) or +1 (high).

    Returns the per-cell flux over the interior part of the face.
    '''
    step = grid.spacing[axis]
    index_a = [slice(1, -1)] * 3
    index_b = [slice(1, -1)] * 3
    if side > 0:
        index_a[axis], index_b[axis] = -2, -1
    else:
        index_a[axis], index_b[axis] = 1, 0
    index_a, index_b = tuple(index_a), tuple(index_b)

    c_a, c_b = P[index_a], P[index_b]
    # normal velocity, outward positive, taken at the interior cell
    u = side * velocity[axis][index_a]
    flux = dt / step * u * np.where(u > 0, c_a, c_b)
    if D:
        flux = flux + D * dt / step ** 2 * (c_a - c_b)
    return flux


def _outflow_values(P, velocity, grid, dt):
    '''Boundary update for every cell (only boundary cells are used):
    per outward axis in the order x, y, z the advective outflow update
    is applied; inflow on any outward axis zeroes the cell.'''
    values = P.copy()
    inflow = np.zeros(P.shape, dtype=bool)
    nz = grid.nz
    for axis, step in enumerate(grid.spacing):
        v = velocity[axis]
        for side in (-1, +1):
            if axis == 2 and side < 0:
                continue  # ground plane
            b = [slice(None)] * 3
            a = [slice(None)] * 3
            if side > 0:
                b[axis], a[axis] = -1, -2
            else:
                b[axis], a[axis] = 0, 1
            b, a = tuple(b), tuple(a)
            u = side * v[b]
            # upwind difference across the face, outward direction
            values[b] = np.where(u > 0,
                values[b] - dt * u * (P[b] - P[a]) / step, values[b])
            inflow[b] |= u <= 0
    values[inflow] = 0.0
    if nz:
        values[:, :, 0] = 0.0
    return values


def lateral_mask(grid):
    '''Boolean mask of the lateral and top boundary cells (ground
    plane excluded).'''
    mask = np.zeros(grid.shape, dtype=bool)
    mask[0, :, :] = mask[-1, :, :] = True
    mask[:, 0, :] = mask[:, -1, :] = True
    mask[:, :, -1] = True
    mask[:, :, 0] = False
    return mask


def apply_boundaries(field_prev, field_next, velocity, dt, budget,
    diffusion_coefficient=0.0, mask=None):
    '''Enforce the boundary conditions on ``field_next``.

    ``field_next`` must hold the interior update (and the injected
    sources); its boundary cells still hold the previous values.

    :param tuple velocity: ``(vx, vy, vz)`` arrays of this step.
    '''
    grid = field_prev.grid
    P, N = field_prev.values, field_next.values
    V = grid.cell_volume
    D = diffusion_coefficient
    if mask is None:
        mask = lateral_mask(grid)

    # ground: deposit what crossed from the interior, then absorb it all
    N[1:-1, 1:-1, 0] += _face_outflow(P, velocity, grid, dt, D, 2, -1)
    absorbed = float(np.sum(N[:, :, 0])) * V
    N[:, :, 0] = 0.0
    budget.absorbed_ground += absorbed

    crossing = 0.0
    for axis in range(3):
        for side in (-1, +1):
            if axis == 2 and side < 0:
                continue
            crossing += float(np.sum(
                _face_outflow(P, velocity, grid, dt, D, axis, side)))

    before = float(np.sum(N[mask]))
    N[mask] = _outflow_values(P, velocity, grid, dt)[mask]
    after = float(np.sum(N[mask]))
    budget.boundary_outflow += (crossing + before - after) * V


# Time stepping ---------------------------------------------------------------


class SimulationState:
    '''Mutable state carried from step to step.'''

    def __init__(self, field, budget=None, step=0):
        self.field = field
        self.budget = budget or MassBudget()
        self.step = step
        self.max_velocity = [0.0, 0.0, 0.0]
        self.clamped_cells = 0

    @property
    def time(self):
        return self.field.time

    def __repr__(self):
        return '<SimulationState step={s.step} t={s.time!r}>'.format(s=self)


class Solver:
    '''Advances a :class:`SimulationState` one forward-Euler step at a
    time.

    :param GridSpec grid:
    :param SolverConfig config:
    :param WindModelParams wind_params:
    :param ReleaseModel model:
    :param Deployment deployment:
    '''

    def __init__(self, grid, config, wind_params, model, deployment):
        self.grid = grid
        self.config = config
        self.wind_params = wind_params
        self.model = model
        self.deployment = deployment
        self.backend = kernels.resolve_backend(config.backend)
        self.wind = WindField(wind_params, grid, self.backend)
        self.sources = deployment.source_cells(grid)
        self._mask = lateral_mask(grid)
        self._bounds = velocity_bounds(wind_params, grid.z_max,
                                       config.noise_clamp_sigmas)
        self._spare = ConcentrationField(grid)
        self._warned_negative = False

    def initial_state(self, field=None):
        field = field or ConcentrationField(self.grid)
        state = SimulationState(field)
        state.budget.in_domain = total_mass(field)
        return state

    def _check_velocity(self, velocity, step):
        maxima = [float(np.max(np.abs(v))) for v in velocity]
        if self.config.cfl_runtime_check:
            for axis, bound, speed in zip('xyz', self._bounds, maxima):
                if speed > bound * (1.0 + VELOCITY_SLACK):
                    raise StabilityError(('Sampled max |v{}| = {:.6g} m/s at'
                        ' step {} exceeds the {:g}-sigma bound {:.6g} m/s of'
                        ' the CFL pre-check.').format(axis, speed, step,
                            self.config.noise_clamp_sigmas, bound), step=step)
            for axis, spacing, speed in zip('xyz', self.grid.spacing, maxima):
                if speed * self.config.dt > spacing:
                    raise StabilityError(('Runtime CFL violation at step {}:'
                        ' max |v{}| = {:.6g} m/s needs dt <= {:.6g} s,'
                        ' dt = {!r} s.').format(step, axis, speed,
                            spacing / speed, self.config.dt), step=step)
        return maxima

    def step(self, state):
        '''Advance ``state`` by one time step and return it.

        :raises StabilityError: sampled wind breaks the advective limit
            (with ``cfl_runtime_check``).
        :raises NumericalError: non-finite values appeared.
        '''
        config = self.config
        dt = config.dt
        n = state.step
        t = state.field.time

        velocity = self.wind.sample(n, t)
        maxima = self._check_velocity(velocity, n)
        state.max_velocity = [max(a, b) for a, b in zip(state.max_velocity, maxima)]

        prev = state.field
        nxt = self._spare
        P, N = prev.values, nxt.values
        N[...] = P
        if self.backend == 'numba':
            kernels.interior_update(P, N, *velocity, dt,
                config.diffusion_coefficient, *self.grid.spacing)
        else:
            N[_INNER] = P[_INNER] + dt * interior_rate(
                P, velocity, self.grid, config.diffusion_coefficient)

        inject_sources(nxt, self.sources, self.model, t, dt, state.budget)
        apply_boundaries(prev, nxt, velocity, dt, state.budget,
            config.diffusion_coefficient, self._mask)
        self._clamp(N, state)

        if (n + 1) % config.nan_check_every == 0 and not np.all(np.isfinite(N)):
            raise NumericalError(
                'Non-finite concentration after step {}.'.format(n), step=n)

        nxt.time = t + dt
        state.budget.in_domain = total_mass(nxt)
        state.field, self._spare = nxt, prev
        state.step = n + 1
        return state

    def _clamp(self, N, state):
        negative = N < 0
        if not negative.any():
            return
        lowest = float(N.min())
        limit = NEGATIVE_TOLERANCE * float(N.max())
        if lowest < -limit and not self._warned_negative:
            LOG.warning(('Step %s produced concentration %.3g below the'
                ' round-off tolerance; clamping to 0.'), state.step, lowest)
            self._warned_negative = True
        state.clamped_cells += int(np.count_nonzero(negative))
        N[negative] = 0.0


class RunResult:
    '''Everything :func:`run` produces.

    :var list budget_trace: rows as in ``BUDGET_HEADER``.
    :var MassBudget budget: final budget.
    :var CeiAccumulator cei: the accumulator passed in, if any.
    :var dict snapshots: step index -> :class:`ConcentrationField` copy.
    :var dict slabs: step index -> ``(nx, ny)`` slab mean.
    :var CflReport cfl:
    :var tuple max_velocity: largest sampled ``|v|`` per axis.
    :var list fields: every field, with ``retain_fields``.
    '''

    def __init__(self, cfl):
        self.cfl = cfl
        self.budget_trace = []
        self.budget = MassBudget()
        self.cei = None
        self.snapshots = {}
        self.slabs = {}
        self.max_velocity = (0.0, 0.0, 0.0)
        self.fields = []
        self.steps = 0
        self.clamped_cells = 0


def run(grid, config, wind_params, model, deployment, cei=None,
    snapshot_steps=(), slab=(2.0, 0.5), budget_every=1, steps=None,
    retain_fields=False, initial_field=None):
    '''Run the solver for ``config.total_steps`` steps (or ``steps``).

    The field after every step is streamed into ``cei``; snapshots and
    slab means are kept for the steps listed in ``snapshot_steps``
    (step ``n`` means time ``n * dt``).

    :raises StabilityError: from the CFL pre-check or a step.
    :raises NumericalError: from a step.
    '''
    report = precheck(grid, config, wind_params)
    LOG.info('CFL: advective limit %.4g s, diffusive limit %.4g s, dt %s s.',
        report.advective_limit, report.diffusive_limit, config.dt)
    LOG.debug('Solver backend: %s.', kernels.resolve_backend(config.backend))

    total = config.total_steps if steps is None else int(steps)
    wanted = set(int(s) for s in snapshot_steps)
    budget_every = max(1, int(budget_every))
    z_center, half_width = slab

    solver = Solver(grid, config, wind_params, model, deployment)
    state = solver.initial_state(initial_field)
    result = RunResult(report)
    result.cei = cei

    for __ in range(total):
        state = solver.step(state)
        n = state.step
        if cei is not None:
            cei.accumulate(state.field, step=n)
        if n % budget_every == 0 or n == total:
            result.budget_trace.append(state.budget.row(n, state.field.time))
        if n in wanted:
            result.snapshots[n] = state.field.copy()
            result.slabs[n] = slab_mean(state.field, z_center, half_width)
        if retain_fields:
            result.fields.append(state.field.copy())
        if n % config.progress_every == 0:
            LOG.info('Step %s/%s (t = %.1f h), %.4g molecules in domain.',
                n, total, state.field.time / 3600.0, state.budget.in_domain)

    result.budget = state.budget.copy()
    result.max_velocity = tuple(state.max_velocity)
    result.steps = state.step
    result.clamped_cells = state.clamped_cells
    if total:
        LOG.debug('Final budget %r, imbalance %.3g.', result.budget,
            result.budget.imbalance)
    return result
