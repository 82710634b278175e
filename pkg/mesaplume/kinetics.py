#-*- coding: utf-8 -*-
'''
Release kinetics of MeSA-loaded microspheres.

The cumulative release follows the Korsmeyer-Peppas power law::

    M(t) / M_inf = k * t ** n

with ``t`` in hours and ``k`` in ``hours ** -n``, clamped at 1 since a
microsphere cannot release more than its loading.
The solver works in seconds and asks for release in the integrated form
(:meth:`ReleaseModel.release_between_seconds`), which avoids the
singular pointwise rate ``k * n * t ** (n - 1)`` at ``t = 0``.

Also here: the fit of ``k`` and ``n`` to measured release data,
the Chapman-Enskog estimate of the gas diffusion coefficient
and the microsphere / molecule inventory.
'''
import configparser
import csv
import io
import logging
import math

import numpy as np
from scipy import stats

from mesaplume.exceptions import FitError
from mesaplume.exceptions import InsufficientDataError


LOG = logging.getLogger(__name__)


SECONDS_PER_HOUR = 3600.0
AVOGADRO = 6.022e23  # molecules / mol

# published fit
PUBLISHED_K = 0.4429  # hours ** -n
PUBLISHED_N = 0.1789

# fit settings
MAX_ITERATIONS = 100
TOLERANCE = 1e-9
STALL_TOLERANCE = 1e-6
MAX_HALVINGS = 40

# D [cm^2/s] = CE * T^1.5 * sqrt(1/Ma + 1/Mb) / (P * sigma^2 * omega)
CHAPMAN_ENSKOG_CONSTANT = 0.0018583
CM2_TO_M2 = 1e-4

CSV_HEADER = ('time_hours', 'fraction')


# Release model ---------------------------------------------------------------


class ReleaseModel:
    '''Korsmeyer-Peppas parameters plus the per-microsphere cargo.

    :var float k:
        Release rate constant in ``hours ** -n``.
    :var float n:
        Release exponent (dimensionless).
    :var float molecules_per_sphere:
        Mean number of MeSA molecules loaded into one microsphere.
    '''

    def __init__(self, k, n, molecules_per_sphere=1.0):
        if not k > 0:
            raise ValueError('Release constant k must be > 0, got {!r}.'.format(k))
        if not n > 0:
            raise ValueError('Release exponent n must be > 0, got {!r}.'.format(n))
        if not molecules_per_sphere >= 0:
            raise ValueError(('molecules_per_sphere must be >= 0,'
                ' got {!r}.').format(molecules_per_sphere))
        self.k = float(k)
        self.n = float(n)
        self.molecules_per_sphere = float(molecules_per_sphere)

    def fraction_at_seconds(self, t):
        return cumulative_fraction(self, t / SECONDS_PER_HOUR)

    def release_between_seconds(self, t_start, t_end):
        '''Molecules released by one microsphere in ``[t_start, t_end)``,
        times in seconds.'''
        return incremental_release(self,
            t_start / SECONDS_PER_HOUR,
            t_end / SECONDS_PER_HOUR)

    def __eq__(self, other):
        return (isinstance(other, ReleaseModel)
            and (self.k, self.n, self.molecules_per_sphere)
            == (other.k, other.n, other.molecules_per_sphere))

    def __repr__(self):
        return '<ReleaseModel k={s.k!r} n={s.n!r} N={s.molecules_per_sphere!r}>'.format(s=self)


def published_release_model(molecules_per_sphere=1.0):
    return ReleaseModel(PUBLISHED_K, PUBLISHED_N, molecules_per_sphere)


def _power_law(k, n, t):
    return np.minimum(k * np.power(t, n), 1.0)


def cumulative_fraction(model, t):
    '''Fraction of the loading released until ``t`` hours,
    ``min(k * t ** n, 1)``.'''
    if t < 0:
        raise ValueError('Time must be >= 0, got {!r}.'.format(t))
    return float(_power_law(model.k, model.n, t))


def incremental_release(model, t_start, t_end):
    '''Molecules released by a single microsphere between ``t_start``
    and ``t_end`` (hours).

    Summing over consecutive intervals telescopes to
    ``molecules_per_sphere * cumulative_fraction(t_end)``.
    '''
    if t_start < 0:
        raise ValueError('Interval start must be >= 0, got {!r}.'.format(t_start))
    if not t_end > t_start:
        raise ValueError('Empty interval [{!r}, {!r}].'.format(t_start, t_end))
    delta = cumulative_fraction(model, t_end) - cumulative_fraction(model, t_start)
    return model.molecules_per_sphere * delta


def saturation_time(model):
    '''Hours after which the clamp holds the cumulative fraction at 1.'''
    return (1.0 / model.k) ** (1.0 / model.n)


# Release data ----------------------------------------------------------------


class ReleaseDataset:
    '''Measured cumulative release, ``(hours, fraction)`` pairs.'''

    def __init__(self, samples):
        samples = [(float(t), float(f)) for t, f in samples]
        previous = None
        for t, f in samples:
            if t < 0:
                raise ValueError('Negative sample time {!r}.'.format(t))
            if not 0.0 <= f <= 1.0:
                raise ValueError('Fraction {!r} outside [0, 1].'.format(f))
            if previous is not None and t <= previous:
                raise ValueError(('Sample times must be strictly increasing'
                    ' ({!r} after {!r}).').format(t, previous))
            previous = t
        self.samples = samples

    @property
    def times(self):
        return np.array([t for t, __ in self.samples], dtype=float)

    @property
    def fractions(self):
        return np.array([f for __, f in self.samples], dtype=float)

    def __len__(self):
        return len(self.samples)

    def __repr__(self):
        return '<ReleaseDataset samples={}>'.format(len(self.samples))


def synthetic_release_data(model, times, noise=0.0, rng=None):
    '''Generate a :class:`ReleaseDataset` from ``model`` at ``times``
    (hours), optionally with Gaussian noise of standard deviation
    ``noise`` on the fractions. Noisy fractions are clipped to [0, 1].'''
    times = np.asarray(times, dtype=float)
    fractions = _power_law(model.k, model.n, times)
    if noise:
        rng = rng or np.random.default_rng()
        fractions = np.clip(fractions + rng.normal(0.0, noise, times.shape),
                            0.0, 1.0)
    return ReleaseDataset(zip(times.tolist(), fractions.tolist()))


def read_release_csv(path):
    '''Read a two-column ``time_hours,fraction`` CSV file.'''
    with open(path, newline='') as f:
        return _parse_release_csv(f, path)


def _parse_release_csv(lines, name):
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FitError('Empty release data file {!r}.'.format(name))

    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise FitError('Expected header {!r} in {!r}, got {!r}.'.format(
            ','.join(CSV_HEADER), name, ','.join(header)))

    samples = []
    for row in reader:
        if not row or not ''.join(row).strip():
            continue
        try:
            t, f = row
            samples.append((float(t), float(f)))
        except ValueError:
            raise FitError('Malformed row {!r} in {!r} (line {}).'.format(
                ','.join(row), name, reader.line_num))

    try:
        return ReleaseDataset(samples)
    except ValueError as err:
        raise FitError('Invalid release data in {!r}: {}'.format(name, err))


def write_release_csv(path, dataset):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for t, frac in dataset.samples:
            writer.writerow((repr(t), repr(frac)))


# Fitting ---------------------------------------------------------------------


class FitResult:
    '''Least-squares estimate of the Korsmeyer-Peppas parameters.

    :var float k:
    :var float n:
    :var float r_squared:
        Coefficient of determination on the untransformed fractions.
    :var float sse:
        Sum of squared residuals.
    :var int iterations:
        Number of Gauss-Newton iterations performed.
    :var bool converged:
        *False* if the iteration cap was hit; ``k`` and ``n`` then hold
        the best iterate.
    :var ndarray covariance:
        2x2 parameter covariance (order k, n); NaN without residual
        degrees of freedom.
    :var tuple confidence_intervals:
        95% intervals ``((k_lo, k_hi), (n_lo, n_hi))``.
    '''

    def __init__(self, k, n, r_squared, sse, iterations, converged,
        covariance, samples_used):
        self.k = k
        self.n = n
        self.r_squared = r_squared
        self.sse = sse
        self.iterations = iterations
        self.converged = converged
        self.covariance = covariance
        self.samples_used = samples_used

    @property
    def stderr(self):
        return tuple(np.sqrt(np.diag(self.covariance)).tolist())

    @property
    def confidence_intervals(self):
        dof = self.samples_used - 2
        if dof < 1:
            nan = float('nan')
            return ((nan, nan), (nan, nan))
        quantile = stats.t.ppf(0.975, dof)
        return tuple(
            (value - quantile * err, value + quantile * err)
            for value, err in zip((self.k, self.n), self.stderr)
        )

    def model(self, molecules_per_sphere=1.0):
        return ReleaseModel(self.k, self.n, molecules_per_sphere)

    def __repr__(self):
        return ('<FitResult k={s.k!r} n={s.n!r} r2={s.r_squared!r}'
            ' converged={s.converged!r}>').format(s=self)


def fit_korsmeyer_peppas(data, max_iterations=MAX_ITERATIONS,
    tolerance=TOLERANCE):
    '''Fit ``k`` and ``n`` to a :class:`ReleaseDataset`.

    The initial guess comes from a linear regression of ``log(fraction)``
    on ``log(t)`` over the samples with ``0 < fraction < 1``.
    It is refined with a damped Gauss-Newton iteration on the
    untransformed (clamped) model until the relative parameter change
    drops below ``tolerance`` or ``max_iterations`` is reached.
    Samples at ``t = 0`` carry no information and are skipped.

    :raises InsufficientDataError:
        Fewer than three samples with ``t > 0`` and ``0 < fraction < 1``.
    :raises FitError:
        Every sample is saturated (fraction 1).
    '''
    t = data.times
    f = data.fractions
    usable = t > 0
    t, f = t[usable], f[usable]

    partial = (f > 0) & (f < 1)
    if np.count_nonzero(partial) < 3:
        if f.size and np.all(f == 1.0):
            raise FitError('All release samples are saturated (fraction = 1).')
        raise InsufficientDataError(('Need at least 3 samples with t > 0 and'
            ' 0 < fraction < 1, got {}.').format(np.count_nonzero(partial)))

    slope, intercept = np.polyfit(np.log(t[partial]), np.log(f[partial]), 1)
    params = np.array([math.exp(intercept), max(slope, 1e-6)])
    LOG.debug('Initial guess from log-log regression: k=%s, n=%s.', *params)

    def sse(p):
        return float(np.sum((f - _power_law(p[0], p[1], t)) ** 2))

    def jacobian(p):
        k, n = p
        tn = np.power(t, n)
        active = (k * tn < 1.0).astype(float)
        return np.column_stack((tn * active, k * tn * np.log(t) * active))

    current = sse(params)
    converged = False
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        jac = jacobian(params)
        residuals = f - _power_law(params[0], params[1], t)
        delta = np.linalg.lstsq(jac, residuals, rcond=None)[0]

        accepted = None
        scale = 1.0
        for __ in range(MAX_HALVINGS):
            candidate = params + scale * delta
            if np.all(candidate > 0):
                candidate_sse = sse(candidate)
                if candidate_sse <= current:
                    accepted = candidate
                    break
            scale /= 2.0

        if accepted is None:
            # no descent along the step: we sit on the minimum
            converged = bool(np.max(np.abs(delta) / np.abs(params)) < STALL_TOLERANCE)
            break

        change = np.max(np.abs(accepted - params) / np.abs(params))
        params, current = accepted, candidate_sse
        if change < tolerance:
            converged = True
            break

    if not converged:
        LOG.warning('Release fit did not converge after %s iterations,'
            ' reporting best iterate.', iterations)

    spread = float(np.sum((f - f.mean()) ** 2))
    r_squared = 1.0 - current / spread if spread > 0 else float('nan')

    dof = t.size - 2
    jac = jacobian(params)
    if dof > 0:
        covariance = current / dof * np.linalg.pinv(jac.T @ jac)
    else:
        covariance = np.full((2, 2), np.nan)

    result = FitResult(float(params[0]), float(params[1]), r_squared, current,
        iterations, converged, covariance, int(t.size))
    LOG.info('Fitted k=%.6g, n=%.6g (R2=%.6f, %s iterations).',
        result.k, result.n, result.r_squared, result.iterations)
    return result


def format_fit_report(result):
    '''Render a :class:`FitResult` as ini-style text.'''
    (k_lo, k_hi), (n_lo, n_hi) = result.confidence_intervals
    k_err, n_err = result.stderr
    cfg = configparser.ConfigParser(interpolation=None)
    cfg['fit'] = {
        'model': 'korsmeyer-peppas',
        'k': repr(result.k),
        'n': repr(result.n),
        'r_squared': repr(result.r_squared),
        'sse': repr(result.sse),
        'iterations': str(result.iterations),
        'converged': 'yes' if result.converged else 'no',
        'samples': str(result.samples_used),
        'k_stderr': repr(k_err),
        'n_stderr': repr(n_err),
        'k_ci95': '{!r} {!r}'.format(k_lo, k_hi),
        'n_ci95': '{!r} {!r}'.format(n_lo, n_hi),
        'cov_kk': repr(float(result.covariance[0, 0])),
        'cov_kn': repr(float(result.covariance[0, 1])),
        'cov_nn': repr(float(result.covariance[1, 1])),
        'saturation_time_hours': repr(saturation_time(result.model())),
    }
    buf = io.StringIO()
    cfg.write(buf)
    return buf.getvalue()


# Diffusion coefficient -------------------------------------------------------


class GasPairSpec:
    '''Binary gas pair for the Chapman-Enskog estimate.

    Molar masses in g/mol, collision diameters in Angstrom,
    temperature in K, pressure in atm.
    '''

    def __init__(self, molar_mass_a, molar_mass_b,
        collision_diameter_a, collision_diameter_b,
        temperature=298.0, pressure=1.0, collision_integral=1.0):
        self.molar_mass_a = float(molar_mass_a)
        self.molar_mass_b = float(molar_mass_b)
        self.collision_diameter_a = float(collision_diameter_a)
        self.collision_diameter_b = float(collision_diameter_b)
        self.temperature = float(temperature)
        self.pressure = float(pressure)
        self.collision_integral = float(collision_integral)
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError('{} must be > 0, got {!r}.'.format(name, value))

    @property
    def collision_diameter(self):
        '''Average collision diameter of the pair.'''
        return 0.5 * (self.collision_diameter_a + self.collision_diameter_b)

    def __repr__(self):
        return '<GasPairSpec Ma={s.molar_mass_a!r} Mb={s.molar_mass_b!r} T={s.temperature!r}>'.format(s=self)


def published_gas_pair():
    '''MeSA in air at 25 C and 1 atm.'''
    return GasPairSpec(152.149, 28.97, 5.06, 3.7,
        temperature=298.0, pressure=1.0, collision_integral=1.0)


def chapman_enskog_diffusion(pair):
    '''Binary diffusion coefficient in m^2/s.

    The Chapman-Enskog formula yields cm^2/s for the units of
    :class:`GasPairSpec`; the result is converted with 1 cm^2 = 1e-4 m^2.
    '''
    reduced = math.sqrt(1.0 / pair.molar_mass_a + 1.0 / pair.molar_mass_b)
    d_cm2 = (CHAPMAN_ENSKOG_CONSTANT * pair.temperature ** 1.5 * reduced
        / (pair.pressure * pair.collision_diameter ** 2 * pair.collision_integral))
    return d_cm2 * CM2_TO_M2


def collision_diameter_from_molar_volume(molar_mass, density):
    '''Estimate a collision diameter from the liquid molar volume.

    :param float molar_mass: g/mol
    :param float density: g/cm^3
    :rtype tuple:
        ``(molar_volume, sigma)`` in cm^3/mol and Angstrom,
        with sigma taken as the cube root of the molar volume.
    '''
    if not molar_mass > 0 or not density > 0:
        raise ValueError('Molar mass and density must be > 0.')
    molar_volume = molar_mass / density
    return molar_volume, molar_volume ** (1.0 / 3.0)


# Inventory -------------------------------------------------------------------


class MicrosphereSpec:
    '''Monodisperse microsphere described by its Dv(50) diameter.

    :var float diameter: m
    :var float matrix_density: kg/m^3
    :var float cargo_density: kg/m^3
    :var float cargo_mass_fraction: loading, in (0, 1)
    :var float cargo_molar_mass: g/mol
    '''

    def __init__(self, diameter, matrix_density, cargo_density,
        cargo_mass_fraction, cargo_molar_mass):
        self.diameter = float(diameter)
        self.matrix_density = float(matrix_density)
        self.cargo_density = float(cargo_density)
        self.cargo_mass_fraction = float(cargo_mass_fraction)
        self.cargo_molar_mass = float(cargo_molar_mass)
        for name in ('diameter', 'matrix_density', 'cargo_density',
            'cargo_molar_mass'):
            if not getattr(self, name) > 0:
                raise ValueError('{} must be > 0, got {!r}.'.format(
                    name, getattr(self, name)))
        if not 0.0 < self.cargo_mass_fraction < 1.0:
            raise ValueError('cargo_mass_fraction must be in (0, 1), got {!r}.'.format(
                self.cargo_mass_fraction))

    def __repr__(self):
        return '<MicrosphereSpec d={s.diameter!r} loading={s.cargo_mass_fraction!r}>'.format(s=self)


def published_microsphere():
    '''180 um spheres of hydrogenated sunflower oil with 10% MeSA.'''
    return MicrosphereSpec(180e-6, 900.0, 1174.0, 0.1, 152.149)


class Inventory:
    '''Result of :func:`microsphere_inventory`.'''

    def __init__(self, sphere_volume, effective_density, sphere_mass,
        sphere_count, cargo_molecule_count):
        self.sphere_volume = sphere_volume
        self.effective_density = effective_density
        self.sphere_mass = sphere_mass
        self.sphere_count = sphere_count
        self.cargo_molecule_count = cargo_molecule_count

    @property
    def molecules_per_sphere(self):
        return self.cargo_molecule_count / self.sphere_count

    def as_dict(self):
        return {
            'sphere_volume': self.sphere_volume,
            'effective_density': self.effective_density,
            'sphere_mass': self.sphere_mass,
            'sphere_count': self.sphere_count,
            'cargo_molecule_count': self.cargo_molecule_count,
            'molecules_per_sphere': self.molecules_per_sphere,
        }

    def __repr__(self):
        return '<Inventory N={s.sphere_count:.4g} N_bar={s.molecules_per_sphere:.4g}>'.format(s=self)


def microsphere_inventory(spec, total_microsphere_mass, total_cargo_mass):
    '''Number of microspheres in ``total_microsphere_mass`` (kg) and of
    cargo molecules in ``total_cargo_mass`` (kg).'''
    if not total_microsphere_mass > 0 or not total_cargo_mass > 0:
        raise ValueError('Masses must be > 0.')
    radius = spec.diameter / 2.0
    volume = 4.0 / 3.0 * math.pi * radius ** 3
    density = (spec.cargo_mass_fraction * spec.cargo_density
        + (1.0 - spec.cargo_mass_fraction) * spec.matrix_density)
    mass = density * volume
    count = total_microsphere_mass / mass
    moles = total_cargo_mass * 1000.0 / spec.cargo_molar_mass  # kg -> g
    return Inventory(volume, density, mass, count, moles * AVOGADRO)
