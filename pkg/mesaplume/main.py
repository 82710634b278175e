#! /usr/bin/env python
# -*- coding: utf-8 -*-
'''
Command line interface for mesaplume
'''
import argparse
import logging
import os
import sys
from logging import handlers

import mesaplume
from mesaplume import application
from mesaplume.config import parse_config
from mesaplume.config import packaged_configs
from mesaplume.exceptions import UserError
from mesaplume.utils import parse_seeds


PROG_NAME = 'mesaplume'
VERSION = mesaplume.__version__
DESCRIPTION = 'Simulate the wind-driven dispersion of MeSA released from microspheres'
AUTHOR = mesaplume.__author__
AUTHOR_MAIL = mesaplume.__email__

# logging config
CONSOLE_FMT = '%(levelname)s: %(message)s'
LOGFILE_FMT = '%(asctime)s %(levelname)s [%(name)s]: %(message)s'
DEFAULT_LOG_LEVEL = 'warning'

EXIT_OK = 0
EXIT_ERROR = 1


log = logging.getLogger(PROG_NAME)


def main(argv=None):
    '''Console script entry point.

    :param list argv: arguments without the program name;
        *None* reads ``sys.argv``.
    :rtype int: ``EXIT_OK`` or ``EXIT_ERROR``
    '''
    parser = setup_argparser()
    argv = argv if argv is not None else sys.argv[1:]
    options = parser.parse_args(args=argv)
    configure_logging(options)

    log.debug('Commandline: {}'.format(' '.join(argv)))
    log.debug('Options: {}'.format(options))

    try:
        rv = run(options)
    except KeyboardInterrupt:
        log.info('Keyboard Interrupt.')
        raise
    except Exception as e:
        log.error(e)
        log.debug(e, exc_info=True)
        rv = EXIT_ERROR

    rv = rv or EXIT_OK  # converts None|False -> 0
    log.debug('Exit with return code: {}.'.format(rv))
    return rv


def run(options):
    '''Build the application and dispatch to the subcommand.'''
    try:
        func = options.func
    except AttributeError:
        raise UserError('No subcommand specified.')
    app = _create_app(options)
    return func(app, options)


def _overrides(options):
    '''Config overrides from command line flags.'''
    overrides = {}

    def put(section, option, value):
        if value is not None:
            overrides[(section, option)] = value

    preset = getattr(options, 'preset', None)
    if preset:
        if preset.lower().endswith('.csv'):
            put('simulation', 'deployment_csv', _path(preset))
        else:
            put('simulation', 'preset', preset)
            put('simulation', 'deployment_csv', '')
    put('simulation', 'seed', getattr(options, 'seed', None))
    out = getattr(options, 'out', None)
    if out:
        put('output', 'directory', _path(out))
    put('output', 'run_threads', getattr(options, 'threads', None))
    for name in ('snapshot_times', 'thresholds'):
        value = getattr(options, name, None)
        if value is not None:
            put('metrics', name, ' '.join(repr(v) for v in value))
    return overrides


def _create_app(options):
    '''set up the application instance using the given options

    :param Namespace options:
        A ``Namespace`` instance with the parsed command line.
    :rtype object:
        An :class:`application.Mesaplume` instance.
    '''
    source = getattr(options, 'config_file', None) or getattr(options, 'config', None)
    config = parse_config(source, overrides=_overrides(options))
    return application.Mesaplume(config)


def setup_argparser():
    '''Parser with one subcommand per operation; every subcommand
    shares the logging and ``--config`` options.'''
    parser = argparse.ArgumentParser(
        prog=PROG_NAME,
        description=DESCRIPTION,
        epilog='{p} Version {v} -- {author} <{mail}>'.format(
            p=PROG_NAME, v=VERSION,
            author=AUTHOR, mail=AUTHOR_MAIL
        )
    )
    parser.add_argument(
        '--version',
        action='version',
        version='{p} {v}'.format(p=PROG_NAME, v=VERSION),
        help='Print version number and exit'
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Increase console output',
    )
    common.add_argument(
        '-q', '--quiet',
        action='store_true',
        help='Write nothing to stdout',
    )
    common.add_argument(
        '-l', '--logfile',
        type=_path,
        help='Write logs to the specified file.'
    )

    loglevels = {
        'debug': logging.DEBUG,
        'info': logging.INFO,
        'warning': logging.WARNING,
        'error': logging.ERROR,
        'critical': logging.CRITICAL,
    }

    class LogLevelAction(argparse.Action):

        def __call__(self, parser, namespace, values, option_string=None):
            level = loglevels[values]
            setattr(namespace, self.dest, level)

    common.add_argument(
        '--log-level',
        action=LogLevelAction,
        default=logging.WARNING,
        choices=loglevels.keys(),
        help=('Controls the log-level for LOGFILE;'
            ' defaults to {default}').format(default=DEFAULT_LOG_LEVEL),
    )
    common.add_argument(
        '--config',
        metavar='CONFIG',
        help=('Config name ({}), ini file or run manifest;'
            ' defaults to the published baseline').format(', '.join(_known_configs())),
    )

    subs = parser.add_subparsers()
    _run(subs, common)
    _fit(subs, common)
    _render(subs, common)
    _aggregate(subs, common)
    _check(subs, common)
    _wind_dump(subs, common)

    return parser


def _known_configs():
    try:
        return packaged_configs()
    except Exception:
        return []


def _path(argstr):
    path = os.path.expanduser(argstr)
    path = os.path.normpath(path)
    if not os.path.isabs(path):
        path = os.path.join(os.getcwd(), path)
    return path


def _seeds(argstr):
    try:
        return parse_seeds(argstr)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _number_list(argstr):
    try:
        return [float(v) for v in argstr.replace(',', ' ').split()]
    except ValueError:
        raise argparse.ArgumentTypeError('Expected numbers, got {!r}.'.format(argstr))


def _config_positional(parser):
    parser.add_argument(
        'config_file',
        nargs='?',
        metavar='CONFIG',
        help='Same as --config',
    )


def _run(subs, common):
    run = subs.add_parser(
        'run',
        parents=[common,],
        help='Run simulations and write their artifacts'
    )
    _config_positional(run)

    run.add_argument(
        '--preset', '-p',
        help=('Deployment preset, several presets separated by spaces,'
            ' shell wildcards, "all", or a x,y,z,sphere_count CSV file'),
    )
    seed_control = run.add_mutually_exclusive_group()
    seed_control.add_argument(
        '--seed', '-s',
        type=int,
        help='Wind noise seed',
    )
    seed_control.add_argument(
        '--seeds',
        type=_seeds,
        help='Several seeds, as a range ("1..5") or a list ("1,2,3")',
    )
    run.add_argument(
        '--out', '-o',
        help='Output directory',
    )
    run.add_argument(
        '--snapshot-times',
        type=_number_list,
        metavar='HOURS',
        help='Snapshot times in hours, e.g. "1 11 22"',
    )
    run.add_argument(
        '--thresholds',
        type=_number_list,
        metavar='VALUES',
        help='Explicit CEI thresholds in molecules/m^3',
    )
    run.add_argument(
        '--threads', '-t',
        type=int,
        help='Number of runs processed in parallel',
    )

    def do_run(app, options):
        outcomes = app.sweep(seeds=options.seeds)
        for outcome in outcomes:
            if outcome.ok:
                log.info('%s/seed-%s: ok', outcome.label, outcome.seed)
            else:
                log.error('%s/seed-%s: %s', outcome.label, outcome.seed, outcome.error)
        return EXIT_OK if all(o.ok for o in outcomes) else EXIT_ERROR

    run.set_defaults(func=do_run)


def _fit(subs, common):
    fit = subs.add_parser(
        'fit',
        parents=[common,],
        help='Fit the release kinetics to measured data'
    )
    fit.add_argument(
        'dataset',
        type=_path,
        metavar='CSV',
        help='time_hours,fraction CSV file',
    )
    fit.add_argument(
        '--out', '-o',
        dest='output_file',
        type=_path,
        metavar='FILE',
        help='Also write the report to FILE',
    )

    def do_fit(app, options):
        __, report = app.fit(options.dataset)
        sys.stdout.write(report)
        if options.output_file:
            with open(options.output_file, 'w') as f:
                f.write(report)
        return EXIT_OK

    fit.set_defaults(func=do_fit)


def _render(subs, common):
    render = subs.add_parser(
        'render',
        parents=[common,],
        help='Render a slab CSV or a field snapshot as a heatmap'
    )
    render.add_argument(
        'input',
        type=_path,
        metavar='FILE',
        help='Slab CSV or .snap snapshot',
    )
    render.add_argument(
        '--out', '-o',
        dest='output_file',
        type=_path,
        metavar='PNG',
        help='Image file; defaults to FILE with a .png suffix',
    )
    render.add_argument(
        '--figure',
        action='store_true',
        help='Write an annotated figure instead of the plain heatmap',
    )
    render.add_argument(
        '--preset', '-p',
        help='Mark the cells of this deployment preset or CSV',
    )

    def do_render(app, options):
        from mesaplume import render as rendering
        config = app.config
        xs, ys, values, meta = rendering.load_slab(options.input, *config.slab)
        out = options.output_file or os.path.splitext(options.input)[0] + '.png'
        footprint = None
        if options.preset:
            deployment = config.deployment(config.targets()[0])
            footprint = [p for p, __ in deployment.sources]
        if options.figure:
            title = None
            if 'hours' in meta:
                title = 't = {} h'.format(meta['hours'])
            rendering.render_figure(out, xs, ys, values, footprint=footprint,
                                    title=title)
        else:
            rendering.render_heatmap(out, values, xs=xs, ys=ys, footprint=footprint)
        sys.stdout.write('{}\n'.format(out))
        return EXIT_OK

    render.set_defaults(func=do_render)


def _aggregate(subs, common):
    aggregate = subs.add_parser(
        'aggregate',
        parents=[common,],
        help='Average CEI tables across seeds'
    )
    aggregate.add_argument(
        'patterns',
        nargs='*',
        metavar='LABEL',
        help='Run labels (presets) to aggregate; allows wildcards',
    )
    aggregate.add_argument(
        '--out', '-o',
        help='Output directory holding the runs',
    )

    def do_aggregate(app, options):
        for path in app.aggregate(*options.patterns):
            sys.stdout.write('{}\n'.format(path))
        return EXIT_OK

    aggregate.set_defaults(func=do_aggregate)


def _check(subs, common):
    check = subs.add_parser(
        'check',
        parents=[common,],
        help='Validate a config and print the CFL report'
    )
    _config_positional(check)
    check.add_argument(
        '--preset', '-p',
        help='Deployment preset(s) or CSV to validate',
    )

    def do_check(app, options):
        sys.stdout.write(app.check())
        sys.stdout.write('\n')
        return EXIT_OK

    check.set_defaults(func=do_check)


def _wind_dump(subs, common):
    dump = subs.add_parser(
        'wind-dump',
        parents=[common,],
        help='Write the sampled wind field of one step as CSV'
    )
    _config_positional(dump)
    dump.add_argument(
        '--step',
        type=int,
        default=0,
        help='Step index; defaults to 0',
    )
    dump.add_argument(
        '--seed', '-s',
        type=int,
        help='Wind noise seed',
    )
    dump.add_argument(
        '--out', '-o',
        dest='output_file',
        type=_path,
        metavar='CSV',
        default='wind.csv',
        help='Output file; defaults to "wind.csv"',
    )

    def do_wind_dump(app, options):
        if options.step < 0:
            raise UserError('--step must be >= 0.')
        app.wind_dump(options.output_file, step=options.step)
        return EXIT_OK

    dump.set_defaults(func=do_wind_dump)


def configure_logging(options):
    '''Attach handlers to the root logger.

    The console gets INFO (DEBUG with ``--verbose``, nothing with
    ``--quiet``). ``--logfile`` adds a rotating file handler at
    ``--log-level``. matplotlib is kept at WARNING.
    '''
    rootlog = logging.getLogger()
    rootlog.setLevel(logging.DEBUG)
    logging.getLogger('matplotlib').setLevel(logging.WARNING)

    if not getattr(options, 'quiet', False):
        console_hdl = logging.StreamHandler()
        console_level = logging.DEBUG if getattr(options, 'verbose', False) else logging.INFO
        console_hdl.setLevel(console_level)
        console_hdl.setFormatter(logging.Formatter(CONSOLE_FMT))
        rootlog.addHandler(console_hdl)

    if getattr(options, 'logfile', None):
        logfile_hdl = handlers.RotatingFileHandler(options.logfile)
        logfile_hdl.setFormatter(logging.Formatter(LOGFILE_FMT))
        logfile_hdl.setLevel(options.log_level)
        rootlog.addHandler(logfile_hdl)


if __name__ == '__main__':
    sys.exit(main())
