"""
Helpers shared by the clustering management commands.

Exit codes: 0 ok, 1 data error (unreadable/invalid input, failed
computation), 2 usage error (invalid flag combination). argparse already
exits with 2 on malformed flags.
"""

from contextlib import contextmanager
from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from backend.clustering.cf_tree import TreeConfig
from backend.clustering.exceptions import ClusteringError

DATA_ERROR = 1
USAGE_ERROR = 2


def usage_error(message):
    return CommandError(message, returncode=USAGE_ERROR)


def data_error(message):
    return CommandError(message, returncode=DATA_ERROR)


@contextmanager
def data_errors():
    """Turn library and file errors into exit code 1."""
    try:
        yield
    except ClusteringError as exc:
        raise data_error(str(exc)) from exc
    except OSError as exc:
        raise data_error(f'{exc.filename or "file"}: {exc.strerror or exc}') from exc


def add_tree_arguments(parser):
    defaults = settings.HAC_TOOLKIT
    group = parser.add_argument_group('CF-tree')
    group.add_argument(
        '--branching-factor',
        type=int,
        help=f'Maximum children per inner node (default {defaults["BRANCHING_FACTOR"]})'
    )
    group.add_argument(
        '--max-leaves',
        type=int,
        help=f'Leaf entry cap that triggers rebuilds (default {defaults["MAX_LEAF_ENTRIES"]})'
    )
    group.add_argument(
        '--fixed-threshold',
        action='store_true',
        help='Never rebuild: no leaf entry cap, keep the initial threshold'
    )
    group.add_argument(
        '--tree-criterion',
        help=f'Absorption criterion D0..D4 or R (default {defaults["TREE_CRITERION"]})'
    )
    group.add_argument(
        '--threshold',
        type=float,
        help=f'Initial absorption threshold (default {defaults["INITIAL_THRESHOLD"]})'
    )


def tree_config(options):
    """TreeConfig from settings.HAC_TOOLKIT with the command-line overrides applied."""
    if options.get('fixed_threshold') and options.get('max_leaves') is not None:
        raise usage_error('--fixed-threshold and --max-leaves are mutually exclusive')
    overrides = {
        'branching_factor': options.get('branching_factor'),
        'max_leaf_entries': options.get('max_leaves'),
        'criterion': options.get('tree_criterion'),
        'initial_threshold': options.get('threshold'),
    }
    with data_errors():
        config = TreeConfig.from_mapping(settings.HAC_TOOLKIT, **overrides)
    if options.get('fixed_threshold'):
        config = TreeConfig(
            branching_factor=config.branching_factor,
            max_leaf_entries=None,
            criterion=config.criterion,
            initial_threshold=config.initial_threshold,
            bootstrap_seed=config.bootstrap_seed,
        )
    return config


def results_dir():
    path = Path(settings.HAC_TOOLKIT['RESULTS_DIR'])
    path.mkdir(parents=True, exist_ok=True)
    return path
