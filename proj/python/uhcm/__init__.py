"""Displaced photon-number moments, correlation-measurement simulation, and
nonclassicality witnesses in a truncated Fock basis."""

try:
    from ._uhcm import *  # noqa: F401,F403
    from ._uhcm import __version__  # noqa: F401
except ImportError:  # in-tree builds put the extension on sys.path directly
    from _uhcm import *  # noqa: F401,F403
    from _uhcm import __version__  # noqa: F401
