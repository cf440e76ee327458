try:
    from ._wflnoma import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:
    from _wflnoma import *  # noqa: F401,F403  (in-tree build on sys.path)
