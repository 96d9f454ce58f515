"""Hot loops with a numba implementation and a pure-numpy fallback.

The active implementation is chosen by ``STOKLAB_BACKEND`` (``numba`` or
``numpy``); both produce identical numbers.
"""
