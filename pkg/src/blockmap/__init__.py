"""Block-weighted random planar maps.

A library for the model that samples a rooted planar map of size n with
probability proportional to u^(number of blocks), together with the
equivalent model on quadrangulations weighted per simple block.  It bundles
an exact enumeration engine used as ground truth, the analytic constants of
the phase diagram (critical point u = 9/5), exact and approximate samplers
built on the Galton-Watson block tree, and an experiment harness for the
largest-block and distance-scaling statistics.
"""

from blockmap import mapcore, phase, sampler, series, stats

__all__ = ["mapcore", "series", "phase", "sampler", "stats"]
__version__ = "0.1.0"
