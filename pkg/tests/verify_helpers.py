import numpy as np

from bmo_bellman.verify import sample_in_figure, sample_span


def sample_points(fol, per_figure=10, seed=0):
    """(point, figure) pairs drawn from every figure of the foliation."""
    rng = np.random.default_rng(seed)
    span = sample_span(fol)
    out = []
    for fig in fol.figures:
        for _ in range(per_figure):
            x = sample_in_figure(fig, fol, rng, span)
            if x is not None:
                out.append((x, fig))
    return out
