import numpy as np


def gauss_legendre_panels(lo, hi, panels, order=16):
    """Nodes and weights of composite Gauss-Legendre on [lo, hi]."""
    panels = max(int(panels), 1)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def oscillatory_panels(max_freq, length, minimum=4):
    # one panel per half-wave of the fastest integrand keeps 16-point GL at ~1e-15
    return int(np.ceil(abs(max_freq) * length / np.pi)) + minimum
