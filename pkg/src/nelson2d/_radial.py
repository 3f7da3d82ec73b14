"""Radial quadrature rules for integrals of the form int f(r) J0(r y) dr."""
import numpy as np

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def panel_edges(a, b, y, h0=0.5, ratio=1.5, max_panels=200_000):
    """Panel edges on [a, b]: geometric growth, capped at a half wave pi/y of J0(r y)."""
    if b <= a:
        return np.array([a, b])
    half_wave = np.pi / y if y > 0 else np.inf
    edges = [a]
    e = a
    while e < b:
        h = min(max(e * (ratio - 1), h0), half_wave, b - e)
        e = e + h
        if b - e < 1e-12 * max(1.0, b):
            e = b
        edges.append(e)
        if len(edges) > max_panels:
            raise RuntimeError("too many quadrature panels")
    return np.asarray(edges)


def gl_nodes(edges):
    h = 0.5 * np.diff(edges)
    r = (h[:, None] * (_GL_X + 1) + edges[:-1, None]).ravel()
    w = (h[:, None] * _GL_W).ravel()
    return r, w


def bessel_rule(a, b, y, h0=0.5, ratio=1.5):
    return gl_nodes(panel_edges(a, b, y, h0, ratio))


def smooth_rule(a, b, h0=0.5, ratio=1.5):
    return gl_nodes(panel_edges(a, b, 0.0, h0, ratio))
