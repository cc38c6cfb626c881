from __future__ import annotations

import numpy as np

import fdl.spectral
import pytest

from fdl.numerics import backward, param


def numeric_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of one array."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f(x)
        flat[i] = old - h
        down = f(x)
        flat[i] = old
        gflat[i] = (up - down) / (2 * h)
    return g


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Norm-relative difference, safe when both are zero."""
    den = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / den)


def grad_check(build, x0: np.ndarray, h: float = 1e-5) -> float:
    """Relative error between the tape gradient and finite differences.

    ``build`` maps a Tensor (or array) to a scalar Tensor.
    """
    p = param(x0.copy())
    analytic = backward(build(p), [p])[p]
    numeric = numeric_grad(lambda x: build(x).item(), x0, h)
    return rel_err(analytic, numeric)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class KinkRecorder:
    """Records the piecewise structure of a loss evaluation.

    The transport distances are piecewise linear in their inputs: on each
    piece every element is matched to a partner with a fixed sign of the
    difference. ReLU masks and the phase branch cut on the negative real
    axis add further pieces. A point is tie-free for a finite-difference
    stencil when every stencil evaluation lands on the same piece.
    """

    def __init__(self, monkeypatch):
        import fdl.features
        import fdl.losses
        import fdl.numerics
        import fdl.transport

        self.log: list[bytes] = []
        distance = fdl.transport.sorted_row_distance
        relu = fdl.numerics.relu
        polar = fdl.spectral.to_polar

        def recorded_distance(a, b):
            out = distance(a, b)
            ad, bd = np.asarray(a.data), np.asarray(b.data)
            order = np.argsort(ad, axis=1, kind="stable")
            sign = np.sign(np.take_along_axis(ad, order, 1) - np.sort(bd, axis=1))
            # the sign each element's matched difference carries fixes its
            # subgradient; swapping tied elements of equal sign changes nothing
            per_element = np.empty_like(sign)
            np.put_along_axis(per_element, order, sign, 1)
            self.log.append(per_element.tobytes())
            return out

        def recorded_relu(a):
            out = relu(a)
            self.log.append((np.asarray(getattr(a, "data", a)) > 0).tobytes())
            return out

        def recorded_polar(X):
            out = polar(X)
            re, im = X.re.data, X.im.data
            self.log.append(np.where(re < 0, np.sign(im), 0.0).tobytes())
            return out

        for module in (fdl.transport, fdl.losses):
            monkeypatch.setattr(module, "sorted_row_distance", recorded_distance)
        monkeypatch.setattr(fdl.features, "relu", recorded_relu)
        for module in (fdl.features, fdl.losses):
            monkeypatch.setattr(module, "to_polar", recorded_polar)

    def signature(self, f, x) -> tuple[float, bytes]:
        self.log.clear()
        value = f(x).item()
        return value, b"|".join(self.log)


def tie_free_grad_error(recorder: KinkRecorder, build, x0: np.ndarray, h: float = 1e-5) -> float | None:
    """Relative gradient error at ``x0``, or None if the stencil crosses a kink."""
    _, base = recorder.signature(build, x0)
    x = np.array(x0, dtype=np.float64)
    flat = x.reshape(-1)
    numeric = np.zeros(flat.size)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up, sig_up = recorder.signature(build, x)
        flat[i] = old - h
        down, sig_down = recorder.signature(build, x)
        flat[i] = old
        if sig_up != base or sig_down != base:
            return None
        numeric[i] = (up - down) / (2 * h)
    p = param(x0.copy())
    analytic = backward(build(p), [p])[p]
    return rel_err(analytic.reshape(-1), numeric)
