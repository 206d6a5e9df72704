"""Finite-difference gradient oracle shared by the gradient tests.

The oracle evaluates the forward function twice per coordinate (central
differences) and never consults the backward rules it is checking.
"""

import numpy as np

from sdparse import autodiff as ad

RTOL = 1e-4
ATOL = 1e-6


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray, context: str = "") -> None:
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    err = np.abs(analytic - numeric)
    bad = err > (RTOL * scale + ATOL)
    assert not bad.any(), (
        f"{context}: gradient mismatch at {np.argwhere(bad)[:3]}: "
        f"analytic {analytic[bad][:3]} vs numeric {numeric[bad][:3]}"
    )


def fd_gradcheck(build, arrays: dict[str, np.ndarray], h: float = 1e-5) -> None:
    """Check d(build)/d(array) for every named array.

    ``build`` maps a dict of fresh parameter Nodes to a scalar Node and
    must be deterministic (re-seed any randomness inside).
    """
    params = {name: ad.param(value) for name, value in arrays.items()}
    loss = build(params)
    ad.backward(loss)
    analytic = {name: node.grad.copy() for name, node in params.items()}

    def value_at(tweaked: dict[str, np.ndarray]) -> float:
        fresh = {name: ad.param(value) for name, value in tweaked.items()}
        return float(build(fresh).value)

    for name, base in arrays.items():
        numeric = np.zeros_like(base)
        for idx in np.ndindex(*base.shape):
            plus = {k: v.copy() for k, v in arrays.items()}
            minus = {k: v.copy() for k, v in arrays.items()}
            plus[name][idx] += h
            minus[name][idx] -= h
            numeric[idx] = (value_at(plus) - value_at(minus)) / (2.0 * h)
        assert_grad_close(analytic[name], numeric, context=name)
