#!/usr/bin/env python3
"""High-precision reference for subsampled-Gaussian Renyi-DP accounting.

Computes, with 80-digit arithmetic (mpmath):
  * per-step Renyi divergence of the subsampled Gaussian mechanism at
    integer orders,
  * the (epsilon, delta) conversion minimised over an integer order grid,
and emits a frozen C++ header of golden values used by the unit and
acceptance tests.  This file is test tooling only; the production
accountant must never include or call it.

Usage: python3 rdp_oracle.py > ../golden/rdp_golden.h
"""

import math
import sys

import mpmath as mp

mp.mp.dps = 80

ORDER_MIN = 2
ORDER_MAX = 512


def step_rdp(q, sigma, order):
    """Per-step Renyi DP of the subsampled Gaussian at an integer order."""
    q = mp.mpf(q)
    sigma = mp.mpf(sigma)
    if q == 0:
        return mp.mpf(0)
    total = mp.mpf(0)
    for k in range(order + 1):
        term = (
            mp.binomial(order, k)
            * mp.power(1 - q, order - k)
            * mp.power(q, k)
            * mp.e ** (mp.mpf(k * (k - 1)) / (2 * sigma * sigma))
        )
        total += term
    return mp.log(total) / (order - 1)


def epsilon(n, batch, epochs, sigma, delta):
    """(epsilon, best order) after epochs passes of n/batch steps."""
    q = mp.mpf(batch) / n
    steps = epochs * math.ceil(n / batch)
    log_inv_delta = -mp.log(mp.mpf(delta))
    best = (mp.inf, None)
    for order in range(ORDER_MIN, ORDER_MAX + 1):
        eps = steps * step_rdp(q, sigma, order) + log_inv_delta / (order - 1)
        if eps < best[0]:
            best = (eps, order)
    return best


def steps_epsilon(q, sigma, steps, delta):
    log_inv_delta = -mp.log(mp.mpf(delta))
    best = (mp.inf, None)
    for order in range(ORDER_MIN, ORDER_MAX + 1):
        eps = steps * step_rdp(q, sigma, order) + log_inv_delta / (order - 1)
        if eps < best[0]:
            best = (eps, order)
    return best


def emit():
    out = sys.stdout
    out.write("// Golden values produced by tests/oracles/rdp_oracle.py (mpmath, 80 digits).\n")
    out.write("// Regenerate with: python3 tests/oracles/rdp_oracle.py > tests/golden/rdp_golden.h\n")
    out.write("#pragma once\n\n")
    out.write("namespace privts_golden {\n\n")

    # Single-step RDP spot values, including the q=0.0064/sigma=0.5/order=8 case.
    spot = [
        (0.0064, 0.5, 8),
        (0.0064, 0.5, 2),
        (0.0064, 0.5, 64),
        (0.01, 1.0, 2),
        (0.01, 1.0, 32),
        (0.1, 1.0, 16),
        (0.5, 2.0, 4),
        (1.0, 0.5, 2),
        (0.25, 0.7, 12),
        (0.004, 4.0, 256),
    ]
    out.write("struct StepRdpCase { double q; double sigma; int order; double rdp; };\n")
    out.write("inline constexpr StepRdpCase kStepRdpCases[] = {\n")
    for q, sigma, order in spot:
        v = step_rdp(q, sigma, order)
        out.write(f"    {{{q!r}, {sigma!r}, {order}, {mp.nstr(v, 17)}}},\n")
    out.write("};\n\n")

    # 50-point (q, sigma, T, delta) grid for the accountant acceptance check.
    grid = []
    qs = [0.001, 0.0064, 0.02, 0.05, 0.1]
    sigmas = [0.4, 0.5, 0.8, 1.2, 2.0]
    steps_list = [100, 15700]
    deltas = [1e-5]
    for q in qs:
        for s in sigmas:
            for t in steps_list:
                for d in deltas:
                    grid.append((q, s, t, d))
    assert len(grid) == 50
    out.write("struct EpsilonCase { double q; double sigma; long steps; double delta; double epsilon; int order; };\n")
    out.write("inline constexpr EpsilonCase kEpsilonGrid[] = {\n")
    for q, s, t, d in grid:
        eps, order = steps_epsilon(q, s, t, d)
        out.write(f"    {{{q!r}, {s!r}, {t}, {d!r}, {mp.nstr(eps, 17)}, {order}}},\n")
    out.write("};\n\n")

    # The fixed controlled-environment configuration (n=5000, b=32,
    # epochs=100, sigma=0.5, delta=1e-5).
    eps0, order0 = epsilon(5000, 32, 100, 0.5, 1e-5)
    out.write("// n=5000, batch=32, epochs=100, sigma=0.5, delta=1e-5\n")
    out.write(f"inline constexpr double kControlledEpsilon = {mp.nstr(eps0, 17)};\n")
    out.write(f"inline constexpr int kControlledOrder = {order0};\n\n")
    out.write("}  // namespace privts_golden\n")


if __name__ == "__main__":
    emit()
