"""Adaptive Dormand-Prince 5(4) stepping with dense output and stop events.

Shared by the scalar scale-factor integrator and the coupled three-axis
system.  Features the callers rely on:

* embedded 5(4) error estimate with the classic PI controller
  (h_new = h * safety * err^-0.17 * err_prev^0.04, clipped to [0.1, 5]),
* quartic dense output per accepted step,
* an optional state-dependent step bound (used to creep into a collapse
  without overshooting the singular region),
* an admissibility predicate applied to every stage (a step whose stages
  leave the admissible region is rejected and retried smaller),
* a scalar stop function: integration halts at the first accepted step whose
  endpoint has stop(y) <= 0, and the crossing time is located by bisection
  on the dense output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Dormand-Prince 5(4) tableau (FSAL: stage 7 is the derivative at the new point).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b - bhat: weights of the embedded 4th-order error estimate.
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Quartic dense-output polynomial coefficients (columns: theta^1..theta^4 factors).
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.1
_MAX_FACTOR = 5.0
_PI_ALPHA = 0.17   # err exponent (0.2 - 0.75*beta)
_PI_BETA = 0.04    # previous-err exponent


class _StageRejected(Exception):
    """A Runge-Kutta stage left the admissible region; retry smaller."""


@dataclass
class RkSolution:
    """Nodes, dense-output coefficients and the terminal condition of a run."""

    ts: np.ndarray                 # accepted node times, shape (n,)
    ys: np.ndarray                 # accepted states, shape (n, d)
    hs: np.ndarray                 # step size that produced each node (hs[0] = 0)
    dense_q: np.ndarray            # shape (n-1, d, 4): per-step quartic coefficients
    status: str                    # "reached_end" | "stopped" | "step_failure"
    stop_t: float | None = None    # bisected stop-crossing time
    stop_bracket: tuple | None = None
    message: str = ""
    nfev: int = 0
    naccepted: int = 0
    nrejected: int = 0

    def eval_dense(self, t):
        """Dense evaluation of the state at times inside the covered span.

        Node times reproduce the stored node values exactly.
        """
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.ts[0], self.ts[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(t_arr < lo - slack) or np.any(t_arr > hi + slack):
            raise ValueError(f"dense evaluation outside covered span [{lo}, {hi}]")
        out = np.empty((t_arr.size, self.ys.shape[1]))
        for k, tk in enumerate(t_arr):
            idx = np.searchsorted(self.ts, tk)
            if idx < self.ts.size and self.ts[idx] == tk:
                out[k] = self.ys[idx]
                continue
            seg = min(max(idx - 1, 0), self.dense_q.shape[0] - 1)
            out[k] = self._eval_segment(seg, tk)
        if np.ndim(t) == 0:
            return out[0]
        return out

    def _eval_segment(self, seg: int, tk: float):
        h = self.hs[seg + 1]
        theta = (tk - self.ts[seg]) / h
        powers = theta ** np.arange(1, 5)
        return self.ys[seg] + h * (self.dense_q[seg] @ powers)


def _error_norm(err, y0, y1, rtol, atol):
    # Summed in sorted order so the norm is bitwise invariant under any
    # permutation of the state components.
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    sq = np.sort((err / scale) ** 2)
    return math.sqrt(float(np.sum(sq)) / sq.size)


def _rms(v):
    sq = np.sort(v ** 2)
    return math.sqrt(float(np.sum(sq)) / sq.size)


def _initial_step(f, t0, y0, f0, rtol, atol, max_step, admissible):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    for _ in range(20):
        y1 = y0 + h0 * f0
        if admissible is None or admissible(y1):
            break
        h0 *= 0.1
    else:
        return min(1e-12, max_step)
    f1 = f(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def solve(f, t0, y0, t_end, rtol=1e-10, atol=1e-10, max_step=math.inf,
          step_bound=None, admissible=None, stop=None, near_stop=None,
          max_steps=1_000_000):
    """Integrate y' = f(t, y) from t0 to t_end.

    step_bound(t, y) -> additional per-step upper bound on h (or None).
    admissible(y)    -> False rejects a stage/endpoint (step retried smaller).
    stop(y)          -> halt when <= 0 at an accepted endpoint; the crossing
                        is bisected on the dense output to ~rtol accuracy.
    near_stop(t, y)  -> when the step size is pinned at the floating-point
                        floor and the step still fails, this may return an
                        upper bound on the remaining time to the stop set;
                        the solver then reports a stop with that bound as
                        the bracket width instead of a step failure.
    """
    y0 = np.asarray(y0, dtype=float)
    d = y0.size
    if stop is not None and stop(y0) <= 0.0:
        raise ValueError("stop(y0) <= 0 at the initial state")

    t, y = float(t0), y0.copy()
    f_curr = np.asarray(f(t, y), dtype=float)
    nfev = 1
    h = _initial_step(f, t, y, f_curr, rtol, atol, max_step, admissible)
    nfev += 1

    ts = [t]
    ys = [y.copy()]
    hs = [0.0]
    dense = []
    err_prev = 1e-4
    naccepted = nrejected = 0
    status, message = "reached_end", ""
    stop_t = stop_bracket = None

    K = np.empty((7, d))

    def attempt(h):
        """One trial step; returns (y_new, err_norm, K) or raises _StageRejected."""
        K[0] = f_curr
        for i in range(1, 6):
            yi = y + h * (K[:i].T @ _A[i - 1])
            if not np.all(np.isfinite(yi)) or (admissible is not None and not admissible(yi)):
                raise _StageRejected
            K[i] = f(t + _C[i] * h, yi)
        y_new = y + h * (K[:6].T @ _A[5])
        if not np.all(np.isfinite(y_new)) or (admissible is not None and not admissible(y_new)):
            raise _StageRejected
        K[6] = f(t + h, y_new)
        if not np.all(np.isfinite(K)):
            raise _StageRejected
        err = h * (K.T @ _E)
        return y_new, _error_norm(err, y, y_new, rtol, atol), K

    steps = 0
    while t < t_end:
        if steps >= max_steps:
            status, message = "step_failure", f"exceeded {max_steps} steps"
            break
        steps += 1

        h_floor = 16.0 * np.finfo(float).eps * max(abs(t), 1.0)
        h = min(h, max_step, t_end - t)
        if step_bound is not None:
            b = step_bound(t, y)
            if b is not None:
                h = min(h, b)
        pinned = h <= h_floor
        h = max(h, h_floor)

        try:
            y_new, err, _ = attempt(h)
            nfev += 6
        except _StageRejected:
            nfev += 6
            nrejected += 1
            if pinned:
                remain = near_stop(t, y) if near_stop is not None else None
                if remain is not None:
                    status, stop_t, stop_bracket = "stopped", t, (t, t + max(h, remain))
                    message = "step floor reached inside the stop neighborhood"
                else:
                    status, message = "step_failure", "inadmissible stages at the step floor"
                break
            h *= 0.5
            continue

        if err > 1.0:
            nrejected += 1
            if pinned:
                remain = near_stop(t, y) if near_stop is not None else None
                if remain is not None:
                    status, stop_t, stop_bracket = "stopped", t, (t, t + max(h, remain))
                    message = "step floor reached inside the stop neighborhood"
                else:
                    status, message = "step_failure", f"tolerance unmet at the step floor (err={err:.3g})"
                break
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            continue

        # Accepted: record node and dense coefficients, advance (FSAL).
        q = K.T @ _P  # (d, 4)
        dense.append(q.copy())
        t_new = t + h
        if t_end - t_new < h_floor:
            t_new = min(t_new, t_end)
        ts.append(t_new)
        ys.append(y_new.copy())
        hs.append(h)
        naccepted += 1

        factor = _SAFETY * err ** -_PI_ALPHA * err_prev ** _PI_BETA if err > 0 else _MAX_FACTOR
        h = h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = max(err, 1e-4)

        crossed = stop is not None and stop(y_new) <= 0.0
        t_prev, y_prev = t, y
        t, y, f_curr = t_new, y_new, K[6].copy()

        if crossed:
            status = "stopped"
            sol = RkSolution(np.array(ts), np.array(ys), np.array(hs),
                             np.array(dense), status, nfev=nfev)
            stop_t, stop_bracket = _bisect_stop(sol, stop, t_prev, t_new, rtol)
            break

    sol = RkSolution(
        ts=np.array(ts), ys=np.array(ys), hs=np.array(hs),
        dense_q=np.array(dense) if dense else np.empty((0, d, 4)),
        status=status, stop_t=stop_t, stop_bracket=stop_bracket,
        message=message, nfev=nfev, naccepted=naccepted, nrejected=nrejected,
    )
    return sol


def _bisect_stop(sol, stop, t_lo, t_hi, rtol):
    """Bisect the dense output for the stop crossing inside [t_lo, t_hi]."""
    g_lo = stop(sol.eval_dense(t_lo))
    if g_lo <= 0.0:  # crossing happened before this step (should not occur)
        return t_lo, (t_lo, t_hi)
    lo, hi = t_lo, t_hi
    for _ in range(200):
        if hi - lo <= rtol * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if stop(sol.eval_dense(mid)) <= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), (lo, hi)
