"""Inner loops that dominate Monte Carlo runtime.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version. ``jacobi_sweeps`` and ``residual_energy`` point at
whichever backend :mod:`blindnull._accel` selected.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit


def _rotation(app, aqq, apq):
    # Unitary 2x2 Jacobi rotation zeroing a complex off-diagonal entry.
    r = abs(apq)
    e = apq / r
    theta = (aqq - app) / (2.0 * r)
    if theta == 0.0:
        t = 1.0
    elif abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(1.0 + t * t)
    return c, t * c, e, t * r


def _offdiag_norm_loops(a):
    n = a.shape[0]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                z = a[i, j]
                acc += z.real * z.real + z.imag * z.imag
    return math.sqrt(acc)


def _jacobi_sweeps_loops(a, v, tol, max_sweeps):
    n = a.shape[0]
    sweeps = 0
    while sweeps < max_sweeps:
        if _offdiag_norm_loops(a) <= tol:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq.real == 0.0 and apq.imag == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                c, s, e, shift = _rotation(app, aqq, apq)
                ec = e.conjugate()
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * ec * akq
                    a[k, q] = s * akp + c * ec * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * e * aqk
                    a[q, k] = s * apk + c * e * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - shift
                a[q, q] = aqq + shift
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * ec * vkq
                    v[k, q] = s * vkp + c * ec * vkq
    return sweeps


def jacobi_sweeps_numpy(a, v, tol, max_sweeps):
    """Cyclic complex Jacobi on ``a`` in place, accumulating rotations in ``v``.

    Pivots are visited in row-major order ``(0,1), (0,2), ..., (n-2,n-1)``.
    Returns the number of sweeps performed.
    """
    n = a.shape[0]
    mask = ~np.eye(n, dtype=bool)
    sweeps = 0
    while sweeps < max_sweeps:
        if np.sqrt(np.sum(np.abs(a[mask]) ** 2)) <= tol:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = complex(a[p, q])
                if apq == 0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                c, s, e, shift = _rotation(app, aqq, apq)
                ec = e.conjugate()
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * ec * colq
                a[:, q] = s * colp + c * ec * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * e * rowq
                a[q, :] = s * rowp + c * e * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - shift
                a[q, q] = aqq + shift
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * ec * vq
                v[:, q] = s * vp + c * ec * vq
    return sweeps


def _residual_energy_loops(signal, direct, noise_factor, projector, w, x1):
    # sum_k || P (y_k - H x1_k) ||^2 with y_k = H x1_k + s + L w_k
    n_samples = w.shape[0]
    r = signal.shape[0]
    t = direct.shape[1]
    hx = np.empty(r, dtype=np.complex128)
    z = np.empty(r, dtype=np.complex128)
    total = 0.0
    for k in range(n_samples):
        for i in range(r):
            acc = 0.0 + 0.0j
            for j in range(t):
                acc += direct[i, j] * x1[k, j]
            hx[i] = acc
        for i in range(r):
            acc = signal[i] + hx[i]
            for j in range(r):
                acc += noise_factor[i, j] * w[k, j]
            z[i] = acc - hx[i]
        for i in range(r):
            acc = 0.0 + 0.0j
            for j in range(r):
                acc += projector[i, j] * z[j]
            total += acc.real * acc.real + acc.imag * acc.imag
    return total


def residual_energy_numpy(signal, direct, noise_factor, projector, w, x1):
    """Summed projected residual energy over a block of symbol instants.

    ``w`` is (n, r) white noise and ``x1`` the (n, t) decoded PU symbols.
    """
    hx = x1 @ direct.T
    y = hx + signal[None, :] + w @ noise_factor.T
    z = (y - hx) @ projector.T
    return float(np.sum(z.real**2 + z.imag**2))


if HAVE_NUMBA:
    _rotation = njit(_rotation)
    _offdiag_norm_loops = njit(_offdiag_norm_loops)
    jacobi_sweeps_numba = njit(_jacobi_sweeps_loops)
    residual_energy_numba = njit(_residual_energy_loops)
    jacobi_sweeps = jacobi_sweeps_numba
    residual_energy = residual_energy_numba
else:
    jacobi_sweeps_numba = None
    residual_energy_numba = None
    jacobi_sweeps = jacobi_sweeps_numpy
    residual_energy = residual_energy_numpy
