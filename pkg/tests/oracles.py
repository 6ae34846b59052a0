"""Reference computations written independently of the package code."""
import numpy as np
from scipy.integrate import solve_ivp


def ring_series(freq_hz, fsr, kappa0, kappa_ext, gamma=None, beta=0.0, n_atoms=0.0,
                delta_at=0.0, tol=1e-15):
    """Output field of the ring summed loop by loop.

    The probe either reflects off the coupler (amplitude t1) or enters the ring
    (t2), then leaves after m >= 1 further round trips with one more pass
    through the coupler in transmission (t2) and m - 1 reflections inside (t1).
    """
    f = np.asarray(freq_hz, dtype=float)
    t_rt = np.sqrt(1 - kappa0 / (2 * np.pi * fsr))
    t1 = np.sqrt(1 - kappa_ext / (2 * np.pi * fsr))
    t2 = np.sqrt(kappa_ext / (2 * np.pi * fsr))
    if n_atoms and beta:
        d = delta_at - 2 * np.pi * f
        t_at = (gamma * (1 - beta) - 1j * d) / (gamma * (1 + beta) - 1j * d)
        atoms = np.exp(n_atoms * np.log(t_at))
    else:
        atoms = np.ones_like(f, dtype=complex)
    loop = t_rt * atoms * np.exp(-2j * np.pi * f / fsr)
    out = t1 * np.ones_like(loop)
    # after entering: -t2 * loop * t2 * (t1 loop)^(m-1) with the coupler's pi phase
    term = -(t2 ** 2) * loop
    while True:
        out = out + term
        if np.max(np.abs(term)) < tol:
            break
        term = term * t1 * loop
    return np.abs(out) ** 2


def central_jacobian(fun, x, h):
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        cols.append((fun(x + e) - fun(x - e)) / (2 * h[j]))
    return np.stack(cols, axis=1)


def fluorescence_g2(tau, rabi, gamma):
    """Resonance-fluorescence g2 of one atom; population decay 2 gamma."""
    tau = np.asarray(tau, dtype=float)
    wr = np.sqrt(complex(rabi ** 2 - gamma ** 2 / 4))
    osc = np.cos(wr * tau) + (1.5 * gamma / wr) * np.sin(wr * tau)
    return (1 - np.exp(-1.5 * gamma * tau) * osc).real


def steady_excited(rabi, gamma, detuning=0.0):
    return rabi ** 2 / (2 * (rabi ** 2 + 2 * detuning ** 2 + 2 * gamma ** 2))


def lindblad_ode(rho0, rabi, gamma, detuning, taus):
    """Density matrix trajectory from direct integration of the master equation.

    Basis order (|e>, |g>).
    """
    sm = np.array([[0, 0], [1, 0]], dtype=complex)
    sp = sm.T.copy()
    h = -detuning * sp @ sm + 0.5 * rabi * (sp + sm)
    g = 2 * gamma

    def rhs(_, y):
        r = y.reshape(2, 2)
        d = -1j * (h @ r - r @ h) + g * (sm @ r @ sp - 0.5 * (sp @ sm @ r + r @ sp @ sm))
        return d.ravel()

    sol = solve_ivp(rhs, (0, taus[-1]), np.asarray(rho0, complex).ravel(), t_eval=taus,
                    rtol=1e-11, atol=1e-13, method="DOP853")
    return sol.y.T.reshape(-1, 2, 2)


def measured_fwhm(x, y):
    """Full width at half depth of a single dip, with linear edge interpolation."""
    i = int(np.argmin(y))
    base = max(y[0], y[-1])
    half = 0.5 * (base + y[i])
    left = i
    while y[left] < half:
        left -= 1
    right = i
    while y[right] < half:
        right += 1
    xl = np.interp(half, [y[left + 1], y[left]], [x[left + 1], x[left]])
    xr = np.interp(half, [y[right - 1], y[right]], [x[right - 1], x[right]])
    return xr - xl
