"""Parameter recovery from measured spectra and exchange traces.

All fitters minimize a sigma-weighted sum of squared residuals with
Nelder-Mead descent from a data-driven initial guess (plus random restarts),
followed by a Levenberg-Marquardt polish on the residual vector so that
exact model-generated data is recovered down to numerical noise.
Uncertainties come from the residual curvature at the optimum and are
approximate in the usual quadratic-expansion sense.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .equilibrium import IonConfiguration
from .modes import NotConvergedError, UnstableEquilibriumError, mode_frequencies
from .potential import (
    AxialPotential,
    IonSpecies,
    NotADoubleWellError,
    calibrate_symmetric,
    find_wells,
)

_BAD_RESIDUAL = 1e9


@dataclass(frozen=True)
class FitResult:
    """Best-fit parameters with curvature uncertainties.

    residual is the weighted sum of squares at the optimum; converged means
    the optimizer strictly improved on the initial guess (or the guess was
    already exact).
    """

    parameters: dict
    uncertainties: dict
    residual: float
    converged: bool
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class SpectraDataset:
    """Sideband peak positions grouped by ion configuration.

    configurations maps (n_left, n_right) to an (N, 4) array with columns
    u_ax [V], frequency [Hz], sigma [Hz], timestamp [s].
    """

    configurations: dict

    def __post_init__(self):
        if not self.configurations:
            raise ValueError("dataset is empty")
        clean = {}
        for key, arr in self.configurations.items():
            arr = np.asarray(arr, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 4:
                raise ValueError("each configuration needs columns (u, f, sigma, t)")
            if arr.shape[0] < 3:
                raise ValueError(f"configuration {key} has fewer than 3 points")
            if np.any(arr[:, 2] <= 0):
                raise ValueError("all sigmas must be positive")
            clean[(int(key[0]), int(key[1]))] = arr
        object.__setattr__(self, "configurations", clean)


# ---------------------------------------------------------------------------
# generic engine

def _jacobian(residual_fn, x, h=1e-6):
    r0 = residual_fn(x)
    jac = np.empty((len(r0), len(x)))
    for i in range(len(x)):
        step = h * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        jac[:, i] = (residual_fn(xp) - residual_fn(xm)) / (2.0 * step)
    jac[~np.isfinite(jac)] = _BAD_RESIDUAL
    return jac


def _levenberg_polish(residual_fn, x, max_iter=40):
    r = residual_fn(x)
    chi2 = float(r @ r)
    lam = 1e-8
    for _ in range(max_iter):
        if chi2 < 1e-16:
            break
        jac = _jacobian(residual_fn, x)
        grad = jac.T @ r
        normal = jac.T @ jac
        improved = False
        for _ in range(14):
            try:
                step = np.linalg.solve(normal + lam * np.eye(len(x)), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_new = residual_fn(x + step)
            chi2_new = float(r_new @ r_new)
            if np.isfinite(chi2_new) and chi2_new < chi2:
                x = x + step
                r, chi2 = r_new, chi2_new
                lam = max(lam * 0.1, 1e-14)
                improved = True
                break
            lam *= 10.0
        if not improved:
            break
    return x, chi2


def _fit_engine(residual_fn, x0, seed, restarts, nm_maxfev=2000):
    """Nelder-Mead restarts followed by a Levenberg-Marquardt polish.

    Works in scaled coordinates (caller scales); returns the best point, its
    chi-square and the chi-square of the initial guess.
    """
    def chi2_fn(x):
        r = residual_fn(x)
        val = float(r @ r)
        return val if np.isfinite(val) else _BAD_RESIDUAL**2

    x0 = np.asarray(x0, dtype=float)
    chi2_init = chi2_fn(x0)
    rng = np.random.default_rng(seed)
    best_x, best_chi2 = x0, chi2_init
    for attempt in range(max(1, restarts)):
        start = x0 if attempt == 0 else x0 * rng.normal(1.0, 0.05, size=len(x0))
        res = minimize(chi2_fn, start, method="Nelder-Mead",
                       options={"maxfev": nm_maxfev, "xatol": 1e-10,
                                "fatol": 1e-14, "adaptive": True})
        if res.fun < best_chi2:
            best_x, best_chi2 = np.asarray(res.x, dtype=float), float(res.fun)
    best_x, best_chi2 = _levenberg_polish(residual_fn, best_x)
    return best_x, best_chi2, chi2_init


def _curvature_uncertainties(residual_fn, x, names, warnings):
    """1-sigma errors from the quadratic expansion of chi^2 at the optimum."""
    jac = _jacobian(residual_fn, x)
    normal = jac.T @ jac
    sigmas = {}
    try:
        cov = np.linalg.inv(normal)
        diag = np.diag(cov)
        if np.any(diag <= 0):
            raise np.linalg.LinAlgError
        for name, var in zip(names, diag):
            sigmas[name] = math.sqrt(var)
        return sigmas
    except np.linalg.LinAlgError:
        warnings.append("curvature matrix is singular; "
                        "per-parameter uncertainties ignore correlations")
    r0 = residual_fn(x)
    chi2_0 = float(r0 @ r0)
    for i, name in enumerate(names):
        h = 1e-4 * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        rp, rm = residual_fn(xp), residual_fn(xm)
        curv = (float(rp @ rp) - 2.0 * chi2_0 + float(rm @ rm)) / (h * h)
        sigmas[name] = math.sqrt(2.0 / curv) if curv > 0 else math.inf
    return sigmas


# ---------------------------------------------------------------------------
# exchange trace

def _exchange_model(tau, n1_0, n2_0, omega_c, tau_damp, gamma_h):
    nbar = 0.5 * (n1_0 + n2_0)
    dn = n1_0 - n2_0
    return (nbar + 0.5 * dn * np.cos(omega_c * tau) * np.exp(-tau / tau_damp)
            + gamma_h * tau)


def _dominant_frequency(tau, detrended):
    """Peak of the discrete spectrum of the detrended trace (works for
    irregular sampling)."""
    span = tau.max() - tau.min()
    dt = float(np.median(np.diff(np.sort(tau))))
    if span <= 0 or dt <= 0:
        return None
    freqs = np.linspace(0.5 / span, 0.45 / dt, 600)
    power = np.abs(np.exp(-2j * math.pi * np.outer(freqs, tau)) @ detrended)
    return float(freqs[np.argmax(power)])


def fit_exchange(data, seed: int = 0, restarts: int = 5) -> FitResult:
    """Fit (n1_0, n2_0, omega_c, tau_damp, gamma_h) to a phonon trace.

    data rows are (tau [s], n1_mean, sigma). The frequency guess comes from
    the dominant spectral peak of the linearly detrended data.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("data must have columns (tau, n1, sigma)")
    if arr.shape[0] < 8:
        raise ValueError("need at least 8 data points")
    if np.any(arr[:, 2] <= 0):
        raise ValueError("all sigmas must be positive")
    tau, y, sig = arr[:, 0], arr[:, 1], arr[:, 2]

    warnings = []
    design = np.vstack([np.ones_like(tau), tau]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    baseline, heat0 = float(coef[0]), float(coef[1])
    detrended = y - design @ coef
    yscale = max(1.0, float(np.max(np.abs(y))))
    if float(np.std(y)) < 1e-12 * yscale or float(np.std(detrended)) < 1e-12 * yscale:
        return FitResult(parameters={}, uncertainties={}, residual=math.nan,
                         converged=False,
                         warnings=["degenerate data: trace carries no oscillation"])

    f0 = _dominant_frequency(tau, detrended)
    if f0 is None:
        return FitResult(parameters={}, uncertainties={}, residual=math.nan,
                         converged=False, warnings=["degenerate time axis"])
    omega0 = 2.0 * math.pi * f0
    span = tau.max() - tau.min()
    if span * f0 < 1.0:
        warnings.append("data span below one estimated swap period")
    first = int(np.argmin(tau))
    n1_00 = max(y[first] - heat0 * tau[first], 0.0)
    n2_00 = max(2.0 * baseline - n1_00, 0.0)
    p0 = np.array([max(n1_00, 0.1), max(n2_00, 0.1), omega0, span,
                   heat0 if abs(heat0) > 1e-12 else 0.1 / span])
    scales = np.abs(p0)
    names = ("n1_0", "n2_0", "omega_c", "tau_damp", "gamma_h")

    def residuals(x):
        n1_0, n2_0, omega_c, tau_damp, gamma_h = x * scales
        if tau_damp <= 0:
            return np.full(len(tau), _BAD_RESIDUAL)
        return (_exchange_model(tau, n1_0, n2_0, omega_c, tau_damp, gamma_h) - y) / sig

    x_best, chi2, chi2_init = _fit_engine(residuals, p0 / scales, seed, restarts)
    params = dict(zip(names, x_best * scales))
    sigmas = _curvature_uncertainties(residuals, x_best, names, warnings)
    sigmas = {k: v * s for (k, v), s in zip(sigmas.items(), scales)}
    converged = chi2 < chi2_init or chi2 < 1e-12
    return FitResult(parameters=params, uncertainties=sigmas, residual=chi2,
                     converged=converged, warnings=warnings)


# ---------------------------------------------------------------------------
# avoided-crossing hyperbola

def _hyperbola_branches(u, nu_bar, slope, u_res, s):
    half = 0.5 * np.sqrt((slope * (u - u_res)) ** 2 + s * s)
    return nu_bar - half, nu_bar + half


def _crossing_guess(u, nu):
    """Initial (nu_bar, slope, u_res, s) from per-voltage branch pairs."""
    pairs = {}
    for ui, fi in zip(u, nu):
        pairs.setdefault(float(ui), []).append(float(fi))
    gaps = {ui: max(fs) - min(fs) for ui, fs in pairs.items() if len(fs) >= 2}
    if gaps:
        u_res0 = min(gaps, key=gaps.get)
        s0 = max(gaps[u_res0], 1e-6 * max(1.0, float(np.max(nu))))
        nu_bar0 = float(np.mean(pairs[u_res0]))
        u_far = max(gaps, key=lambda ui: abs(ui - u_res0))
        du = abs(u_far - u_res0)
        if du > 0 and gaps[u_far] > s0:
            slope0 = math.sqrt(gaps[u_far] ** 2 - s0**2) / du
        else:
            slope0 = 2.0 * (np.max(nu) - np.min(nu)) / max(np.ptp(u), 1e-12)
    else:
        nu_bar0 = float(np.mean(nu))
        u_res0 = float(np.median(u))
        s0 = max(float(np.std(nu)) / 2.0, 1e-6)
        slope0 = 2.0 * (np.max(nu) - np.min(nu)) / max(np.ptp(u), 1e-12)
    return nu_bar0, slope0, u_res0, s0


def fit_avoided_crossing(points, seed: int = 0, restarts: int = 5) -> FitResult:
    """Fit the two-level hyperbola nu+- = nu_bar +- sqrt(slope^2 (u-u_res)^2 + s^2)/2.

    points rows are (u_ax [V], frequency [Hz], sigma [Hz]); each point is
    assigned to whichever branch leaves the smaller residual. The reported
    splitting is |s|.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("points must have columns (u_ax, frequency, sigma)")
    if arr.shape[0] < 4:
        raise ValueError("need at least 4 points")
    if np.any(arr[:, 2] <= 0):
        raise ValueError("all sigmas must be positive")
    u, nu, sig = arr[:, 0], arr[:, 1], arr[:, 2]

    warnings = []
    nu_bar0, slope0, u_res0, s0 = _crossing_guess(u, nu)
    p0 = np.array([nu_bar0, slope0, u_res0, s0])
    scales = np.array([max(abs(nu_bar0), 1.0), max(abs(slope0), 1.0),
                       max(abs(u_res0), 1e-3), max(abs(s0), 1e-3)])
    names = ("nu_bar", "slope", "u_res", "splitting")

    def residuals(x):
        nu_bar, slope, u_res, s = x * scales
        low, high = _hyperbola_branches(u, nu_bar, slope, u_res, s)
        r_low = (low - nu) / sig
        r_high = (high - nu) / sig
        return np.where(np.abs(r_low) <= np.abs(r_high), r_low, r_high)

    groups = {}
    for ui, fi in zip(u, nu):
        groups.setdefault(float(ui), []).append(float(fi))
    if max(len(fs) for fs in groups.values()) < 2:
        warnings.append("no voltage samples both branches; "
                        "splitting is weakly identified")

    x_best, chi2, chi2_init = _fit_engine(residuals, p0 / scales, seed, restarts)
    params = dict(zip(names, x_best * scales))
    params["splitting"] = abs(params["splitting"])
    sigmas = _curvature_uncertainties(residuals, x_best, names, warnings)
    sigmas = {k: v * s for (k, v), s in zip(sigmas.items(), scales)}
    converged = chi2 < chi2_init or chi2 < 1e-12
    return FitResult(parameters=params, uncertainties=sigmas, residual=chi2,
                     converged=converged, warnings=warnings)


# ---------------------------------------------------------------------------
# multi-configuration spectra

_SPECTRA_NAMES = ("alpha2", "alpha4", "tune1", "tune2", "u_offset", "drift_rate")


def _spectra_residuals_factory(dataset, species, scales, free_idx, p_full):
    cache = {}

    def residuals(x_free):
        p = p_full.copy()
        p[free_idx] = x_free * scales[free_idx]
        alpha2, alpha4, tune1, tune2, u_off, drift = p
        if alpha4 <= 0 or alpha2 >= 0:
            total = sum(len(a) for a in dataset.configurations.values())
            return np.full(total, _BAD_RESIDUAL)
        pot = AxialPotential(0.0, alpha2, alpha4, tune1, tune2)
        key_p = p.tobytes()
        out = []
        for (nl, nr), arr in sorted(dataset.configurations.items()):
            config = IonConfiguration(species, nl, nr)
            u_corr = arr[:, 0] + u_off + drift * arr[:, 3]
            order = np.argsort(u_corr)
            freqs_by_point = np.empty((len(arr), 2))
            seeds = None
            for idx in order:
                uc = float(u_corr[idx])
                ck = (key_p, nl, nr, uc)
                if ck in cache:
                    pair, seeds = cache[ck]
                else:
                    try:
                        ms = mode_frequencies(pot, uc, config, seed_positions=seeds)
                        pair = (float(ms.frequencies[0]), float(ms.frequencies[1]))
                        seeds = ms.equilibrium.positions
                    except (NotADoubleWellError, NotConvergedError,
                            UnstableEquilibriumError, np.linalg.LinAlgError,
                            ValueError):
                        pair, seeds = None, None
                    cache[ck] = (pair, seeds)
                freqs_by_point[idx] = pair if pair is not None else (math.nan, math.nan)
            r_low = (freqs_by_point[:, 0] - arr[:, 1]) / arr[:, 2]
            r_high = (freqs_by_point[:, 1] - arr[:, 1]) / arr[:, 2]
            r = np.where(np.abs(r_low) <= np.abs(r_high), r_low, r_high)
            r[~np.isfinite(r)] = _BAD_RESIDUAL
            out.append(r)
        if len(cache) > 200_000:
            cache.clear()
        return np.concatenate(out)

    return residuals


def _tune1_guess(dataset, pot0, species):
    """Rough tune1 from the observed frequency swing across the scanned
    voltages, converted through the model's frequency-vs-voltage slope."""
    spans_f, spans_u = [], []
    for arr in dataset.configurations.values():
        spans_f.append(np.ptp(arr[:, 1]))
        spans_u.append(np.ptp(arr[:, 0]))
    du = max(spans_u)
    if du <= 0:
        return 1e-18
    slope_data = max(spans_f) / du
    probe = AxialPotential(0.0, pot0.alpha2, pot0.alpha4, 1.0, 0.0)
    eps = 1e-22
    wp = find_wells(probe, eps, species)
    wm = find_wells(probe, -eps, species)
    per_unit = abs((wp.freq_right - wp.freq_left) - (wm.freq_right - wm.freq_left)) / (2 * eps)
    if per_unit <= 0:
        return 1e-18
    return slope_data / per_unit


def fit_spectra(dataset: SpectraDataset, species: IonSpecies,
                approx_separation: float, approx_frequency: float,
                tune1_guess: float | None = None, freeze=(),
                seed: int = 0, restarts: int = 2,
                nm_maxfev: int = 600) -> FitResult:
    """Fit the shared potential/tuning parameters to all configurations at once.

    Free parameters: (alpha2, alpha4, tune1, tune2, u_offset, drift_rate);
    any subset can be frozen at its initial value via `freeze`. The control
    voltage of every point is corrected as u + u_offset + drift_rate*t.
    The initial quartic comes from calibrate_symmetric on the user-supplied
    approximate separation and frequency.
    """
    warnings = []
    if len(dataset.configurations) < 2:
        warnings.append("identifiability: only one configuration present; "
                        "potential and tuning parameters are degenerate")
    unknown = set(freeze) - set(_SPECTRA_NAMES)
    if unknown:
        raise ValueError(f"unknown parameters to freeze: {sorted(unknown)}")

    pot0 = calibrate_symmetric(approx_separation, approx_frequency, species)
    t1 = tune1_guess if tune1_guess is not None else _tune1_guess(dataset, pot0, species)
    p_full = np.array([pot0.alpha2, pot0.alpha4, t1, 0.0, 0.0, 0.0])
    scales = np.array([abs(pot0.alpha2), abs(pot0.alpha4), max(abs(t1), 1e-19),
                       abs(pot0.alpha2) * 0.05, 1e-2, 1e-6])
    free_idx = np.array([i for i, n in enumerate(_SPECTRA_NAMES) if n not in freeze])
    if len(free_idx) == 0:
        raise ValueError("at least one parameter must stay free")

    residuals = _spectra_residuals_factory(dataset, species, scales, free_idx, p_full)
    x0 = p_full[free_idx] / scales[free_idx]
    x_best, chi2, chi2_init = _fit_engine(residuals, x0, seed, restarts,
                                          nm_maxfev=nm_maxfev)

    p_best = p_full.copy()
    p_best[free_idx] = x_best * scales[free_idx]
    params = dict(zip(_SPECTRA_NAMES, p_best))
    free_names = [_SPECTRA_NAMES[i] for i in free_idx]
    sigmas_free = _curvature_uncertainties(residuals, x_best, free_names, warnings)
    sigmas = {n: 0.0 for n in _SPECTRA_NAMES}
    for (name, val), i in zip(sigmas_free.items(), free_idx):
        sigmas[name] = val * scales[i]
    converged = chi2 < chi2_init or chi2 < 1e-12
    if chi2 >= chi2_init and chi2 >= 1e-12:
        warnings.append("optimizer failed to improve on the initial guess")
    return FitResult(parameters=params, uncertainties=sigmas, residual=chi2,
                     converged=converged, warnings=warnings)


# ---------------------------------------------------------------------------
# file formats

def load_exchange_csv(path):
    """Read (tau_s, n1_mean, sigma) rows; '#' comments and a header line are
    skipped."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(rec[0]), float(rec[1]), float(rec[2])])
            except ValueError:
                continue  # header
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return np.asarray(rows)


def load_crossing_csv(path):
    """Read (u_ax_V, frequency_Hz, sigma_Hz) rows."""
    return load_exchange_csv(path)


def load_spectra_csv(path) -> SpectraDataset:
    """Read (config_label, u_ax_V, frequency_Hz, sigma_Hz, timestamp_s) rows.

    config_label is 'NL+NR', e.g. '2+1'.
    """
    groups = {}
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            label = rec[0].strip()
            if "+" not in label:
                continue
            try:
                nl, nr = (int(s) for s in label.split("+"))
                vals = [float(v) for v in rec[1:5]]
            except ValueError:
                continue  # header
            groups.setdefault((nl, nr), []).append(vals)
    if not groups:
        raise ValueError(f"no data rows in {path}")
    return SpectraDataset({k: np.asarray(v) for k, v in groups.items()})


def fit_report_dict(result: FitResult) -> dict:
    """JSON-ready report of a fit."""
    return {
        "parameters": {k: float(v) for k, v in result.parameters.items()},
        "uncertainties": {k: float(v) for k, v in result.uncertainties.items()},
        "residual": float(result.residual),
        "converged": bool(result.converged),
        "warnings": list(result.warnings),
    }
