"""opspace command line: every command writes CSV data plus a JSON manifest.

Exit codes: 0 ok, 1 usage, 2 IO, 3 numerical consistency.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import output
from .dynamics import (SourceDecomposition, evolve, initial_state, kappa_sweep, observables,
                       source_decompose)
from .lattice import (ZERO_TOL, ConsistencyError, casimir_in_tensor_basis, extract_couplings,
                      verify_selection_rules)
from .liouvillian import ModelSpec, build_liouvillian
from .perturbative import match_spectra, perturbation_error, perturbative_spectrum, rotate_basis
from .spectral import ExceptionalPointError, decompose, profile_mode, slowest_oscillatory_pair
from .spin import SpinSystem
from .tensors import build_tensor_basis, flat_index

COMMANDS = ("coupling-matrix", "onsite-decay", "spectrum", "hybridization", "heatmap",
            "evolve", "precession-check", "perturbative-compare")

# per-command model defaults: (kind, N, gamma_over_omega)
DEFAULTS = {
    "coupling-matrix": ("btc", 7, 1.0),
    "onsite-decay": ("btc", 7, 1.0),
    "spectrum": ("btc", 5, 0.5),
    "hybridization": ("btc", 5, None),
    "heatmap": ("btc", 5, 2.0),
    "evolve": ("btc", 5, 1.0),
    "precession-check": ("precession", 4, None),
    "perturbative-compare": ("btc", 5, 0.1),
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> np.ndarray:
    """'a:b:c' -> a, a+c, ..., b (inclusive, endpoint snapped); 'x,y,z' -> list."""
    try:
        if ":" in text:
            a, b, c = (float(v) for v in text.split(":"))
            if c <= 0 or b < a:
                raise UsageError(f"bad grid {text!r}: need start <= stop and step > 0")
            n = int(np.floor((b - a) / c + 1e-9)) + 1
            return a + c * np.arange(n)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse grid {text!r}") from exc


def parse_state(text: str) -> tuple[str, float, float]:
    if text in ("polarized", "mixed"):
        return text, 0.0, 0.0
    if text.startswith("coherent"):
        rest = text[len("coherent"):].lstrip(":")
        if not rest:
            return "coherent", 0.0, 0.0
        try:
            theta, phi = (float(v) for v in rest.split(","))
        except ValueError as exc:
            raise UsageError(f"coherent state needs 'coherent:theta,phi', got {text!r}") from exc
        return "coherent", theta, phi
    raise UsageError(f"unknown state {text!r}")


@dataclass
class RunConfig:
    command: str
    model: ModelSpec
    out: str = "."
    times: str = "0:50:0.05"
    state: str = "polarized"
    x_basis: bool = True
    ratios: tuple = (0.5, 2.0)
    kappas: str = "0:4:0.001"
    gammas: tuple = (0.2, 0.1, 0.05, 0.025)
    max_rank: int = 2
    plot: bool = False

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["model"] = self.model.to_dict()
        d["ratios"] = list(self.ratios)
        d["gammas"] = list(self.gammas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        d["model"] = ModelSpec.from_dict(d["model"])
        for key in ("ratios", "gammas"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="opspace", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int, help="number of spins N (spin j = N/2)")
    p.add_argument("--model", choices=("btc", "precession"))
    p.add_argument("--omega", type=float)
    p.add_argument("--gamma-over-omega", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="RunConfig JSON; explicit flags override it")
    p.add_argument("--times", help="time grid a:b:c (evolve)")
    p.add_argument("--state", help="polarized | mixed | coherent:theta,phi (evolve)")
    p.add_argument("--x-basis", action=argparse.BooleanOptionalAction, default=None,
                   help="x-quantized (k, q_x) coordinates for heatmap (default on)")
    p.add_argument("--ratios", help="Gamma/Omega list for hybridization, e.g. 0.5,2")
    p.add_argument("--kappas", help="kappa grid a:b:c for precession-check")
    p.add_argument("--gammas", help="Gamma/Omega sweep for perturbative-compare")
    p.add_argument("--max-rank", type=int, help="highest rank written to trajectory.csv")
    p.add_argument("--plot", action="store_true", help="also write PNG figures")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    kind, n, ratio = DEFAULTS[args.command]
    base: dict = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
        if base.get("command", args.command) != args.command:
            raise UsageError(f"config is for {base['command']!r}, not {args.command!r}")
    model = dict(base.get("model", {}))
    model.setdefault("kind", kind)
    model.setdefault("N", n)
    model.setdefault("omega", 1.0)
    if "gamma" not in model:
        model.setdefault("gamma_over_omega", 1.0 if ratio is None else ratio)
    if args.model is not None:
        model["kind"] = args.model
    if args.n is not None:
        model["N"] = args.n
    if args.omega is not None:
        model["omega"] = args.omega
    if args.gamma_over_omega is not None:
        model.pop("gamma", None)
        model["gamma_over_omega"] = args.gamma_over_omega
    base["model"] = model
    base["command"] = args.command
    for key in ("out", "times", "state", "kappas", "max_rank"):
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    if args.x_basis is not None:
        base["x_basis"] = args.x_basis
    if args.ratios is not None:
        base["ratios"] = tuple(parse_grid(args.ratios))
    if args.gammas is not None:
        base["gammas"] = tuple(parse_grid(args.gammas))
    if args.plot:
        base["plot"] = True
    try:
        cfg = RunConfig.from_dict(base)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    if cfg.max_rank < 0:
        raise UsageError("--max-rank must be >= 0")
    return cfg


def _setup(cfg: RunConfig):
    spin = SpinSystem(cfg.model.N)
    basis = build_tensor_basis(spin)
    return spin, basis


def _plot(path: Path, draw) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def cmd_coupling_matrix(cfg: RunConfig):
    spin, basis = _setup(cfg)
    L = build_liouvillian(cfg.model, basis)[1]
    c = extract_couplings(cfg.model, L, basis)
    out = Path(cfg.out)
    N = cfg.model.N
    # roundoff in structurally zero blocks is chopped so the file is portable
    C = np.where(c.C > ZERO_TOL * c.C.max(), c.C, 0.0)
    header = ["k"] + [f"from_k{kp}" for kp in range(N + 1)]
    files = [output.write_csv(out / "coupling_matrix.csv", header,
                              ([k] + list(C[k]) for k in range(N + 1)))]
    bonds = [{"k": k, "up": C[k + 1, k], "down": C[k, k + 1],
              "ordering": "up>down" if C[k + 1, k] > C[k, k + 1] else
              ("up<down" if C[k + 1, k] < C[k, k + 1] else "equal")}
             for k in range(N)]
    if cfg.plot:
        files.append(_plot(out / "coupling_matrix.png", lambda ax: (
            ax.imshow(C, cmap="viridis"), ax.set_xlabel("k'"), ax.set_ylabel("k"))))
    rep = verify_selection_rules(cfg.model, L, basis)
    return files, {"bonds": bonds, "selection_rules_ok": rep.ok(),
                   "note": "C[k, k'] = ||P(k) L P(k')||_F; 'up' is k -> k+1"}


def cmd_onsite_decay(cfg: RunConfig):
    spin, basis = _setup(cfg)
    L = build_liouvillian(cfg.model, basis)[1]
    c = extract_couplings(cfg.model, L, basis)
    out = Path(cfg.out)
    files = [
        output.write_csv(out / "onsite_decay.csv", ["k", "q", "gamma_kq"],
                         ([k, q, c.gamma[k, q]] for k, q in c.sites())),
        output.write_csv(out / "onsite_mean.csv", ["k", "mean_q_gamma"],
                         enumerate(c.mean_gamma())),
        output.write_csv(
            out / "hoppings.csv",
            ["k", "q", "re_t_plus", "im_t_plus", "re_t_minus", "im_t_minus",
             "w_plus", "w_minus", "gamma_over_n"],
            ([k, q, c.t_plus[k, q].real, c.t_plus[k, q].imag, c.t_minus[k, q].real,
              c.t_minus[k, q].imag, c.w_plus[k, q], c.w_minus[k, q], c.gamma_rate]
             for k, q in c.sites())),
    ]
    mean = c.mean_gamma()
    if cfg.plot:
        files.append(_plot(out / "onsite_decay.png", lambda ax: (
            ax.plot(basis.k_of_index, [c.gamma[kq] for kq in basis.labels], ".", alpha=0.5),
            ax.plot(range(len(mean)), mean, "o-"), ax.set_xlabel("k"),
            ax.set_ylabel("gamma(k, q)"))))
    return files, {"mean_gamma_strictly_increasing": bool(np.all(np.diff(mean[1:]) > 0))}


def _spectrum(cfg: RunConfig, basis):
    L = build_liouvillian(cfg.model, basis)[1]
    K2 = casimir_in_tensor_basis(basis)
    return decompose(L.matrix, split_by=K2, strict=False)


def _order(lam):
    return np.lexsort((np.round(lam.imag, 12), np.round(-lam.real, 12)))


def cmd_spectrum(cfg: RunConfig):
    spin, basis = _setup(cfg)
    data = _spectrum(cfg, basis)
    lam = data.eigenvalues
    rows = []
    for n in _order(lam):
        pr = profile_mode(data, int(n), basis)
        rows.append([int(n), lam[n].real, lam[n].imag, data.condition[n],
                     bool(data.defective_mask[n]), pr.pr_k,
                     float(np.dot(np.arange(basis.N + 1), pr.w_k))])
    out = Path(cfg.out)
    files = [output.write_csv(out / "spectrum.csv",
                              ["mode", "re_lambda", "im_lambda", "condition", "defective",
                               "pr_k", "mean_k"], rows)]
    if cfg.plot:
        files.append(_plot(out / "spectrum.png", lambda ax: (
            ax.plot(lam.real, lam.imag, "o", ms=3), ax.set_xlabel("Re lambda"),
            ax.set_ylabel("Im lambda"))))
    n_zero = int(np.sum(np.abs(lam) < 1e-10))
    return files, {"modes": len(lam), "zero_modes": n_zero,
                   "defective_modes": int(np.sum(data.defective_mask))}


def _slowest_profile(model: ModelSpec, basis, x_axis: bool, xbasis=None):
    L = build_liouvillian(model, basis)[1]
    data = decompose(L.matrix, split_by=casimir_in_tensor_basis(basis), strict=False)
    pair = slowest_oscillatory_pair(data, model.omega)
    if pair is None:
        raise UsageError(f"no oscillatory mode at Gamma/Omega = {model.gamma / model.omega:g}")
    return profile_mode(data, pair[0], basis, x_axis=x_axis, xbasis=xbasis)


def cmd_hybridization(cfg: RunConfig):
    spin, basis = _setup(cfg)
    out = Path(cfg.out)
    files, summary = [], []
    for r in cfg.ratios:
        m = ModelSpec.from_ratio(cfg.model.kind, cfg.model.N, cfg.model.omega, r)
        prof = _slowest_profile(m, basis, x_axis=False)
        name = f"hybridization_g{output.fmt(r)}.csv"
        files.append(output.write_csv(out / name, ["k", "w_k"], enumerate(prof.w_k)))
        summary.append({"gamma_over_omega": r, "eigenvalue": prof.eigenvalue, "pr_k": prof.pr_k,
                        "file": name})
        if cfg.plot:
            files.append(_plot(out / name.replace(".csv", ".png"), lambda ax, w=prof.w_k: (
                ax.bar(range(len(w)), w), ax.set_xlabel("k"), ax.set_ylabel("w_k"))))
    return files, {"slowest_oscillatory_mode": summary}


def cmd_heatmap(cfg: RunConfig):
    spin, basis = _setup(cfg)
    prof = _slowest_profile(cfg.model, basis, x_axis=cfg.x_basis)
    qname = "q_x" if cfg.x_basis else "q"
    out = Path(cfg.out)
    files = [output.write_csv(out / "heatmap.csv", ["k", qname, "w_kq"],
                              ([k, q, prof.w_kq[k, q]] for k, q in basis.labels))]
    if cfg.plot:
        N = basis.N
        grid = np.full((N + 1, 2 * N + 1), np.nan)
        for (k, q), w in prof.w_kq.items():
            grid[k, q + N] = w
        files.append(_plot(out / "heatmap.png", lambda ax: (
            ax.imshow(grid, origin="lower", extent=(-N - 0.5, N + 0.5, -0.5, N + 0.5)),
            ax.set_xlabel(qname), ax.set_ylabel("k"))))
    return files, {"eigenvalue": prof.eigenvalue, "pr_k": prof.pr_k, "axis": qname}


def cmd_evolve(cfg: RunConfig):
    spin, basis = _setup(cfg)
    times = parse_grid(cfg.times)
    if times.size == 0 or times[0] < 0:
        raise UsageError("--times must start at t >= 0")
    kind, theta, phi = parse_state(cfg.state)
    s0 = initial_state(kind, spin, basis, theta=theta, phi=phi)
    L = build_liouvillian(cfg.model, basis)[1]
    traj = evolve(L, s0, times, cfg.model)
    J = observables(traj, basis)
    sel = [(k, q) for k, q in basis.labels if k <= cfg.max_rank]
    header = ["t"]
    for k, q in sel:
        header += [f"re_a_{k}_{q}", f"im_a_{k}_{q}"]
    header += ["jx", "jy", "jz"]
    rows = []
    for i, t in enumerate(times):
        r = [t]
        for k, q in sel:
            a = traj.a[i, flat_index(k, q)]
            r += [a.real, a.imag]
        rows.append(r + list(J[i]))
    out = Path(cfg.out)
    files = [output.write_csv(out / "trajectory.csv", header, rows)]
    if cfg.plot:
        files.append(_plot(out / "trajectory.png", lambda ax: (
            [ax.plot(times, J[:, i], label=f"<J{a}>") for i, a in enumerate("xyz")],
            ax.legend(), ax.set_xlabel("t"))))
    res = {"method": traj.method, "cross_check_deviation": traj.deviation,
           "exceptional_point": traj.exceptional_point,
           "initial_state": {"kind": kind, "theta": theta, "phi": phi}}
    if cfg.model.kind == "btc":
        dec: SourceDecomposition = source_decompose(L, s0, model=cfg.model)
        res["max_abs_source"] = float(np.abs(dec.s).max())
        res["secular_modes"] = list(dec.secular)
    return files, res


def cmd_precession_check(cfg: RunConfig):
    if cfg.model.kind != "precession":
        raise UsageError("precession-check needs --model precession")
    if cfg.model.omega == 0:
        raise UsageError("precession-check needs Omega != 0")
    spin, basis = _setup(cfg)
    sw = kappa_sweep(cfg.model, parse_grid(cfg.kappas), basis)
    rows = []
    for i, kap in enumerate(sw.kappas):
        rows.append([kap, kap * 2 * cfg.model.N * cfg.model.omega]
                    + [v for z in sw.analytic[i] for v in (z.real, z.imag)]
                    + [v for z in sw.numeric[i] for v in (z.real, z.imag)]
                    + [sw.deviation[i], sw.gap[i]])
    header = ["kappa", "gamma"]
    for tag in ("analytic", "numeric"):
        for name in ("decay", "plus", "minus"):
            header += [f"re_{tag}_{name}", f"im_{tag}_{name}"]
    header += ["max_deviation", "pair_gap"]
    out = Path(cfg.out)
    files = [output.write_csv(out / "precession_check.csv", header, rows)]
    kap = sw.kappas
    step = float(np.min(np.diff(kap))) if kap.size > 1 else float("nan")
    away = np.abs(kap - 2.0) > 1e-2
    if cfg.plot:
        files.append(_plot(out / "precession_check.png", lambda ax: (
            ax.plot(kap, sw.numeric[:, 1].imag, label="Im lambda+"),
            ax.plot(kap, sw.numeric[:, 1].real, label="Re lambda+"),
            ax.axvline(sw.exceptional_point, ls=":"), ax.legend(), ax.set_xlabel("kappa"))))
    return files, {"ep_kappa": sw.exceptional_point, "grid_step": step,
                   "max_deviation_away_from_ep":
                       float(sw.deviation[away].max()) if away.any() else None,
                   "max_deviation": float(sw.deviation.max())}


def cmd_perturbative_compare(cfg: RunConfig):
    if cfg.model.kind != "btc":
        raise UsageError("perturbative-compare needs the btc model")
    spin, basis = _setup(cfg)
    xb = rotate_basis(basis)
    eff = perturbative_spectrum(cfg.model, spin, xb)
    exact = np.linalg.eigvals(build_liouvillian(cfg.model, basis)[0].matrix)
    pairs, amb = match_spectra(eff, exact)
    closed_form = {(e.k, e.q_x): e.closed_form for e in eff}
    pairs.sort(key=lambda p: (p.k, p.q_x))
    out = Path(cfg.out)
    files = [output.write_csv(
        out / "perturbative_compare.csv",
        ["k", "q_x", "re_lambda_eff", "im_lambda_eff", "re_lambda_closed_form",
         "im_lambda_closed_form", "re_lambda_exact_matched", "im_lambda_exact_matched", "deviation"],
        ([p.k, p.q_x, p.effective.real, p.effective.imag, closed_form[p.k, p.q_x].real,
          closed_form[p.k, p.q_x].imag, p.exact.real, p.exact.imag, p.deviation] for p in pairs))]
    om = cfg.model.omega
    gam = [g * om for g in cfg.gammas]
    t_op = perturbation_error(cfg.model, gam, basis)
    t_pr = perturbation_error(cfg.model, gam, basis, use_closed_form=True)
    files.append(output.write_csv(
        out / "perturbation_error.csv",
        ["gamma", "deviation_operator_form", "deviation_closed_form", "ambiguous"],
        ([g, d1, d2, a1 or a2] for (g, d1, a1), (_, d2, a2) in zip(t_op.rows(), t_pr.rows()))))
    ratios = [e.damping_ratio for e in eff if e.operator.real != 0]
    notice = ("effective damping: operator form -Gamma/(4N)(q_x^2 + k(k+1)) vs closed form "
              f"-Gamma/N(q_x^2 + k(k+1)): ratio {np.median(ratios):.6g}; imaginary parts "
              "differ in sign (operator form gives -i Omega q_x)")
    print(notice)
    if cfg.plot:
        files.append(_plot(out / "perturbation_error.png", lambda ax: (
            ax.loglog(t_op.gammas, t_op.deviations, "o-", label="operator form"),
            ax.loglog(t_pr.gammas, t_pr.deviations, "s-", label="closed form"),
            ax.legend(), ax.set_xlabel("Gamma"), ax.set_ylabel("max deviation"))))
    return files, {"slope_operator_form": t_op.slope, "slope_closed_form": t_pr.slope,
                   "pairing_ambiguous": amb, "prefactor_ratio": float(np.median(ratios)),
                   "notice": notice}


HANDLERS = {
    "coupling-matrix": cmd_coupling_matrix,
    "onsite-decay": cmd_onsite_decay,
    "spectrum": cmd_spectrum,
    "hybridization": cmd_hybridization,
    "heatmap": cmd_heatmap,
    "evolve": cmd_evolve,
    "precession-check": cmd_precession_check,
    "perturbative-compare": cmd_perturbative_compare,
}


def run(cfg: RunConfig) -> tuple[list[Path], dict]:
    files, results = HANDLERS[cfg.command](cfg)
    manifest = output.write_manifest(Path(cfg.out), cfg.command, cfg.to_dict(), files, results)
    return files + [manifest], results


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.plot:
            try:
                import matplotlib  # noqa: F401
            except ImportError as exc:
                raise UsageError("--plot needs matplotlib (pip install artifact[plot])") from exc
        files, _ = run(cfg)
    except OSError as exc:
        print(f"opspace: io error: {exc}", file=sys.stderr)
        return 2
    except (ConsistencyError, ExceptionalPointError) as exc:
        print(f"opspace: consistency failure: {exc}", file=sys.stderr)
        return 3
    except (UsageError, ValueError, json.JSONDecodeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"opspace: error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
