"""Command-line driver: single runs, geometry scans and resource tables."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from uccvqe import __version__
from uccvqe.estimators import OCVQE, UCCVQE
from uccvqe.excited import MuValidationError
from uccvqe.hamiltonian import FcidumpError, MolecularHamiltonian, hubbard_hamiltonian, parse_fcidump
from uccvqe.oracle import fci_lowest, npe
from uccvqe.resources import estimate, scaling_report
from uccvqe.vqe import DEFAULT_INIT_SCALE, DEFAULT_MAXITER, DEFAULT_RESTARTS, NoConvergence

logger = logging.getLogger("uccvqe")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_MU = 0, 1, 2, 3
SCAN_COLUMNS = (
    "label", "e_vqe", "e_fci", "error_meh",
    "e_vqe_exc", "e_fci_exc", "error_exc_meh", "overlap_residual", "flag",
)
BIT_ORDER_NOTE = "spin orbital 2*i+s; alpha (s=0) on even bits; determinants ascending as integers"


class InputError(Exception):
    """Bad configuration, missing file or unparsable input (exit 1)."""


@dataclass
class RunConfig:
    fcidump: Optional[str] = None
    model: Optional[str] = None
    sites: Optional[int] = None
    t: float = 1.0
    u: float = 4.0
    n_alpha: Optional[int] = None
    n_beta: Optional[int] = None
    ansatz: str = "uccsd"
    k: int = 1
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    init_scale: float = DEFAULT_INIT_SCALE
    maxiter: int = DEFAULT_MAXITER
    excited: bool = False
    excited_ansatz: Optional[str] = None
    mu: Optional[float] = None
    reference: list = field(default_factory=list)
    out: Optional[str] = None
    jobs: int = 1

    def validate(self) -> None:
        if (self.fcidump is None) == (self.model is None):
            raise InputError("exactly one Hamiltonian source is required: --fcidump or --model")
        if self.model is not None:
            if self.model != "hubbard":
                raise InputError(f"unknown model {self.model!r}; only 'hubbard' is built in")
            if self.sites is None or self.sites < 1:
                raise InputError("--model hubbard needs --sites >= 1")
        for name in ("k", "restarts", "jobs", "maxiter"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be positive")
        if self.init_scale < 0:
            raise InputError("init_scale must be non-negative")

    def source_description(self) -> dict:
        if self.fcidump is not None:
            return {"fcidump": self.fcidump}
        return {"model": self.model, "sites": self.sites, "t": self.t, "u": self.u}


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def parse_reference(text: str) -> list[tuple[int, int]]:
    """``"i>a;j>b"`` -> ``[(i, a), (j, b)]`` (0-based spatial indices)."""
    out = []
    for item in filter(None, (s.strip() for s in text.replace(",", ";").split(";"))):
        try:
            i, a = item.split(">")
            out.append((int(i), int(a)))
        except ValueError:
            raise InputError(f"bad reference promotion {item!r}; expected 'i>a'") from None
    return out


def _coerce(key: str, raw: str):
    raw = raw.strip()
    kind = _FIELD_TYPES[key]
    if key == "reference":
        return parse_reference(raw)
    if raw.lower() in ("", "none", "null"):
        return None
    try:
        if "bool" in kind:
            return raw.lower() in ("1", "true", "yes", "on")
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise InputError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_hamiltonian(config: RunConfig) -> MolecularHamiltonian:
    if config.model == "hubbard":
        return hubbard_hamiltonian(config.sites, config.t, config.u)
    path = Path(config.fcidump)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"parse stage: cannot read FCIDUMP {path}: {exc.strerror or exc}") from None
    try:
        return parse_fcidump(text)
    except FcidumpError as exc:
        raise InputError(f"parse stage: {path}: {exc}") from None


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _ground(config: RunConfig, ham: MolecularHamiltonian):
    est = UCCVQE(
        ansatz=config.ansatz, k=config.k, restarts=config.restarts, seed=config.seed,
        init_scale=config.init_scale, n_alpha=config.n_alpha, n_beta=config.n_beta,
        n_jobs=config.jobs, maxiter=config.maxiter,
    )
    try:
        est.fit(ham, raise_on_failure=False)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    n_states = min(2, est.basis_.dim)
    levels = fci_lowest(est.hamiltonian_matrix_, n_states, est.basis_)
    return est, levels


def ground_record(config: RunConfig, ham: MolecularHamiltonian) -> tuple[dict, UCCVQE, list]:
    est, levels = _ground(config, ham)
    res = estimate(est.ansatz_)
    e_fci = levels[0].energy
    record = {
        "schema_version": SCHEMA_VERSION,
        "uccvqe_version": __version__,
        "hamiltonian": {
            **config.source_description(),
            "n_spatial": ham.n_spatial,
            "n_electrons": ham.n_electrons,
            "ms2": ham.ms2,
        },
        "sector": {
            "n_spin_orbitals": est.basis_.n_spin_orbitals,
            "n_alpha": est.basis_.n_alpha,
            "n_beta": est.basis_.n_beta,
            "dim": est.basis_.dim,
            "bit_order": BIT_ORDER_NOTE,
        },
        "ansatz": {"kind": est.ansatz_.kind.value, "k": est.ansatz_.k, "n_params": est.ansatz_.n_params},
        "settings": {
            "restarts": config.restarts, "seed": config.seed,
            "init_scale": config.init_scale, "maxiter": config.maxiter,
        },
        "reference": est.reference_.describe(),
        "energy_vqe": est.energy_,
        "energy_fci": e_fci,
        "error_meh": 1000.0 * (est.energy_ - e_fci),
        "vqe": est.result_.to_dict(),
        "resources": {
            "term_count": res.term_count,
            "layer_count": res.layer_count,
            "per_class": res.per_class,
        },
    }
    return record, est, levels


def excited_record(config: RunConfig, ham: MolecularHamiltonian) -> tuple[dict, bool]:
    record, ground, levels = ground_record(config, ham)
    if ground.basis_.dim < 2:
        raise InputError("sector has a single determinant; no excited state exists")
    exc = OCVQE(
        ansatz=config.excited_ansatz or config.ansatz, k=config.k, restarts=config.restarts,
        seed=config.seed, init_scale=config.init_scale, mu=config.mu,
        promotions=config.reference or None, n_alpha=config.n_alpha, n_beta=config.n_beta,
        n_jobs=config.jobs, maxiter=config.maxiter,
    )
    try:
        exc.fit(ham, ground_state=ground.state_, ground_energy=ground.energy_, raise_on_failure=False)
    except MuValidationError:
        raise
    except ValueError as err:
        raise InputError(str(err)) from None
    result = exc.result_
    e_fci1 = levels[1].energy
    layers = record["resources"]["layer_count"]
    excited_layers = estimate(exc.ansatz_).layer_count
    record["excited"] = {
        "ansatz": {"kind": exc.ansatz_.kind.value, "k": exc.ansatz_.k, "n_params": exc.ansatz_.n_params},
        "reference": exc.reference_.describe(),
        "promotions": [list(p) for p in (config.reference or [])],
        "mu": exc.mu_,
        "energy_vqe": result.energy,
        "penalized_energy": result.penalized_energy,
        "overlap_residual": float(np.clip(result.overlap_residual, 0.0, 1.0)),
        "flagged": result.flagged,
        "energy_fci": e_fci1,
        "error_meh": 1000.0 * (result.energy - e_fci1),
        "vqe": result.vqe.to_dict(),
    }
    # overlap evaluation runs U0^dagger after U1: twice the preparation depth
    record["resources"]["overlap_layer_count"] = layers + excited_layers
    converged = ground.result_.converged and result.converged
    return record, converged


def _dump_json(record: dict, out: Optional[str]) -> None:
    text = json.dumps({**record, "created": _now()}, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run_ground(config: RunConfig) -> int:
    config.validate()
    ham = load_hamiltonian(config)
    record, est, _ = ground_record(config, ham)
    _dump_json(record, config.out)
    return EXIT_OK if est.result_.converged else EXIT_NOT_CONVERGED


def run_excited(config: RunConfig) -> int:
    config.validate()
    ham = load_hamiltonian(config)
    record, converged = excited_record(config, ham)
    _dump_json(record, config.out)
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


@dataclass
class ScanPoint:
    label: str
    config: RunConfig


def parse_manifest(text: str, base: RunConfig, root: Path = Path(".")) -> list[ScanPoint]:
    """One point per line: ``label source [key=value ...]``.

    ``source`` is an FCIDUMP path (relative to the manifest) or
    ``hubbard:SITES,T,U``.  Trailing ``key=value`` pairs override the shared
    settings for that point only.
    """
    points = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise InputError(f"manifest line {lineno}: expected 'label source'")
        label, source, extras = parts[0], parts[1], parts[2:]
        cfg = dataclasses.replace(base, fcidump=None, model=None, reference=list(base.reference))
        if source.lower().startswith("hubbard:"):
            try:
                sites, t, u = source.split(":", 1)[1].split(",")
                cfg.model, cfg.sites, cfg.t, cfg.u = "hubbard", int(sites), float(t), float(u)
            except ValueError:
                raise InputError(f"manifest line {lineno}: bad model source {source!r}") from None
        else:
            path = Path(source)
            cfg.fcidump = str(path if path.is_absolute() else root / path)
        for item in extras:
            if "=" not in item:
                raise InputError(f"manifest line {lineno}: bad override {item!r}")
            key, raw = item.split("=", 1)
            key = key.replace("-", "_")
            if key not in _FIELD_TYPES:
                raise InputError(f"manifest line {lineno}: unknown key {key!r}")
            setattr(cfg, key, _coerce(key, raw))
        points.append(ScanPoint(label, cfg))
    if not points:
        raise InputError("manifest lists no points")
    labels = [p.label for p in points]
    if len(set(labels)) != len(labels):
        raise InputError("manifest labels must be unique")
    return points


def _scan_row(point: ScanPoint, excited: bool) -> dict:
    cfg = point.config
    cfg.validate()
    ham = load_hamiltonian(cfg)
    row = dict.fromkeys(SCAN_COLUMNS, "")
    row["label"] = point.label
    if excited:
        record, converged = excited_record(cfg, ham)
        ex = record["excited"]
        row.update(
            e_vqe_exc=ex["energy_vqe"], e_fci_exc=ex["energy_fci"],
            error_exc_meh=ex["error_meh"], overlap_residual=ex["overlap_residual"],
        )
    else:
        record, est, _ = ground_record(cfg, ham)
        converged = est.result_.converged
    row.update(e_vqe=record["energy_vqe"], e_fci=record["energy_fci"], error_meh=record["error_meh"])
    row["flag"] = "" if converged else "not_converged"
    return row


def run_scan(manifest_path: str, base: RunConfig) -> int:
    path = Path(manifest_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc.strerror or exc}") from None
    points = parse_manifest(text, base, path.parent)
    excited = base.excited
    if base.jobs > 1:
        for p in points:
            p.config.jobs = 1
        with ThreadPoolExecutor(max_workers=base.jobs) as pool:
            rows = list(pool.map(lambda p: _scan_row(p, excited), points))
    else:
        rows = [_scan_row(p, excited) for p in points]

    good = [r for r in rows if not r["flag"]]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "uccvqe_version": __version__,
        "n_points": len(rows),
        "n_converged": len(good),
        "npe_meh": npe([r["error_meh"] for r in good]) if good else None,
        "npe_exc_meh": npe([r["error_exc_meh"] for r in good]) if good and excited else None,
        "rows": rows,
    }
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SCAN_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    if base.out:
        out = Path(base.out)
        out.write_text(buf.getvalue())
        _dump_json(summary, str(out.with_suffix(".json")))
    else:
        sys.stdout.write(buf.getvalue())
        _dump_json(summary, None)
    return EXIT_OK if len(good) == len(rows) else EXIT_NOT_CONVERGED


def parse_sizes(text: str) -> list[tuple[int, int]]:
    """``"8:4,12:6"`` -> ``[(8, 4), (12, 6)]``."""
    sizes = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            n, eta = item.split(":")
            sizes.append((int(n), int(eta)))
        except ValueError:
            raise InputError(f"bad size {item!r}; expected N:eta") from None
    if not sizes:
        raise InputError("at least one size is required")
    return sizes


def run_resources(kind: str, k: int, sizes: list[tuple[int, int]], out: Optional[str] = None) -> int:
    try:
        report = scaling_report(kind, k, sizes)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    text = report.to_csv()
    text += f"# term_count_exponent={report.term_exponent!r}\n# layer_count_exponent={report.layer_exponent!r}\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uccvqe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--fcidump")
    common.add_argument("--model", choices=["hubbard"])
    common.add_argument("--sites", type=int)
    common.add_argument("--t", type=float)
    common.add_argument("--u", type=float)
    common.add_argument("--n-alpha", type=int)
    common.add_argument("--n-beta", type=int)
    common.add_argument("--ansatz", choices=["uccsd", "uccgsd", "upccsd", "kupccgsd"])
    common.add_argument("--k", type=int)
    common.add_argument("--restarts", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--init-scale", type=float)
    common.add_argument("--maxiter", type=int)
    common.add_argument("--out")
    common.add_argument("--jobs", type=int)

    excited_opts = argparse.ArgumentParser(add_help=False)
    excited_opts.add_argument("--mu", type=float, help="level shift (Hartree); default -E0")
    excited_opts.add_argument("--reference", help='spatial promotions "i>a;j>b" for the excited reference')
    excited_opts.add_argument("--excited-ansatz", choices=["uccsd", "uccgsd", "upccsd", "kupccgsd"])

    sub.add_parser("ground", parents=[common], help="ground-state VQE vs FCI")
    sub.add_parser("excited", parents=[common, excited_opts], help="ground then OC-VQE first excited state")
    scan = sub.add_parser("scan", parents=[common, excited_opts], help="run a manifest of geometries")
    scan.add_argument("manifest")
    scan.add_argument("--excited", action="store_true", default=None)
    res = sub.add_parser("resources", help="term counts and layered depth vs system size")
    res.add_argument("--ansatz", choices=["uccsd", "uccgsd", "upccsd", "kupccgsd"], default="kupccgsd")
    res.add_argument("--k", type=int, default=1)
    res.add_argument("--sizes", required=True, help='"N:eta,N:eta,..."')
    res.add_argument("--out")
    return parser


_ARG_TO_FIELD = {
    "fcidump": "fcidump", "model": "model", "sites": "sites", "t": "t", "u": "u",
    "n_alpha": "n_alpha", "n_beta": "n_beta", "ansatz": "ansatz", "k": "k",
    "restarts": "restarts", "seed": "seed", "init_scale": "init_scale", "maxiter": "maxiter",
    "out": "out", "jobs": "jobs", "mu": "mu", "excited_ansatz": "excited_ansatz", "excited": "excited",
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc.strerror or exc}") from None
    for arg, key in _ARG_TO_FIELD.items():
        val = getattr(args, arg, None)
        if val is not None:
            values[key] = val
    if getattr(args, "reference", None) is not None:
        values["reference"] = parse_reference(args.reference)
    # a source given on the command line replaces the file's source
    if args.fcidump is not None and args.model is None:
        values.pop("model", None)
    if args.model is not None and args.fcidump is None:
        values.pop("fcidump", None)
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "resources":
            return run_resources(args.ansatz, args.k, parse_sizes(args.sizes), args.out)
        config = config_from_args(args)
        if args.command == "ground":
            return run_ground(config)
        if args.command == "excited":
            return run_excited(config)
        return run_scan(args.manifest, config)
    except MuValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MU
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
