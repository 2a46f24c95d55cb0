"""Gate-count and depth proxies for UCC state preparation."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from uccvqe.ansatz import Ansatz, AnsatzKind, Double, Excitation, PairDouble, Single, build_ansatz

CSV_COLUMNS = ("kind", "k", "N", "eta", "terms_singles", "terms_doubles", "terms_pair", "term_count", "layer_count")


@dataclass(frozen=True)
class ResourceEstimate:
    kind: AnsatzKind
    N: int
    eta: int
    k: int
    term_count: int
    per_class: dict = field(compare=False)
    layer_count: int | None = None

    def row(self) -> dict:
        return {
            "kind": self.kind.value,
            "k": self.k,
            "N": self.N,
            "eta": self.eta,
            "terms_singles": self.per_class["singles"],
            "terms_doubles": self.per_class["doubles"],
            "terms_pair": self.per_class["pair_doubles"],
            "term_count": self.term_count,
            "layer_count": self.layer_count,
        }


def count_resources(ansatz: Ansatz) -> ResourceEstimate:
    """One exponentiated term per excitation per block (single Trotter step)."""
    excs = ansatz.excitations
    per_class = {
        "singles": sum(isinstance(e, Single) for e in excs),
        "doubles": sum(isinstance(e, Double) for e in excs),
        "pair_doubles": sum(isinstance(e, PairDouble) for e in excs),
    }
    return ResourceEstimate(
        ansatz.kind, ansatz.n_spin_orbitals, ansatz.n_alpha + ansatz.n_beta, ansatz.k, len(excs), per_class
    )


def schedule_terms(terms: Sequence[Excitation]) -> list[list[Excitation]]:
    """Greedy first-fit packing into layers of disjoint spin-orbital support."""
    layers: list[list[Excitation]] = []
    used: list[set[int]] = []
    for term in terms:
        support = term.support
        for layer, occupied in zip(layers, used):
            if occupied.isdisjoint(support):
                layer.append(term)
                occupied.update(support)
                break
        else:
            layers.append([term])
            used.append(set(support))
    return layers


def schedule_layers(ansatz: Ansatz) -> list[list[Excitation]]:
    """Layered schedule; each block starts on fresh layers."""
    schedule = []
    for block in ansatz.blocks:
        schedule.extend(schedule_terms(block))
    return schedule


def schedule_is_valid(schedule: Sequence[Sequence[Excitation]], terms: Sequence[Excitation] | None = None) -> bool:
    for layer in schedule:
        seen: set[int] = set()
        for term in layer:
            if not seen.isdisjoint(term.support):
                return False
            seen |= term.support
    if terms is not None:
        flat = [t for layer in schedule for t in layer]
        if Counter(flat) != Counter(terms):
            return False
    return True


def estimate(ansatz: Ansatz) -> ResourceEstimate:
    base = count_resources(ansatz)
    schedule = schedule_layers(ansatz)
    return ResourceEstimate(base.kind, base.N, base.eta, base.k, base.term_count, base.per_class, len(schedule))


def loglog_exponent(x: Iterable[float], y: Iterable[float]) -> float:
    x, y = np.asarray(list(x), float), np.asarray(list(y), float)
    if x.size < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class ScalingReport:
    rows: tuple[ResourceEstimate, ...]
    term_exponent: float
    layer_exponent: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow(r.row())
        return buf.getvalue()


def scaling_report(kind, k: int, sizes: Sequence[tuple[int, int]]) -> ScalingReport:
    """Resources over a series of (N, eta) sizes with fitted growth exponents vs N.

    ``eta`` is split as evenly as possible between spins, alpha first.
    """
    if not sizes:
        raise ValueError("sizes must be nonempty")
    kind = AnsatzKind.parse(kind)
    rows = []
    for N, eta in sizes:
        n_alpha = (eta + 1) // 2
        ansatz = build_ansatz(kind, N, n_alpha, eta - n_alpha, k)
        est = estimate(ansatz)
        assert schedule_is_valid(schedule_layers(ansatz), ansatz.excitations)
        rows.append(est)
    Ns = [r.N for r in rows]
    return ScalingReport(
        tuple(rows),
        loglog_exponent(Ns, [r.term_count for r in rows]),
        loglog_exponent(Ns, [r.layer_count for r in rows]),
    )
