"""Macroelement partition of the active mesh and canonical polynomial extension."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .fespace import FeFunction, evaluate
from .mesh import ActiveMesh

DEFAULT_DELTA = 0.3


class OrphanSmallElement(RuntimeError):
    pass


@dataclass(eq=False)
class MacroPartition:
    delta: float
    roots: np.ndarray        # large elements, ascending
    assignment: np.ndarray   # background element -> root, -1 when inactive
    distance: np.ndarray     # face-graph rounds needed to reach the root
    macro_faces: np.ndarray  # stabilized faces interior to one macroelement

    def members(self, root: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == root)

    def macroelements(self) -> dict[int, np.ndarray]:
        return {int(r): self.members(r) for r in self.roots}


def classify_large(am: ActiveMesh, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """Active elements with ``|T cap Omega| >= delta |T|``."""
    act = am.active_elements
    return act[am.volume_fraction[act] >= delta]


def _neighbors(am: ActiveMesh, faces) -> dict[int, list[tuple[int, int]]]:
    fe = am.background.face_elements
    nb: dict[int, list[tuple[int, int]]] = {}
    for f in faces:
        a, b = fe[f]
        nb.setdefault(int(a), []).append((int(b), int(f)))
        nb.setdefault(int(b), []).append((int(a), int(f)))
    for v in nb.values():
        v.sort()
    return nb


def build_macro_partition(am: ActiveMesh, delta: float = DEFAULT_DELTA) -> MacroPartition:
    """Attach every small cut element to a large root through face neighbors.

    Works in rounds. In each round a pending small element links to its first
    large neighbor, or failing that to a small neighbor already linked in an
    earlier round, inheriting that neighbor's root. Elements with neither wait
    for the next round.
    """
    nt = am.background.n_elements
    large = classify_large(am, delta)
    is_large = np.zeros(nt, dtype=bool)
    is_large[large] = True
    assignment = -np.ones(nt, dtype=np.int64)
    distance = -np.ones(nt, dtype=np.int64)
    assignment[large] = large
    distance[large] = 0

    link_faces = am.stabilized_faces()
    nb = _neighbors(am, link_faces)
    pending = [int(t) for t in am.active_elements if not is_large[t]]
    while pending:
        settled = assignment.copy()
        waiting = []
        for t in pending:
            cands = [n for n, _ in nb.get(t, []) if is_large[n]]
            if cands:
                assignment[t] = cands[0]
                distance[t] = 1
                continue
            linked = [n for n, _ in nb.get(t, []) if settled[n] >= 0]
            if linked:
                n = min(linked, key=lambda e: (distance[e], e))
                assignment[t] = settled[n]
                distance[t] = distance[n] + 1
            else:
                waiting.append(t)
        if len(waiting) == len(pending):
            raise OrphanSmallElement(
                f"{len(waiting)} small element(s) cannot reach a large element "
                f"(first: {waiting[0]}, delta={delta})")
        pending = waiting

    fe = am.background.face_elements
    same = assignment[fe[link_faces, 0]] == assignment[fe[link_faces, 1]]
    return MacroPartition(float(delta), np.sort(large), assignment, distance,
                          link_faces[same])


def extend_polynomial(fe: FeFunction, from_element: int, to_points) -> np.ndarray:
    """Evaluate the polynomial of ``from_element`` at arbitrary points."""
    return evaluate(fe, from_element, to_points)


def dump_macro(partition: MacroPartition, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["element", "root", "distance"])
        for t in np.flatnonzero(partition.assignment >= 0):
            w.writerow([int(t), int(partition.assignment[t]), int(partition.distance[t])])
