"""Small synthetic molecule-like datasets written in TU format."""

from pathlib import Path

import numpy as np


def random_molecule(rng, label: int):
    """Carbon ring with side chains; class 1 carries an N(-O)(=O) group.

    Returns ``(node_labels, edges)`` with edges as ``(u, v, bond_label)``.
    Atom labels: 0 C, 1 N, 2 O, 3 Cl. Bond labels: 0 aromatic, 1 single, 2 double.
    """
    ring = int(rng.integers(5, 7))
    atoms = [0] * ring
    edges = [(i, (i + 1) % ring, 0) for i in range(ring)]
    for _ in range(int(rng.integers(2, 6))):
        anchor = int(rng.integers(0, len(atoms)))
        atoms.append(int(rng.choice([0, 0, 0, 2, 3])))
        edges.append((anchor, len(atoms) - 1, 1))
    if label == 1:
        anchor = int(rng.integers(0, ring))
        n = len(atoms)
        atoms += [1, 2, 2]
        edges += [(anchor, n, 1), (n, n + 1, 1), (n, n + 2, 2)]
    else:
        anchor = int(rng.integers(0, ring))
        n = len(atoms)
        atoms += [0, 1]
        edges += [(anchor, n, 1), (n, n + 1, 1)]
    return atoms, edges


def write_tu(directory, name, graphs, labels):
    """``graphs`` holds ``(node_labels, edges)``; edges are listed in both directions."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    a, ind, nl, el = [], [], [], []
    offset = 0
    for gid, (atoms, edges) in enumerate(graphs, start=1):
        for lab in atoms:
            ind.append(gid)
            nl.append(lab)
        for u, v, b in edges:
            a.append(f"{u + offset + 1}, {v + offset + 1}")
            el.append(b)
            a.append(f"{v + offset + 1}, {u + offset + 1}")
            el.append(b)
        offset += len(atoms)
    (d / f"{name}_A.txt").write_text("\n".join(a) + "\n")
    (d / f"{name}_graph_indicator.txt").write_text("\n".join(map(str, ind)) + "\n")
    (d / f"{name}_graph_labels.txt").write_text("\n".join(map(str, labels)) + "\n")
    (d / f"{name}_node_labels.txt").write_text("\n".join(map(str, nl)) + "\n")
    (d / f"{name}_edge_labels.txt").write_text("\n".join(map(str, el)) + "\n")


def make_dataset(directory, name="SYNTH", count=120, seed=0):
    rng = np.random.default_rng(seed)
    labels = [int(x) for x in rng.permutation(np.arange(count) % 3 == 0)]
    labels = [1 if x else -1 for x in labels]
    graphs = [random_molecule(rng, 1 if y == 1 else 0) for y in labels]
    write_tu(directory, name, graphs, labels)
    return Path(directory)
