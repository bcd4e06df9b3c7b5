"""Regenerate the frozen oracle fixtures.

Run from the repository root:  python tests/fixtures/generate.py
The fixture stores brute-force filtered-Fourier values of the periodic
Green's matrix at fixed off-lattice points for every (cell, omega) in the
standard test matrix; the accelerated evaluator is compared against this
file and must never be used to regenerate it.
"""

import json
import os

import numpy as np

from perilame.cell import build_cell
from perilame.kernels import LameEnv
from perilame.verify import oracle_filtered_fourier

CELLS = [(1.0, 1.0), (2.0, 3.0)]
OMEGAS = [0.5, 1.0, 4.0]
# fixed relative positions inside the cell, away from the lattice
REL_POINTS = [
    (0.5, 0.5), (0.31, 0.47), (0.18, 0.73), (0.64, 0.21), (0.82, 0.86), (0.45, 0.17),
]


def main():
    configs = []
    for edges in CELLS:
        cell = build_cell(edges)
        for omega in OMEGAS:
            env = LameEnv(2, omega)
            points = [
                [rx * edges[0], ry * edges[1]] for rx, ry in REL_POINTS
            ]
            values = [
                oracle_filtered_fourier(np.array(p), env, cell).tolist()
                for p in points
            ]
            configs.append(
                {
                    "cell": list(edges),
                    "omega": omega,
                    "points": points,
                    "values": values,
                    "fingerprint": f"cell={edges[0]:g}x{edges[1]:g};omega={omega:g};"
                    "oracle=filtered-fourier;certify=1e-10",
                }
            )
    path = os.path.join(os.path.dirname(__file__), "oracle_green.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"configs": configs}, fh, indent=1)
    print(f"wrote {path} ({len(configs)} configurations)")


if __name__ == "__main__":
    main()
