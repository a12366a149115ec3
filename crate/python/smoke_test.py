#!/usr/bin/env python3
"""Smoke test for the weqsat_py extension module.

Builds the cdylib if needed, stages it under an importable name, and
exercises the bindings end to end. Exits nonzero on any failure.
"""

import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def locate_library() -> pathlib.Path:
    names = ["libweqsat_py.so", "libweqsat_py.dylib", "weqsat_py.dll"]
    candidates = [ROOT / "target" / profile / name
                  for profile in ("debug", "release") for name in names]
    for path in candidates:
        if path.exists():
            return path
    subprocess.run(["cargo", "build", "-p", "weqsat-py"], cwd=ROOT, check=True)
    for path in candidates:
        if path.exists():
            return path
    raise SystemExit("could not find the built weqsat_py library")


def main() -> None:
    library = locate_library()
    staging = tempfile.mkdtemp(prefix="weqsat-py-")
    shutil.copy(library, pathlib.Path(staging) / "weqsat_py.so")
    sys.path.insert(0, staging)

    import weqsat_py as wq

    # Parse, solve at fixed bounds, verify the decoded model.
    problem = wq.parse(
        "Variables {ZXY}\n"
        "Terminals {ab}\n"
        "Equation: aZXb = aXaY\n"
    )
    assert problem.variables == ["Z", "X", "Y"]
    assert problem.letters == ["a", "b"]
    assert problem.equations == [("aZXb", "aXaY")]

    outcome = problem.solve_bounded(1)
    assert outcome.status == "SAT" and outcome.is_sat()
    model = outcome.substitution
    assert model in (
        {"Z": "a", "X": "a", "Y": "b"},
        {"Z": "a", "X": "", "Y": "b"},
    ), model
    assert problem.verify(model, 1)
    assert not problem.verify({"Z": "b", "X": "a", "Y": "b"})

    # Exactly two solutions within bound 1.
    solutions = problem.enumerate(1)
    assert len(solutions) == 2, solutions
    assert all(problem.verify(s, 1) for s in solutions)

    # Iterative deepening finds the same instance satisfiable.
    assert problem.solve().status == "SAT"

    # A count argument refutes this one during preprocessing.
    unsat = wq.parse("Variables {X}\nTerminals {ab}\nEquation: aX = Xb\n")
    result = unsat.solve()
    assert result.status == "UNSAT" and result.iterations == 0

    # Generated family instance: solver agrees with the hidden witness.
    family, witness = wq.generate(track=2, family_n=2)
    assert witness is not None and family.verify(witness)
    solved = family.solve()
    assert solved.status == "SAT"
    assert family.verify(solved.substitution)

    # Track 5 carries constraints; the witness satisfies them too.
    constrained, witness = wq.generate(track=5, seed=3)
    assert constrained.verify(witness, constrained.declared_bounds)

    # CNF export: DIMACS header plus a readable variable map.
    cnf, varmap = problem.to_dimacs(1)
    assert any(line.startswith("p cnf ") for line in cnf.splitlines()), cnf[:80]
    assert "K:Z:0:a" in varmap

    # Round trip through the textual format.
    assert wq.parse(problem.serialize()).serialize() == problem.serialize()

    print("smoke test passed")


if __name__ == "__main__":
    main()
