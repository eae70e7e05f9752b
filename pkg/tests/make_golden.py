"""Regenerate tests/data surfaces and tests/golden/*.out from the CLI (run from the repo root)."""

import os
from pathlib import Path

from golden_cases import CASES, SURFACES

from opinv.cli import dispatch

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"


def run(argv):
    cwd = os.getcwd()
    os.chdir(DATA)
    try:
        return dispatch(argv)
    finally:
        os.chdir(cwd)


def main():
    for name, argv in SURFACES.items():
        code, text, _ = run(argv)
        assert code == 0, name
        (DATA / name).write_text(text)
    GOLDEN.mkdir(exist_ok=True)
    for name, (argv, expected) in CASES.items():
        code, text, _ = run(argv)
        assert code == expected, (name, code)
        (GOLDEN / f"{name}.out").write_text(text)


if __name__ == "__main__":
    main()
