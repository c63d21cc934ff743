"""
Build the static html documentation with sphinx.

Unknown arguments are passed to ``sphinx-build``, like ``-a`` to rebuild everything.
"""
import argparse
import subprocess
import sys
from pathlib import Path

THISDIR = Path(__file__).parent

SRCDIR = THISDIR / "source"
BUILDIR = THISDIR / "build"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--strict",
        action="store_true",
        help="turn sphinx warnings into errors, like an autodoc import failure",
    )
    cli, sphinx_args = parser.parse_known_args(argv)

    command = ["sphinx-build", "-M", "html", str(SRCDIR), str(BUILDIR)]
    if cli.strict:
        command += ["-W", "--keep-going"]
    command += sphinx_args

    subprocess.check_call(command, cwd=THISDIR)
    print(f"doc can be found at 'file:///{BUILDIR.as_posix()}/html/index.html'")


if __name__ == "__main__":
    main()
