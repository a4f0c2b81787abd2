"""Copies inputs to outputs: ``python -m stlcov.scripts.echo_sut c=a d=b``."""
import sys

from ._loop import serve


def main(argv=None):
    pairs = [arg.split("=", 1) for arg in (argv if argv is not None else sys.argv[1:])]
    serve(lambda inputs, state: ({out: inputs[src] for out, src in pairs}, state))


if __name__ == "__main__":
    main()
