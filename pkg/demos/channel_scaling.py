"""How each pipeline phase scales with the number of image channels.

Only the derivate magnitudes read every channel; once they are quantized
the tree sees one scalar per pixel pair, whatever the channel count.
"""
import argparse

from dctree.bench import run_bench
from dctree.fixtures import textured


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repetitions", type=int, default=5)
    args = ap.parse_args()
    report = run_bench(textured(args.size, args.size, 3), (1, 2, 4, 8, 16, 32), args.repetitions)
    print(report.to_table())


if __name__ == "__main__":
    main()
