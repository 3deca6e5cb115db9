"""2D: 100x100 field, rectangles 30x40 and 15x80 (both area 1200)."""

from _common import parser, setup, show
from scanident.simulate import emit_curves, run_curve_2d


def main():
    args = parser(__doc__, "figure3.csv").parse_args()
    spec, aset, gamma, tau = setup("figure3", args)
    curves = run_curve_2d(spec, gamma, tau, aset, args.threads)
    show(curves)
    emit_curves(args.output, curves, spec)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
