"""Ratio sweep n/|I*| at strength 1.2*sqrt(2 log(e n/|I*|)) + 0.1."""

from _common import parser, setup, show
from scanident.simulate import emit_curves, run_curve_ratio


def main():
    args = parser(__doc__, "figure2.csv").parse_args()
    spec, aset, gamma, tau = setup("figure2", args)
    curves = run_curve_ratio(spec, gamma, tau, aset, args.threads)
    show(curves)
    c = curves[0]
    print("gap:", [round(float(g), 4) for g in c.mean_penalized - c.mean_unpenalized])
    emit_curves(args.output, curves, spec)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
