"""Similarity of the penalized and unpenalized procedures against
mu*sqrt(|I*|), n=10000, signal lengths 1000 and 100."""

from _common import parser, setup, show
from scanident.simulate import emit_curves, run_curve_mu


def main():
    args = parser(__doc__, "figure1.csv").parse_args()
    spec, aset, gamma, tau = setup("figure1", args)
    curves = run_curve_mu(spec, gamma, tau, aset, args.threads)
    show(curves)
    emit_curves(args.output, curves, spec)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
