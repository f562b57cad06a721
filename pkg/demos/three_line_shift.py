"""Search honeycomb three-line spectra for shift-stable solutions.

Without a barrier the minimizer drains two of the three lines and lands on a
one-dimensional solution.  With the barrier the lines stay populated and the
joint residual of lambda and lambda + 1 stalls at a positive floor.  These
numbers are observations, not proofs.
"""
from torus_killing.lattice import HONEYCOMB
from torus_killing.search import SearchProblem, shift_experiment


def main(seeds=range(5)):
    for eta in (0.0, 1e-2, 1e3):
        for seed in seeds:
            out = shift_experiment(SearchProblem(HONEYCOMB, band=3, eta=eta, seed=seed), 1.0)
            res = out["result"]
            energies = ", ".join(f"{e:.1e}" for e in res.line_energies)
            print(f"eta={eta:<7g} seed={seed} joint={out['jointResidual']:.3e} "
                  f"lines=({energies}) {out['classification']}")


if __name__ == "__main__":
    main()
