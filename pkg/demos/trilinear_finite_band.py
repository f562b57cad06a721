"""What the trilinear system looks like at a finite band.

The constant (2, 1, 2) family solves every equation but never decays.  Small
random prefixes extend level by level into exact band-4 solutions that use
all three sequences, so the decay bound alone does not force collapse once
the band is cut.  The moduli gaps |x|^2 - |y|^2 are carried along unchanged.
"""
import numpy as np

from torus_killing.trilinear import (
    TripleSequence, extend_and_classify, growth_recursion, moduli_relations, random_extension_search, residual,
)


def main():
    s = TripleSequence.constant(2, 1, 2, 6)
    print(f"constant family: residual {residual(s).max_abs}, moduli violations {moduli_relations(s)['violations']}")

    s = TripleSequence([0.05], [0.03j], [0.04 * np.exp(1j)])
    for n in range(2, 5):
        ext = extend_and_classify(s, n)
        s = s.appended(*ext.candidate)
        print(f"level {n}: {ext.status:>16s} -> {ext.classification}")
    print(f"band-4 residual {residual(s).max_abs:.1e}, decay sum {s.decay_sum:.3f}")
    print("gaps |x|^2-|y|^2:", np.round(np.abs(s.x) ** 2 - np.abs(s.y) ** 2, 12))

    stats = random_extension_search(band=4, trials=1000, seed=0)
    print("random search:", {k: v for k, v in stats.to_json().items() if k != "modes"})

    g = growth_recursion(0.5, 0.0, 8)
    print("growth at zero phase:", np.round(g.r, 6), "vs 1/(n+2)")


if __name__ == "__main__":
    main()
