"""Classification by coding energy under per-class dictionaries.

Generates two classes of sparse signals, each tied to its own random
dictionary, then labels held-out samples by which dictionary codes them
cheapest.
"""

import numpy as np

from usm import Laplacian, classify_columns, gen_class_data


def main():
    dicts, X, labels, _ = gen_class_data(n_samples=50, sigma=0.02, seed=4)
    print(f"{X.shape[1]} samples, {len(dicts)} classes, "
          f"dictionaries {dicts[0].shape[0]}x{dicts[0].shape[1]}")

    model = Laplacian(1.0)
    got, energies = classify_columns(X, dicts, lam=0.1, model=model)
    errors = int(np.sum(got != labels))
    print(f"misclassified {errors}/{X.shape[1]} "
          f"({100.0 * errors / X.shape[1]:.1f}% error)")

    for c in range(len(dicts)):
        n_c = int(np.sum(got == c))
        print(f"  class {c}: {n_c} samples labeled")


if __name__ == "__main__":
    main()
