"""Compare the single-letter bound with the NW extension on the probdist family.

For this family the NW extension has the closed form
    1 + max(h(p/2) - p, h((1-p)/2) - (1-p)),
which this script prints next to the grid-LP value and the single-letter
bound, marking the p where the single-letter bound is the smaller one.
"""

from modsum.bounds import nw_extension, theorem1
from modsum.model import binary_entropy as h
from modsum.model import probdist_source


def closed_form(p: float) -> float:
    return 1 + max(h(p / 2) - p, h((1 - p) / 2) - (1 - p))


def main() -> None:
    print("     p   nw(closed)   nw(LP)   theorem1")
    for i in range(1, 50):
        p = i / 100
        t1 = theorem1(p).value
        nw = nw_extension(probdist_source(p)).value
        flag = "  <- theorem1 below nw" if t1 < nw - 1e-4 else ""
        print(f"  {p:.2f}   {closed_form(p):.6f}   {nw:.6f}   {t1:.6f}{flag}")


if __name__ == "__main__":
    main()
