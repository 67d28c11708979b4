from fractions import Fraction

from qtelescope.catalog import default_catalog, oracle_abel, oracle_pair
from qtelescope.exactalg import RatX
from qtelescope.qterm import BILATERAL, QTerm, mul_rational, ratio
from qtelescope.syntax import parse_term

# Sum of each catalog series at its pinned sample point, computed independently
# with mpmath at 40 digits from the defining series (|k| <= 200) and checked
# against the product side there. Frozen here as regression values.
ORACLE_SUMS = {
    "1psi1": "0.01322756752726224189419281",
    "2psi2": "0.367914511967764376257869",
    "3psi3": "0.8417156888534292606259311",
    "4psi4": "-0.3199689372185701588172277",
    "6psi6": "0.2471835032699754051006155",
    "binomial": "1.779640943153590063081772",
    "jacobi": "2.339028665814191861822094",
    "2phi1": "-1.073208693813383341231614",
    "6phi5": "0.9197712191563249820499941",
    "H": "-0.1065204641393635508185384",
}


def oracle_iterations():
    """(record, iteration) for every iteration with a stored reference pair."""
    out = []
    for rec in default_catalog().records():
        for it in rec.iterations:
            if it.has_oracle:
                out.append((rec, it))
    return out


def oracle_ids():
    return [f"{rec.name}:{it.name}" for rec, it in oracle_iterations()]


PARAMS = ("a", "b", "c", "z")


def _rat(rng, lo=2, hi=9):
    return Fraction(rng.randint(1, hi), rng.randint(lo, hi)) * rng.choice((1, -1))


def _monomial(rng):
    """c * sym**e * q**j with small exponents."""
    sym = rng.choice(PARAMS)
    e = rng.choice((1, 1, -1, 2))
    j = rng.randint(-2, 2)
    c = rng.choice((1, 1, 1, -1, 2, Fraction(1, 3)))
    return f"{c}*{sym}^{e}*q^{j}".replace("--", "")


def random_term(rng, support=BILATERAL, with_pre=True) -> QTerm:
    parts = []
    for _ in range(rng.randint(0, 3)):
        parts.append(f"poch({_monomial(rng)})^{rng.choice((1, -1, 2, -2))}")
    parts.append(f"geom({_monomial(rng)})")
    qq = rng.choice((0, 0, 1, -1, 2))
    if qq:
        parts.append(f"qquad({qq})")
    if with_pre and rng.random() < 0.4:
        parts.append(f"pre((1-{_monomial(rng)}*x)/(1-{_monomial(rng)}*x^2))")
    if rng.random() < 0.3:
        parts.append(f"const({_monomial(rng)})")
    return parse_term("*".join(parts), support=support, declare_new=True)


def random_point(rng) -> dict:
    asg = {s: _rat(rng) for s in PARAMS}
    asg["q"] = Fraction(rng.randint(1, 5), rng.randint(6, 11))
    return asg


def summable_term(rng):
    """(t, z) with t_k = z_{k+1} - z_k for a random term z."""
    while True:
        z = random_term(rng)
        r = ratio(z)
        if r == RatX(1):
            continue
        return mul_rational(z, r - 1), z
