"""q-Gosper on bare shift ratios, including a negative answer."""

from qtelescope import NotSummable, parse_ratx, q_gosper

for src in ["z", "z*(1-a*q*x)/(1-a*x)", "(1-a*x)/(1-b*x)"]:
    try:
        cert = q_gosper(parse_ratx(src))
    except NotSummable:
        print(f"{src:24s} not summable")
        continue
    print(f"{src:24s} R(x) = {cert.R}   check: {cert.check()}")
