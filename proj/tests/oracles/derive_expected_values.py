#!/usr/bin/env python3
"""Independent high-precision oracles for the frozen values in the C++ unit tests.

Everything here is computed from first principles with mpmath/sympy and never
calls into the C++ library.  Re-run to regenerate the constants quoted in
tests/*.cpp:

    python3 tests/oracles/derive_expected_values.py
"""

import mpmath as mp
import sympy as sp

mp.mp.dps = 40


def show(name, value):
    print(f"{name:<40s} = {mp.nstr(value, 20)}")


# ---------------------------------------------------------------------------
# core model
# ---------------------------------------------------------------------------

show("rate(0.5,-1,ln0.5,T,s=1)", mp.exp(mp.mpf("0.5") - 1 + mp.log(mp.mpf("0.5"))))

a0, a1 = mp.mpf("-0.066"), mp.mpf("-0.236")
show("trend example Lambda_C(2)", mp.exp(a0) * (mp.exp(a1 * 2) - 1) / a1)
show("trend example rate(0)", mp.exp(a0))

show("alpha0 for Lambda_C(2)=1.5, a1=-1", mp.log(mp.mpf("1.5") * (-1) / (mp.exp(-2) - 1)))
show("alpha0 for Lambda_C(2)=1.5, a1=-1.5",
     mp.log(mp.mpf("1.5") * mp.mpf("-1.5") / (mp.exp(-3) - 1)))
show("alpha0 for Lambda_C(2)=1.5, a1=-0.25",
     mp.log(mp.mpf("1.5") * mp.mpf("-0.25") / (mp.exp(mp.mpf("-0.5")) - 1)))


def nb_quadrature(k, mean, phi):
    shape = 1 / phi

    def integrand(nu):
        gamma_pdf = shape ** shape * nu ** (shape - 1) * mp.exp(-shape * nu) / mp.gamma(shape)
        pois = mp.exp(-nu * mean) * (nu * mean) ** k / mp.factorial(k)
        return gamma_pdf * pois

    return mp.log(mp.quad(integrand, [0, 1, 5, 20, mp.inf]))


show("log NB(3; 1.5, 1.25) by quadrature", nb_quadrature(3, mp.mpf("1.5"), mp.mpf("1.25")))
show("log NB(7; 0.4, 0.3) by quadrature", nb_quadrature(7, mp.mpf("0.4"), mp.mpf("0.3")))

# ---------------------------------------------------------------------------
# three-subject fixture: log-likelihood written term by term
# ---------------------------------------------------------------------------

fixture = [
    # (x, exposure, event times)
    (1, mp.mpf("1.7"), [mp.mpf("0.2"), mp.mpf("0.9"), mp.mpf("1.5")]),
    (0, mp.mpf("2.0"), [mp.mpf("0.4")]),
    (0, mp.mpf("0.8"), []),
]
P = dict(a0=mp.mpf("0.3"), a1=mp.mpf("-0.7"), b=mp.mpf("-0.4"), phi=mp.mpf("0.9"))


def cum(a0, a1, b, x, s):
    return mp.exp(a0) * (mp.exp(a1 * s) - 1) / a1 * mp.exp(b * x)


def loglik_eq3(a0, a1, b, phi, data):
    total = mp.mpf(0)
    for x, S, times in data:
        n = len(times)
        lam = cum(a0, a1, b, x, S)
        total += sum(a0 + a1 * s for s in times)
        total += n * (mp.log(phi) + x * b)
        total += mp.loggamma(n + 1 / phi) - mp.loggamma(1 / phi) - mp.loggamma(n + 1)
        total -= (n + 1 / phi) * mp.log(1 + phi * lam)
    return total


show("fixture loglik", loglik_eq3(P["a0"], P["a1"], P["b"], P["phi"], fixture))

# symbolic score of the same fixture
A0, A1, B, PHI = sp.symbols("a0 a1 b phi")


def sym_loglik(data):
    expr = 0
    for x, S, times in data:
        S = sp.Rational(str(S))
        n = len(times)
        lam = sp.exp(A0) * (sp.exp(A1 * S) - 1) / A1 * sp.exp(B * x)
        expr += sum(A0 + A1 * sp.Rational(str(s)) for s in times)
        expr += n * (sp.log(PHI) + x * B)
        expr += sp.loggamma(n + 1 / PHI) - sp.loggamma(1 / PHI) - sp.loggamma(n + 1)
        expr -= (n + 1 / PHI) * sp.log(1 + PHI * lam)
    return expr


ll = sym_loglik(fixture)
subs = {A0: sp.Rational("0.3"), A1: sp.Rational("-0.7"), B: sp.Rational("-0.4"), PHI: sp.Rational("0.9")}
for name, sym in (("alpha0", A0), ("alpha1", A1), ("beta", B), ("phi", PHI)):
    val = sp.N(sp.diff(ll, sym).subs(subs), 25)
    print(f"{'fixture score ' + name:<40s} = {val}")

# ---------------------------------------------------------------------------
# blinded likelihoods on the same three subjects (groups hidden)
# ---------------------------------------------------------------------------

wT = mp.mpf("0.4")
wC = 1 - wT
bH1 = mp.log(mp.mpf("0.6"))
blind = [(S, times) for _, S, times in fixture]


def nb_logpmf(n, mean, phi):
    return (mp.loggamma(n + 1 / phi) - mp.loggamma(1 / phi) - mp.loggamma(n + 1)
            + n * mp.log(phi * mean) - (n + 1 / phi) * mp.log(1 + phi * mean))


def order_stat_term(a0, a1, S, times):
    # sum_k log(lambda_C(s_k) / Lambda_C(S)); beta cancels
    return sum(a0 + a1 * s - mp.log(cum(a0, a1, 0, 0, S)) for s in times)


def mixture_loglik(a0, a1, phi):
    total = mp.mpf(0)
    for S, times in blind:
        n = len(times)
        lamC = cum(a0, a1, 0, 0, S)
        mix = wT * mp.exp(nb_logpmf(n, lamC * mp.exp(bH1), phi)) + wC * mp.exp(nb_logpmf(n, lamC, phi))
        total += order_stat_term(a0, a1, S, times) + mp.log(mix)
    return total


def lumping_loglik(a0, a1, phi):
    total = mp.mpf(0)
    c = wT * mp.exp(bH1) + wC
    for S, times in blind:
        n = len(times)
        lamB = cum(a0, a1, 0, 0, S) * c
        total += order_stat_term(a0, a1, S, times) + nb_logpmf(n, lamB, phi)
    return total


show("fixture mixture loglik", mixture_loglik(P["a0"], P["a1"], P["phi"]))
show("fixture lumping loglik", lumping_loglik(P["a0"], P["a1"], P["phi"]))

# ---------------------------------------------------------------------------
# expected information by brute-force expectation over NB counts
# ---------------------------------------------------------------------------


def expected_neg_hessian(a0v, a1v, bv, phiv, x, S):
    """E[-d2 l / d theta2] for (a0, a1, b), summing the observed Hessian over counts."""
    n_sym = sp.Symbol("n", nonnegative=True, integer=True)
    lam = sp.exp(A0) * (sp.exp(A1 * S) - 1) / A1 * sp.exp(B * x)
    # event-time terms are linear in the parameters and drop out of the Hessian
    l = n_sym * A0 + n_sym * x * B - (n_sym + 1 / PHI) * sp.log(1 + PHI * lam)
    params = (A0, A1, B)
    hess = [[sp.lambdify(n_sym, -sp.diff(l, p, q).subs({A0: a0v, A1: a1v, B: bv, PHI: phiv}), "mpmath")
             for q in params] for p in params]
    mean = cum(*(mp.mpf(sp.N(v, 40)) for v in (a0v, a1v, bv)), x, mp.mpf(sp.N(S, 40)))
    phiv_mp = mp.mpf(sp.N(phiv, 40))
    out = mp.matrix(3, 3)
    n = 0
    mass = mp.mpf(0)
    while True:
        p = mp.exp(nb_logpmf(n, mean, phiv_mp))
        for r in range(3):
            for c in range(3):
                out[r, c] += p * hess[r][c](n)
        mass += p
        n += 1
        if 1 - mass < mp.mpf("1e-30") and n > 5:
            break
    return out


fa0, fa1, fb, fphi = sp.Rational("0.2"), sp.Rational("-0.8"), sp.log(sp.Rational("0.5")), sp.Rational("1.1")
exps = [sp.Rational("0.5"), sp.Rational("1.2"), sp.Rational("2.0")]
w = sp.Rational("0.5")
total = mp.matrix(3, 3)
for S in exps:
    for x, wx in ((1, w), (0, 1 - w)):
        total += expected_neg_hessian(fa0, fa1, fb, fphi, x, S) * mp.mpf(sp.N(wx, 40))
for r in range(3):
    print("blinded fisher row", r, [mp.nstr(total[r, c], 18) for c in range(3)])
inv = total ** -1
show("blinded info (brute force)", 1 / inv[2, 2])

# ---------------------------------------------------------------------------
# constant-rate information fixtures
# ---------------------------------------------------------------------------

muT, muC, vphi = mp.mpf("0.6"), mp.mpf("1.1"), mp.mpf("0.8")
IT = sum(S * muT / (1 + vphi * S * muT) for S in (mp.mpf(1), mp.mpf(2)))
IC = sum(S * muC / (1 + vphi * S * muC) for S in (mp.mpf("0.5"), mp.mpf("1.5")))
show("info_const fixture", 1 / (1 / IT + 1 / IC))
blind_exp = (mp.mpf(1), mp.mpf(2), mp.mpf("0.5"), mp.mpf("1.5"))
IbT = mp.mpf("0.5") * sum(S * muT / (1 + vphi * S * muT) for S in blind_exp)
IbC = mp.mpf("0.5") * sum(S * muC / (1 + vphi * S * muC) for S in blind_exp)
show("info_const_blinded fixture", 1 / (1 / IbT + 1 / IbC))

# ---------------------------------------------------------------------------
# target information and fixed-design sample sizes
# ---------------------------------------------------------------------------

z = lambda p: mp.sqrt(2) * mp.erfinv(2 * p - 1)
for rr in ("0.2", "0.5", "0.7"):
    for power in ("0.8", "0.9"):
        val = (z(1 - mp.mpf("0.025")) + z(mp.mpf(power))) ** 2 / mp.log(mp.mpf(rr)) ** 2
        show(f"I_fix rr={rr} P={power}", val)
show("z_0.025", z(mp.mpf("0.025")))
