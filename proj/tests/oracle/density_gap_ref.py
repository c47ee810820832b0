#!/usr/bin/env python3
"""Independent high-precision reference for the L1 density-gap machinery.

Computes, with mpmath (30 significant digits) and sign-change-splitting
quadrature, the quantity

    gap(s, t, x_t) = Integral over x_s of | p(x_s | x_t) - p_tilde(x_s | x_t) |

where p is the exact two-component reverse kernel (posterior-weighted mixture
of Gaussians) and p_tilde is its single-Gaussian approximation with the same
component stddev and the posterior-averaged mean.  Training set y = {-1, +1},
cosine schedule alpha(t) = cos(pi t / 2).

Also produces the full sweep tables used by the bound-sweep tests:
  * fixed s = 0.5, t in {0.51, ..., 0.70}, probes x_t in {-2, 0, 2}
  * t = 1, s in {0.90 ... 0.999}  (kernel from the terminal time)
  * terminal-marginal gap: integral |p(x,t) - N(x; alpha ybar(x,t), sigma^2)|

The printed numbers are frozen into the C++ tests; this script is the source
of truth for them.  Runtime: a couple of minutes (pure mpmath).
"""

import numpy as np
from mpmath import mp, mpf, sqrt, sin, cos, pi, exp, log, quad

mp.dps = 30

YS = [mpf(-1), mpf(1)]


def cosine(t):
    t = mpf(t)
    return cos(pi * t / 2), sin(pi * t / 2)


def weights(x, alpha, sigma):
    logs = [-(x - alpha * y) ** 2 / (2 * sigma ** 2) for y in YS]
    m = max(logs)
    ws = [exp(l - m) for l in logs]
    z = sum(ws)
    return [w / z for w in ws]


def reverse_pair(s, t, x_t):
    """Return (p, p_tilde) callables for the reverse kernel at (s, t, x_t)."""
    al_s, si_s = cosine(s)
    al_t, si_t = cosine(t)
    a_ts = al_t / al_s
    s_ts = sqrt(1 - a_ts ** 2)
    s_st = s_ts * si_s / si_t
    a = a_ts * si_s ** 2 / si_t ** 2
    b = al_s * s_ts ** 2 / si_t ** 2
    w = weights(x_t, al_t, si_t)
    means = [a * x_t + b * y for y in YS]
    mbar = a * x_t + b * sum(wi * y for wi, y in zip(w, YS))
    norm = 1 / sqrt(2 * pi * s_st ** 2)

    def p(x):
        return norm * sum(wi * exp(-(x - m) ** 2 / (2 * s_st ** 2))
                          for wi, m in zip(w, means))

    def pt(x):
        return norm * exp(-(x - mbar) ** 2 / (2 * s_st ** 2))

    center = mbar
    halfwidth = 10 * s_st + max(abs(m - mbar) for m in means)
    return p, pt, s_st, center, halfwidth


def l1_split_quad(f, g, center, halfwidth):
    """Integral of |f-g| over [center-halfwidth, center+halfwidth], splitting
    at sign changes of f-g located numerically in float64 first."""
    lo, hi = center - halfwidth, center + halfwidth
    xs = np.linspace(float(lo), float(hi), 4001)
    vals = np.array([float(f(mpf(x)) - g(mpf(x))) for x in xs])
    roots = []
    for i in range(len(xs) - 1):
        if vals[i] == 0.0:
            roots.append(xs[i])
        elif vals[i] * vals[i + 1] < 0:
            a_, b_ = xs[i], xs[i + 1]
            for _ in range(80):
                m_ = 0.5 * (a_ + b_)
                fm = float(f(mpf(m_)) - g(mpf(m_)))
                if fm == 0.0:
                    break
                if fm * vals[i] < 0:
                    b_ = m_
                else:
                    a_ = m_
            roots.append(0.5 * (a_ + b_))
    pts = [lo] + [mpf(r) for r in sorted(roots)] + [hi]
    total = mpf(0)
    for a_, b_ in zip(pts[:-1], pts[1:]):
        total += abs(quad(lambda x: f(x) - g(x), [a_, b_]))
    return total


def gap(s, t, x_t):
    p, pt, s_st, c, hw = reverse_pair(s, t, x_t)
    return l1_split_quad(p, pt, c, hw), s_st


print("== spot value: s=0.5, t=0.6, x_t=0.3 ==")
g, s_st = gap("0.5", "0.6", mpf("0.3"))
print(f"l1_gap = {mp.nstr(g, 17)}   sigma_s_given_t = {mp.nstr(s_st, 17)}")

print()
print("== sweep A: s=0.5, t=0.51..0.70, probes x_t in {-2, 0, 2} ==")
print("t, x_t, gap, sigma_s_given_t, ratio gap/sqrt(sigma_s_given_t)")
ratios = {}
gaps = {}
for probe in ("-2", "0", "2"):
    ratios[probe] = []
    gaps[probe] = []
for k in range(1, 21):
    t = mpf(50 + k) / 100
    for probe in ("-2", "0", "2"):
        g, s_st = gap("0.5", t, mpf(probe))
        r = g / sqrt(s_st)
        ratios[probe].append(r)
        gaps[probe].append(g)
        print(f"{mp.nstr(t, 3)}, {probe}, {mp.nstr(g, 12)}, "
              f"{mp.nstr(s_st, 12)}, {mp.nstr(r, 12)}")
print()
for probe in ("-2", "0", "2"):
    rs = ratios[probe]
    gs = gaps[probe]
    print(f"probe {probe}: ratio max/min = {mp.nstr(max(rs) / min(rs), 8)}; "
          f"gap(0.70)/gap(0.51) = {mp.nstr(gs[-1] / gs[0], 8)}")
allr = [r for probe in ratios for r in ratios[probe]]
print(f"all probes pooled: ratio max/min = {mp.nstr(max(allr) / min(allr), 8)}")

print()
print("== sweep B: t=1 (kernel from terminal time), s in 0.90..0.999 ==")
print("the reverse kernel at t=1 is the s-marginal; p_tilde is the single")
print("Gaussian N(alpha_s*mean(y), sigma_s^2) = N(0, sigma_s^2) here")
print("s, gap, alpha_s, ratio gap/sqrt(alpha_s)")


def gap_from_one(s):
    al_s, si_s = cosine(s)
    norm = 1 / sqrt(2 * pi * si_s ** 2)

    def p(x):
        return norm * (exp(-(x - al_s) ** 2 / (2 * si_s ** 2))
                       + exp(-(x + al_s) ** 2 / (2 * si_s ** 2))) / 2

    def pt(x):
        return norm * exp(-x ** 2 / (2 * si_s ** 2))

    return l1_split_quad(p, pt, mpf(0), 10 * si_s + al_s), al_s


rows = []
for s in ("0.90", "0.92", "0.94", "0.96", "0.98", "0.99", "0.995", "0.999"):
    g, al_s = gap_from_one(s)
    r = g / sqrt(al_s)
    rows.append((s, g, al_s, r))
    print(f"{s}, {mp.nstr(g, 12)}, {mp.nstr(al_s, 12)}, {mp.nstr(r, 12)}")
rs = [r for (_, _, _, r) in rows]
print(f"ratio max/min over sweep = {mp.nstr(max(rs) / min(rs), 8)}")
gs = [g for (_, g, _, _) in rows]
mono = all(gs[i] > gs[i + 1] for i in range(len(gs) - 1))
print(f"raw gap monotonically decreasing: {mono}")

print()
print("== sweep C: terminal-marginal gap, t in 0.95..0.999 ==")
print("integral over x of |p(x,t) - N(x; alpha_t ybar(x,t), sigma_t^2)|")
print("t, gap, alpha_t, ratio gap/sqrt(alpha_t)")


def gap_marginal(t):
    al, si = cosine(t)
    norm = 1 / sqrt(2 * pi * si ** 2)

    def p(x):
        return norm * (exp(-(x - al) ** 2 / (2 * si ** 2))
                       + exp(-(x + al) ** 2 / (2 * si ** 2))) / 2

    def pt(x):
        w = weights(x, al, si)
        yb = sum(wi * y for wi, y in zip(w, YS))
        return norm * exp(-(x - al * yb) ** 2 / (2 * si ** 2))

    return l1_split_quad(p, pt, mpf(0), 10 * si + al), al


for t in ("0.95", "0.97", "0.99", "0.995", "0.999"):
    g, al = gap_marginal(t)
    print(f"{t}, {mp.nstr(g, 12)}, {mp.nstr(al, 12)}, "
          f"{mp.nstr(g / sqrt(al), 12)}")
