"""Regenerates oracles.inc (mpmath at 40 digits, scipy for Mathieu values).

    python3 tests/oracles/gen_oracles.py > tests/oracles/oracles.inc
"""
import mpmath as mp

mp.mp.dps = 40


def w(z):
    return mp.exp(-z * z) * mp.erfc(-1j * z)


# Gaussian Wannier width for s_z = 8
A = mp.mpf(8) ** mp.mpf(-0.25)


def gtilde_closed(n, zeta, om):
    K = om ** 2 * mp.sqrt(mp.pi) * A / 8
    c = n * mp.pi / (2 * A)
    S = mp.exp(-c * c) * (w(A * zeta - 1j * c) + w(A * zeta + 1j * c))
    return K * S / zeta


def gtilde_integral(n, omega, om):
    # i (Omega^2 a / (4 sqrt(pi))) Int dk exp(-a^2 k^2) cos(n pi k) / (omega - k^2), Im omega > 0
    f = lambda k: mp.exp(-A * A * k * k) * mp.cos(n * mp.pi * k) / (omega - k * k)
    pref = om ** 2 * A / (4 * mp.sqrt(mp.pi))
    k0 = abs(mp.sqrt(omega).real)
    pts = sorted(set([-mp.inf, -6, -3, -k0 - 0.3, -k0, -k0 + 0.3, 0, k0 - 0.3, k0, k0 + 0.3, 3, 6, mp.inf]))
    return 1j * pref * mp.quad(f, pts, maxdegree=10)


def det_zeta(zeta, om, delta):
    g = [gtilde_closed(n, zeta, om) for n in range(3)]
    m11 = zeta ** 2 - delta + 1j * (g[0] + g[2])
    m12 = 1j * g[1]
    m21 = 2j * g[1]
    m22 = zeta ** 2 - delta + 1j * g[0]
    return m11 * m22 - m12 * m21


def c(z):
    z = mp.mpc(z)
    return "{%s, %s}" % (mp.nstr(z.real, 20, min_fixed=-1, max_fixed=-1), mp.nstr(z.imag, 20, min_fixed=-1, max_fixed=-1))


print("// generated by gen_oracles.py, do not edit")
print("#pragma once")
print("#include <complex>")
pts = [0.1 + 0.1j, 1 + 1j, -1 + 1j, 2 - 0.5j, -2.5 - 3j, 0.5j, -0.5j, 3.0, -3.0, 5 + 0.01j, 0.01 + 5j,
       10 + 10j, -7 + 0.3j, 0.3 - 7j, 1e-3 + 1e-3j, 25 + 1j, 1 + 25j, -4 - 4j, 6 + 6j, 0.8 - 0.2j,
       12 - 3j, -0.05 + 2j, 3.5 + 0.7j, -1.2 - 0.1j]
print("struct CerfcCase { std::complex<double> z, v; };")
print("inline const CerfcCase cerfc_cases[] = {")
for z in pts:
    z = mp.mpc(z)
    print("    {%s, %s}," % (c(z), c(mp.erfc(z))))
print("};")
print("inline const CerfcCase faddeeva_cases[] = {")
for z in pts:
    z = mp.mpc(z)
    if z.imag < -2.5 and abs(z.real) < abs(z.imag):
        continue  # exp(-z^2) overflows double range
    print("    {%s, %s}," % (c(z), c(w(z))))
print("};")

# bath transform off the real axis, by direct integration
print("struct GtildeCase { int n; double om; std::complex<double> omega, g; };")
print("inline const GtildeCase gtilde_cases[] = {")
for n in range(3):
    for om, omega in [(1.0, 4 + 0.3j), (0.42, 1 + 0.05j), (0.6, -0.2 + 0.1j), (0.6, 0.5 + 1j)]:
        gi = gtilde_integral(n, mp.mpc(omega), om)
        zeta = mp.sqrt(mp.mpc(omega))
        if zeta.imag < 0:
            zeta = -zeta
        gc = gtilde_closed(n, zeta, om)
        assert abs(gi - gc) < 1e-25 * max(1, abs(gc)), (n, om, omega, gi, gc)
        print("    {%d, %s, %s, %s}," % (n, om, c(omega), c(gi)))
print("};")

# poles in zeta, polished with the closed form
print("struct PoleCase { double om, delta; std::complex<double> zeta; };")
print("inline const PoleCase pole_cases[] = {")
for om, delta, seeds in [(1.0, 4.0, [2.0213 - 0.0239j, 2.0183 - 1.8e-6j, 0.1364j]),
                         (0.42, 1.0, [1.01186 - 1.6e-6j, 1.0221 - 0.0528j, 0.1036j]),
                         (0.6, 0.0, [0.5282 - 0.0309j, 0.3199j, 0.4738j])]:
    for s in seeds:
        r = mp.findroot(lambda z: det_zeta(z, om, delta), mp.mpc(s))
        print("    {%s, %s, %s}," % (om, delta, c(r)))
print("};")

# ground-band edges from Mathieu characteristic values: eps = a + s/2 with q_M = s/4
from scipy.special import mathieu_a, mathieu_b

print("struct BandCase { double s, eps_center, eps_edge; };")
print("inline const BandCase band_cases[] = {")
for s in [2.0, 4.0, 8.0, 15.0]:
    print("    {%s, %.15g, %.15g}," % (s, mathieu_a(0, s / 4) + s / 2, mathieu_b(1, s / 4) + s / 2))
print("};")
