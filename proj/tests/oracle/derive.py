"""Independent oracle for the frozen reference values in oracle_values.hpp.

Conventions, implemented here directly in components:
  J e_x = e_y, d^c f = -df o J, omega = dd^c psi, g = omega(., J .).
  For n = 1: dd^c h = (h_xx + h_yy) dx^dy, g = (lap psi) I, mu = x psi_x + y psi_y.
  Ric = -1/2 dd^c log det g_{j kbar}; Scal = 2 Lambda Ric.

Sphere profiles: -lambda (v theta)'' = w0 + a + b x on [-1, 1] with
v theta = 0 and theta' = -+2 at x = -+1, integrated with mpmath's Taylor ODE solver.

Run: python3 tests/oracle/derive.py > tests/oracle_values.hpp
"""

import mpmath as mp
import sympy as sp

mp.mp.dps = 30
x, y, x1, y1, x2, y2 = sp.symbols("x y x1 y1 x2 y2", real=True)
out = []


def emit(name, value, note):
    out.append(f"inline constexpr double {name} = {sp.N(value, 20)};  // {note}")


def lap(h):
    return sp.diff(h, x, 2) + sp.diff(h, y, 2)


def chart1(psi):
    L = lap(psi)
    mu = x * sp.diff(psi, x) + y * sp.diff(psi, y)
    return L, mu


P = {x: sp.Rational(2, 5), y: sp.Rational(1, 5)}  # sample point (0.4, 0.2)

# Fubini-Study potential of unit area
fs = sp.log(1 + x**2 + y**2) / (4 * sp.pi)
emit("kFsPsiXXOrigin", sp.diff(fs, x, 2).subs({x: 0, y: 0}), "d2/dx2 of the FS potential at 0")
Lfs, _ = chart1(fs)
ric_fs = -sp.Rational(1, 2) * lap(sp.log(Lfs))
emit("kFsScal", sp.simplify(2 * ric_fs / Lfs), "scalar curvature of the unit-area round sphere")

# flat charts psi0 = c |z|^2
for c, nm in ((sp.Rational(1, 4), "Quarter"), (sp.Rational(1, 2), "Half")):
    L0, _ = chart1(c * (x**2 + y**2))
    emit(f"kFlat{nm}LaplacianR2", lap(x**2 + y**2) / L0, f"Delta_0 (x^2+y^2), psi0 = {c}|z|^2")

# Lambda_0(omega_phi) with d2 phi = diag(a, a)
a = sp.Rational(3, 10)
psi0 = (x**2 + y**2) / 2
phi = a * (x**2 + y**2) / 2
emit("kFlatTraceDiag", lap(psi0 + phi) / lap(psi0), "Lambda_0(omega_phi), a = 0.3")

# F = log v(mu_phi) + log(omega_phi/omega_0); roster coordinate 2 mu - 1 on the flat chart of scale 1/2
_, mu_phi = chart1(psi0 + phi)
v_roster = lambda t: sp.exp(t / 2)
F = sp.log(v_roster(2 * mu_phi - 1)) + sp.log(lap(psi0 + phi) / lap(psi0))
emit("kFlatFDiag", F.subs(P), "F at (0.4, 0.2), a = 0.3, v = exp(x/2)")

# v = e^mu pulled back to the roster: v(t) = exp((t + 1)/2); phi = 0
L0, mu0 = chart1(psi0)
vmu = sp.exp(mu0)
f = x**2
lap_v = lap(f) / L0 + (sp.diff(sp.log(vmu), x) * sp.diff(f, x) + sp.diff(sp.log(vmu), y) * sp.diff(f, y)) / L0
emit("kFlatWeightedLaplacian", lap_v.subs(P), "Delta_{0,v} x^2 at (0.4, 0.2), v = e^mu")
vpp = sp.exp(mu0)  # v''(mu) in the chart moment coordinate
gxixi = L0 * (x**2 + y**2)
scal_v = -2 * lap(vmu) / L0 + vpp * gxixi
emit("kFlatScalV", scal_v.subs(P), "definitional Scal_v at (0.4, 0.2), v = e^mu, phi = 0")

# log-affine weight with a quartic potential: Ric_v = Ric - 1/2 dd^c log v(mu_phi)
xi = sp.Rational(7, 10)
phi4 = sp.Rational(1, 20) * (x**4 + x**2 * y**2)
Lp, mup = chart1(psi0 + phi4)
ric = -sp.Rational(1, 2) * lap(sp.log(Lp))
ricv = ric - sp.Rational(1, 2) * lap(xi * mup)
emit("kFlatRicV", ricv.subs(P), "(Ric_v)_{xy} at (0.4, 0.2), v = exp(0.7 mu), quartic phi")

# n = 2: |nabla^0 omega_phi|^2 on the flat background by brute-force contraction
X = [x1, y1, x2, y2]
Jm = sp.zeros(4)
for k in range(2):
    Jm[2 * k + 1, 2 * k] = 1
    Jm[2 * k, 2 * k + 1] = -1


def omega_of(psi):
    d = [sp.diff(psi, v) for v in X]
    dc = [-sum(d[m] * Jm[m, l] for m in range(4)) for l in range(4)]  # (d^c psi)_l = -d psi(J e_l)
    return sp.Matrix(4, 4, lambda i, j: sp.diff(dc[j], X[i]) - sp.diff(dc[i], X[j]))


psi2 = (x1**2 + y1**2 + x2**2 + y2**2) / 2
phi2 = sp.Rational(1, 30) * (x1**4 + x1 * y1 * x2**2 + y2**4 - x1**2 * y2**2)
P2 = {x1: sp.Rational(3, 10), y1: -sp.Rational(1, 5), x2: sp.Rational(1, 10), y2: sp.Rational(2, 5)}
w0 = omega_of(psi2)
wp = omega_of(psi2 + phi2)
g0 = (w0 * Jm).subs(P2)  # g(u, v) = omega(u, J v)
gp = (wp * Jm).subs(P2)
g0i, gpi = g0.inv(), gp.inv()
dw = [sp.Matrix(4, 4, lambda i, j: sp.diff(wp[i, j], X[m])).subs(P2) for m in range(4)]
norm = 0
for m in range(4):
    for q in range(4):
        for i in range(4):
            for j in range(4):
                for k in range(4):
                    for l in range(4):
                        norm += g0i[m, q] * sp.Rational(1, 2) * gpi[i, k] * gpi[j, l] * dw[m][i, j] * dw[q][k, l]
emit("kFlat2Nabla0OmegaNorm", norm, "|nabla^0 omega_phi|^2 at (0.3,-0.2,0.1,0.4), quartic phi, n = 2")

# sphere profiles
lam = 4 * mp.pi
roster = {
    "One": (lambda t: mp.mpf(1), lambda t: mp.mpf(0)),
    "Exp": (lambda t: mp.e**t, lambda t: 2 * mp.e**t * (1 + t)),
    "Gauss": (lambda t: mp.e ** (-t * t), lambda t: mp.mpf(0)),
    "Affine": (lambda t: (2 + t) / 3, lambda t: mp.mpf(0)),
    "Pow": (lambda t: (2 + t) ** -3, lambda t: (2 + t) ** -4),
}


def shoot(vf, wf, a_, b_):
    # u = v theta, u(-1) = 0, u'(-1) = 2 v(-1)
    sol = mp.odefun(lambda t, u: [u[1], -(wf(t) + a_ + b_ * t) / lam], -1, [mp.mpf(0), 2 * vf(-1)])
    return sol


for nm, (vf, wf) in roster.items():
    # the end conditions at +1 are affine in (a, b)
    def ends(a_, b_):
        u = shoot(vf, wf, a_, b_)(1)
        return mp.matrix([u[0], u[1] + 2 * vf(1)])

    e0 = ends(0, 0)
    ea = ends(1, 0) - e0
    eb = ends(0, 1) - e0
    A = mp.matrix([[ea[0], eb[0]], [ea[1], eb[1]]])
    ab = mp.lu_solve(A, -e0)
    sol = shoot(vf, wf, ab[0], ab[1])
    emit(f"kSphere{nm}A", ab[0], f"constant term of the affine correction, {nm.lower()} pair")
    emit(f"kSphere{nm}B", ab[1], f"linear term of the affine correction, {nm.lower()} pair")
    for t, tag in ((-0.5, "M05"), (0.0, "0"), (0.5, "P05")):
        emit(f"kSphere{nm}Theta{tag}", sol(mp.mpf(t))[0] / vf(mp.mpf(t)), f"theta({t}), {nm.lower()} pair")

print("#pragma once\n")
print("// Generated by tests/oracle/derive.py; do not edit.\n")
print("namespace oracle {\n")
print("\n".join(out))
print("\n}  // namespace oracle")
