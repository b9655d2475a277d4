"""Independent reference numbers frozen into the C++ tests.

Plain scalar loops in mpmath at 50 digits; no code is shared with the
library. Run it to regenerate; the printed values are pasted into
tests/oracle_values.hpp by hand.
"""
import mpmath as mp

mp.mp.dps = 50

CLOUD4 = [(0.9, 0.1), (0.2, 0.7), (-0.5, 0.4), (-0.3, -0.8)]
EIGHT = [(0.9, 0.1), (0.2, 0.7), (-0.5, 0.4), (-0.3, -0.8),
         (0.6, -0.5), (0.05, 0.1), (-0.9, -0.2), (0.4, 0.45)]


def sqdist(a, b):
    return sum((mp.mpf(x) - mp.mpf(y)) ** 2 for x, y in zip(a, b))


def dot(a, b):
    return sum(mp.mpf(x) * mp.mpf(y) for x, y in zip(a, b))


def weights(vs, lam):
    n = len(vs)
    return [[mp.e ** (-lam * sqdist(vs[i], vs[j])) if i != j else mp.mpf(0)
             for j in range(n)] for i in range(n)]


def taylor_weights(vs, lam, p):
    n = len(vs)
    out = [[mp.mpf(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            s = sum((2 * lam) ** k / mp.factorial(k) * dot(vs[i], vs[j]) ** k
                    for k in range(p + 1))
            out[i][j] = mp.e ** (-lam * (dot(vs[i], vs[i]) + dot(vs[j], vs[j]))) * s
    return out


def laplacian(w):
    n = len(w)
    d = [sum(r) for r in w]
    return [[(d[i] if i == j else 0) - w[i][j] for j in range(n)] for i in range(n)], d


def eig(m):
    ev, _ = mp.eigsy(mp.matrix(m))
    return sorted(ev[i] for i in range(len(m)))


def show(name, xs):
    print(name, "{" + ", ".join(mp.nstr(x, 17) for x in xs) + "}")


lam = mp.mpf("0.5")
w = weights(CLOUD4, lam)
show("cloud4_W_row0", w[0])
show("cloud4_W_row3", w[3])
wp = taylor_weights(CLOUD4, lam, 4)
show("cloud4_Wp4_row0", wp[0])
L, d = laplacian(w)
tr = sum(d)
show("cloud4_degrees", d)
show("cloud4_calL_eigs", eig([[x / tr for x in r] for r in L]))
Ls = [[L[i][j] / mp.sqrt(d[i] * d[j]) for j in range(4)] for i in range(4)]
show("cloud4_Ls_eigs", eig(Ls))

w8 = weights(EIGHT, lam)
L8, _ = laplacian(w8)
show("eight_L_eigs", eig(L8))

# coefficient amplitudes sqrt(a~_k / a~), lambda 0.5, p 3
at = [mp.e ** (-2 * lam) * (2 * lam) ** k / mp.factorial(k) for k in range(4)]
show("amps_l05_p3", [mp.sqrt(a / sum(at)) for a in at])

# antipodal pair, p 4: rho0 off-diagonal = W_p[0,1] / (n a~)
pair = [(1.0, 0.0), (-1.0, 0.0)]
at4 = sum(mp.e ** (-2 * lam) * (2 * lam) ** k / mp.factorial(k) for k in range(5))
show("antipodal_rho0_offdiag", [taylor_weights(pair, lam, 4)[0][1] / (2 * at4)])
