"""Independent reference values for the Rust test suite.

Everything here is computed from first principles (high-precision sums,
explicit Markov-chain solves, direct substitution) without sharing code with
the Rust implementation. Run with `python3 tools/oracles.py`.
"""
import itertools

import mpmath as mp
import numpy as np

mp.mp.dps = 60


def ber(snr):
    snr = mp.mpf(snr)
    s = mp.mpf(0)
    for k in range(2, 17):
        s += (-1) ** k * mp.binomial(16, k) * mp.e ** (20 * snr * (mp.mpf(1) / k - 1))
    return mp.mpf(8) / 15 / 16 * s


def rx(ptx, d):
    d = mp.mpf(d)
    if d > 8:
        return ptx - (mp.mpf("58.5") + 33 * mp.log10(d / 8))
    return ptx - (mp.mpf("40.2") + 20 * mp.log10(d))


def windows(min_be, max_be, m):
    mbar = max_be - min_be
    w0 = 2 ** min_be
    return [w0 * 2 ** min(i, mbar) for i in range(m + 1)]


def chain_oracle(alpha, pnoack, psend, min_be, max_be, m, n, ls, lc):
    """Explicit state enumeration of the CSMA/CA chain, solved with numpy."""
    w = windows(min_be, max_be, m)
    states = ["idle"]
    for j in range(n + 1):
        for i in range(m + 1):
            for k in range(w[i]):
                states.append((i, k, j))
        for h in range(ls):
            states.append((-1, h, j))
        for h in range(lc):
            states.append((-2, h, j))
    idx = {s: x for x, s in enumerate(states)}
    p = np.zeros((len(states), len(states)))
    p[0, 0] = 1 - psend
    for k in range(w[0]):
        p[0, idx[(0, k, 0)]] += psend / w[0]
    for j in range(n + 1):
        for i in range(m + 1):
            for k in range(1, w[i]):
                p[idx[(i, k, j)], idx[(i, k - 1, j)]] = 1
            s = idx[(i, 0, j)]
            if i < m:
                for k in range(w[i + 1]):
                    p[s, idx[(i + 1, k, j)]] += alpha / w[i + 1]
            else:
                p[s, 0] += alpha
            p[s, idx[(-2, 0, j)]] += (1 - alpha) * pnoack
            p[s, idx[(-1, 0, j)]] += (1 - alpha) * (1 - pnoack)
        for h in range(ls - 1):
            p[idx[(-1, h, j)], idx[(-1, h + 1, j)]] = 1
        p[idx[(-1, ls - 1, j)], 0] = 1
        for h in range(lc - 1):
            p[idx[(-2, h, j)], idx[(-2, h + 1, j)]] = 1
        last = idx[(-2, lc - 1, j)]
        if j < n:
            for k in range(w[0]):
                p[last, idx[(0, k, j + 1)]] += 1 / w[0]
        else:
            p[last, 0] = 1
    assert np.allclose(p.sum(axis=1), 1, atol=1e-14)
    a = p.T - np.eye(len(states))
    a[-1, :] = 1
    rhs = np.zeros(len(states))
    rhs[-1] = 1
    pi = np.linalg.solve(a, rhs)
    tau = sum(pi[idx[(i, 0, j)]] for i in range(m + 1) for j in range(n + 1))
    return pi[idx[(0, 0, 0)]], tau, pi[0]


def union(*ps):
    q = 1.0
    for x in ps:
        q *= 1 - x
    return 1 - q


def retrans_matrix(alpha, m, lost, mh, mv, bc1, bsc1):
    # order: succ, cf, (0,0), (1,0), (0,1), (1,1)
    t = np.zeros((6, 6))
    t[0, 0] = 1
    t[1, 1] = 1
    b = 1 - alpha ** (m + 1)
    for row, (pp, qq) in zip(range(2, 6), [(0, 0), (1, 0), (0, 1), (1, 1)]):
        bc = bc1 if pp else 0.0
        bsc = bsc1 if qq else 0.0
        t[row, 1] = alpha ** (m + 1)
        t[row, 0] = b * (1 - union(lost, bc, bsc))
        t[row, 2] = b * (lost - union(mh, mv)) * (1 - union(bc, bsc))
        t[row, 3] = b * union(mh, bc) * (1 - union(mv, bsc))
        t[row, 4] = b * (1 - union(mh, bc)) * union(mv, bsc)
        t[row, 5] = b * union(mh, bc) * union(mv, bsc)
    return t


def reach_by_paths(t, steps):
    total = 0.0
    for k in range(steps):
        for mid in itertools.product(range(2, 6), repeat=k):
            path = (2,) + mid
            pr = 1.0
            for a, b in zip(path, path[1:]):
                pr *= t[a, b]
            total += pr * t[path[-1], 0]
    return total


if __name__ == "__main__":
    print("BER(SNR=1)      =", mp.nstr(ber(1), 20))
    print("BER(SNR=0)      =", mp.nstr(ber(0), 20))
    print("BER(SNR=0.5)    =", mp.nstr(ber("0.5"), 20))
    print("Prx(0, 8m)      =", mp.nstr(rx(0, 8), 20))
    print("Prx(0, 8.0001m) =", mp.nstr(rx(0, "8.0000001"), 20))
    print("Prx(0, 80m)     =", mp.nstr(rx(0, 80), 20))
    print("PER(1e-4, 50B)  =", mp.nstr(1 - (1 - mp.mpf("1e-4")) ** 400, 20))
    snr_1m = mp.mpf(10) ** ((rx(0, 1) + 95) / 10)
    print("SNR(1m, -95)    =", mp.nstr(snr_1m, 20), "BER", mp.nstr(ber(snr_1m), 5))

    b000, tau, idle = chain_oracle(0.3, 0.2, 0.05, 3, 5, 4, 3, 16, 15)
    print("chain grid point b000=%.17g tau=%.17g idle=%.17g" % (b000, tau, idle))
    b000, tau, idle = chain_oracle(1.0, 0.5, 0.2, 3, 5, 4, 3, 16, 15)
    print("chain alpha=1    b000=%.17g tau=%.17g idle=%.17g" % (b000, tau, idle))

    t = retrans_matrix(0.2, 4, 0.3, 0.1, 0.05, 0.9, 0.125)
    np.set_printoptions(precision=17)
    for row in t:
        print("  [" + ", ".join("%.17g" % v for v in row) + "],")
    for n in range(0, 4):
        power = np.linalg.matrix_power(t, n + 1)[2, 0]
        print("R(n=%d) power=%.17g paths=%.17g" % (n, power, reach_by_paths(t, n + 1)))
