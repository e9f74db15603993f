"""Generate the prime-power MUB families and SIC fiducials shipped in crates/core/data."""
import json
import os

import numpy as np
from scipy.optimize import least_squares

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data")


def ket_json(v):
    return {"shape": [len(v)], "entries": [[float(z.real), float(z.imag)] for z in v]}


def check_family(bases, d):
    for b in bases:
        g = b.conj().T @ b
        assert np.allclose(g, np.eye(d), atol=1e-12)
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            ov = np.abs(bases[i].conj().T @ bases[j])
            assert np.allclose(ov, 1 / np.sqrt(d), atol=1e-12), (i, j)


def clean(v):
    v = np.where(np.abs(v.real) < 1e-15, 0.0, v.real) + 1j * np.where(np.abs(v.imag) < 1e-15, 0.0, v.imag)
    return v


def two_qubit_family():
    I = np.eye(2)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]])
    Z = np.diag([1.0, -1.0]).astype(complex)
    sets = [
        [(Z, I), (I, Z)],
        [(X, I), (I, X)],
        [(Y, I), (I, Y)],
        [(X, Z), (Y, X)],
        [(Y, Z), (X, Y)],
    ]
    bases = []
    for s in sets:
        p1 = np.kron(*s[0])
        p2 = np.kron(*s[1])
        assert np.allclose(p1 @ p2, p2 @ p1)
        h = 1.0 * p1 + np.sqrt(2.0) * p2
        _, vecs = np.linalg.eigh(h)
        cols = []
        for k in range(4):
            v = vecs[:, k]
            idx = np.argmax(np.abs(v) > 1e-9)
            v = v * np.exp(-1j * np.angle(v[idx]))
            cols.append(clean(v))
        bases.append(np.array(cols).T)
    check_family(bases, 4)
    return bases


def gf9_family():
    # GF(9) = GF(3)[i]/(i^2 + 1); elements a + b i stored as (a, b)
    elems = [(a, b) for a in range(3) for b in range(3)]

    def mul(x, y):
        return ((x[0] * y[0] - x[1] * y[1]) % 3, (x[0] * y[1] + x[1] * y[0]) % 3)

    def add(x, y):
        return ((x[0] + y[0]) % 3, (x[1] + y[1]) % 3)

    def tr(x):
        return (2 * x[0]) % 3

    w = np.exp(2j * np.pi / 3)
    bases = [np.eye(9, dtype=complex)]
    for a in elems:
        cols = []
        for b in elems:
            v = np.array([w ** tr(add(mul(a, mul(x, x)), mul(b, x))) for x in elems]) / 3.0
            cols.append(clean(v))
        bases.append(np.array(cols).T)
    check_family(bases, 9)
    return bases


def write_family(name, bases, d):
    data = {
        "schema_version": 1,
        "d": d,
        "bases": [[ket_json(b[:, i]) for i in range(d)] for b in bases],
    }
    with open(os.path.join(OUT, name), "w") as f:
        json.dump(data, f, indent=1)
        f.write("\n")


def wh_orbit(fid):
    d = len(fid)
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    out = []
    for p in range(d):
        for q in range(d):
            out.append(np.linalg.matrix_power(X, p) @ np.linalg.matrix_power(Z, q) @ fid)
    return out


def write_sic(d, fid):
    orbit = wh_orbit(fid)
    for i in range(len(orbit)):
        for j in range(i + 1, len(orbit)):
            assert abs(abs(np.vdot(orbit[i], orbit[j])) ** 2 - 1 / (d + 1)) < 1e-12
    data = {"schema_version": 1, "d": d, "fiducial": [[float(z.real), float(z.imag)] for z in clean(fid)]}
    with open(os.path.join(OUT, f"sic_d{d}.json"), "w") as f:
        json.dump(data, f, indent=1)
        f.write("\n")


def numeric_fiducial(d, restarts=200):
    """Weyl-Heisenberg fiducial by least squares on the overlap equations."""
    rng = np.random.default_rng(d)

    def resid(x):
        f = x[:d] + 1j * x[d:]
        f = f / np.linalg.norm(f)
        return np.array([abs(np.vdot(f, v)) ** 2 for v in wh_orbit(f)[1:]]) - 1 / (d + 1)

    for _ in range(restarts):
        r = least_squares(resid, rng.normal(size=2 * d), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.max(np.abs(r.fun)) < 1e-14:
            f = r.x[:d] + 1j * r.x[d:]
            f = f / np.linalg.norm(f)
            return f * np.exp(-1j * np.angle(f[0]))
    raise RuntimeError(f"no fiducial found for d = {d}")


if __name__ == "__main__":
    write_family("mub_d4.json", two_qubit_family(), 4)
    write_family("mub_d9.json", gf9_family(), 9)
    theta = np.arccos(1 / np.sqrt(3))
    write_sic(2, np.array([np.cos(theta / 2), np.exp(1j * np.pi / 4) * np.sin(theta / 2)]))
    write_sic(3, np.array([0, 1, -1], dtype=complex) / np.sqrt(2))
    for d in (4, 5, 6):
        write_sic(d, numeric_fiducial(d))
