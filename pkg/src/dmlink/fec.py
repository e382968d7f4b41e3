"""Rate-1/2 regular LDPC coding with hard-decision decoding.

The parity-check matrix is a random (3, 6)-regular bipartite graph: every
bit participates in exactly 3 checks and every check covers exactly 6 bits.
Encoding is systematic; a GF(2) elimination picks parity columns that form
an invertible block (recording the column permutation) and precomputes the
dense parity generator.

The decoder flips one bit per iteration, the bit sitting in the most
unsatisfied checks. It corrects scattered flips well and is defeated by a
single inserted bit upstream: framing rejects any stream whose length is
not the expected codeword multiple, because realignment is impossible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConstructionFailed(RuntimeError):
    """No invertible parity block found within the retry budget."""


class LengthMismatch(ValueError):
    """Bit count does not match the code dimensions."""


# A codeword is a length-n uint8 0/1 vector, message bits first.
Codeword = np.ndarray

COL_WEIGHT = 3
ROW_WEIGHT = 6
DEFAULT_N = 816
DEFAULT_MAX_ITERATIONS = 50
BUILD_ATTEMPTS = 100


@dataclass(frozen=True)
class LdpcCode:
    """A built code: graph adjacency, encoder matrix, provenance."""

    n: int
    k: int
    row_cols: np.ndarray        # (m, 6) bit indices per check
    col_rows: np.ndarray        # (n, 3) check indices per bit
    encode_matrix: np.ndarray   # (m, k) GF(2): parity = E @ message
    column_permutation: np.ndarray  # maps built-graph columns to code order
    seed: int
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    @property
    def m(self) -> int:
        return self.n - self.k


def _build_graph(rng: np.random.Generator, n: int) -> np.ndarray:
    """Deal 3 stubs per column into rows of 6, repairing duplicate columns."""
    m = n // 2
    stubs = np.repeat(np.arange(n), COL_WEIGHT)
    rng.shuffle(stubs)
    rows = stubs.reshape(m, ROW_WEIGHT)
    for _ in range(20 * m):
        dup_row = -1
        for i in range(m):
            if np.unique(rows[i]).size < ROW_WEIGHT:
                dup_row = i
                break
        if dup_row < 0:
            return rows
        i = dup_row
        vals, counts = np.unique(rows[i], return_counts=True)
        dup_val = vals[counts > 1][0]
        a = int(np.flatnonzero(rows[i] == dup_val)[0])
        for _ in range(1000):
            j = int(rng.integers(m))
            b = int(rng.integers(ROW_WEIGHT))
            if j == i:
                continue
            if rows[j, b] not in rows[i] and dup_val not in rows[j]:
                rows[i, a], rows[j, b] = rows[j, b], dup_val
                break
        else:
            break
    raise ConstructionFailed("could not repair duplicate graph edges")


def _dense(rows: np.ndarray, n: int) -> np.ndarray:
    m = rows.shape[0]
    h = np.zeros((m, n), dtype=np.uint8)
    for i in range(m):
        h[i, rows[i]] = 1
    return h


def _pivot_columns(h: np.ndarray) -> np.ndarray | None:
    """m independent columns found by elimination, preferring the tail
    (keeps the natural message-then-parity layout when it already works)."""
    m, n = h.shape
    work = h.copy()
    preference = list(range(n - m, n)) + list(range(n - m))
    pivots: list[int] = []
    row = 0
    for col in preference:
        if row == m:
            break
        hit = np.flatnonzero(work[row:, col]) + row
        if hit.size == 0:
            continue
        r = int(hit[0])
        if r != row:
            work[[row, r]] = work[[r, row]]
        mask = work[:, col].copy()
        mask[row] = 0
        work[mask == 1] ^= work[row]
        pivots.append(col)
        row += 1
    if row < m:
        return None
    return np.sort(np.asarray(pivots, dtype=np.int64))


def _gf2_inverse(b: np.ndarray) -> np.ndarray:
    m = b.shape[0]
    aug = np.concatenate([b.copy(), np.eye(m, dtype=np.uint8)], axis=1)
    for col in range(m):
        hit = np.flatnonzero(aug[col:, col]) + col
        r = int(hit[0])
        if r != col:
            aug[[col, r]] = aug[[r, col]]
        mask = aug[:, col].copy()
        mask[col] = 0
        aug[mask == 1] ^= aug[col]
    return aug[:, m:]


def ldpc_build(seed: int, n: int = DEFAULT_N,
               max_iterations: int = DEFAULT_MAX_ITERATIONS) -> LdpcCode:
    """Construct a (3,6)-regular rate-1/2 code.

    Deterministic in the seed. When a sampled graph has no invertible parity
    block (rank deficiency), the seed is bumped internally and the graph
    resampled, up to 100 attempts.
    """
    if n < 48 or n % 2:
        raise ValueError("n must be even and at least 48")
    for bump in range(BUILD_ATTEMPTS):
        rng = np.random.Generator(np.random.PCG64(seed + bump))
        try:
            rows = _build_graph(rng, n)
        except ConstructionFailed:
            continue
        h = _dense(rows, n)
        pivots = _pivot_columns(h)
        if pivots is None:
            continue
        m = n // 2
        message_cols = np.setdiff1d(np.arange(n), pivots)
        perm = np.concatenate([message_cols, pivots])
        h_code = h[:, perm]
        b = h_code[:, m:]
        a = h_code[:, :m]
        encode_matrix = (_gf2_inverse(b) @ a) % 2
        row_cols = np.argsort(h_code, axis=1, kind="stable")[:, -ROW_WEIGHT:]
        row_cols = np.sort(row_cols, axis=1)
        col_rows = np.argsort(h_code.T, axis=1, kind="stable")[:, -COL_WEIGHT:]
        col_rows = np.sort(col_rows, axis=1)
        return LdpcCode(n=n, k=m, row_cols=row_cols.astype(np.int64),
                        col_rows=col_rows.astype(np.int64),
                        encode_matrix=encode_matrix.astype(np.uint8),
                        column_permutation=perm.astype(np.int64),
                        seed=seed, max_iterations=max_iterations)
    raise ConstructionFailed(
        f"no invertible parity block in {BUILD_ATTEMPTS} attempts from seed {seed}")


def parity_matrix(code: LdpcCode) -> np.ndarray:
    """Dense parity-check matrix in code (message-first) column order."""
    h = np.zeros((code.m, code.n), dtype=np.uint8)
    for i in range(code.m):
        h[i, code.row_cols[i]] = 1
    return h


def syndrome(code: LdpcCode, word: np.ndarray) -> np.ndarray:
    w = np.asarray(word, dtype=np.uint8)
    return np.bitwise_xor.reduce(w[code.row_cols], axis=1)


def ldpc_encode(code: LdpcCode, message: np.ndarray) -> Codeword:
    """Systematic codeword: the k message bits followed by n-k parity bits."""
    u = np.asarray(message, dtype=np.uint8).reshape(-1)
    if u.size != code.k:
        raise LengthMismatch(f"message has {u.size} bits, code expects {code.k}")
    parity = (code.encode_matrix @ u.astype(np.int64)) % 2
    return np.concatenate([u, parity.astype(np.uint8)])


def ldpc_decode(code: LdpcCode, word: np.ndarray,
                max_iterations: int | None = None) -> tuple[np.ndarray, bool, int]:
    """Bit-flipping decode: (message bits, converged, iterations used).

    Each iteration flips the bit participating in the most unsatisfied
    checks (ties to the lowest bit index). A zero syndrome stops; a valid
    codeword therefore converges in 0 iterations.
    """
    x = np.asarray(word, dtype=np.uint8).reshape(-1).copy()
    if x.size != code.n:
        raise LengthMismatch(f"stream has {x.size} bits, codeword length is {code.n}")
    limit = code.max_iterations if max_iterations is None else max_iterations
    for it in range(limit + 1):
        s = syndrome(code, x)
        if not s.any():
            return x[:code.k], True, it
        if it == limit:
            break
        unsat = s.astype(np.int64)[code.col_rows].sum(axis=1)
        x[int(np.argmax(unsat))] ^= 1
    return x[:code.k], False, limit


def export_alist(code: LdpcCode) -> str:
    """Standard alist text for the parity-check matrix (1-based indices)."""
    h_cols = [code.col_rows[j] + 1 for j in range(code.n)]
    h_rows = [code.row_cols[i] + 1 for i in range(code.m)]
    lines = [f"{code.n} {code.m}",
             f"{COL_WEIGHT} {ROW_WEIGHT}",
             " ".join([str(COL_WEIGHT)] * code.n),
             " ".join([str(ROW_WEIGHT)] * code.m)]
    lines += [" ".join(str(int(v)) for v in col) for col in h_cols]
    lines += [" ".join(str(int(v)) for v in row) for row in h_rows]
    return "\n".join(lines) + "\n"
