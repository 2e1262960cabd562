"""Evaluation of words and brackets at a representation point.

Everything lives in the total space C^(m n + 1): block v of size n for each
cycle vertex v and a final 1-dimensional block for the framing vertex.  A
letter evaluates to the total matrix supported on its (tail, head) block, so
a word evaluates to a plain left-to-right matrix product and incomposable
products vanish automatically.

Bracket values between trace functions are computed two ways:

* the word route: Leibniz expansion of the double bracket over letter pairs,
  each tensor term contributing tr(prefix2 . L . suffix1 . prefix1 . R . suffix2);
* the gradient route: matrix gradients of the two functions with respect to
  the base generators contracted against the generator-pair table, which is
  the induced antisymmetric biderivation on the representation space.

The two agree (tested); the gradient route is what makes large Hamiltonian
families affordable.
"""

from __future__ import annotations

import numpy as np

from .brackets import generator_bracket, phi_word_terms, trace_bracket_symbolic
from .errors import SingularFactor
from .params import ParameterSet
from .points import RepPoint
from .words import WordSum, letter_tail_head

_INVERSE_OF = {"xi": "x", "yi": "y", "zi": "z"}


def _as_wordsum(w) -> WordSum:
    if isinstance(w, WordSum):
        return w
    return WordSum(((1.0, tuple(w)),))


class PointEngine:
    """Caches letter evaluations and evaluated bracket-table terms for one point."""

    def __init__(self, point: RepPoint, params: ParameterSet | None = None):
        self.point = point
        self.spec = point.spec
        self.params = params
        self.m, self.n, self.d = self.spec.m, self.spec.n, self.spec.d
        self.N = self.spec.total_dim
        self._letter_cache: dict = {}
        self._pair_cache: dict = {}

    # -- blocks ---------------------------------------------------------

    def block(self, v: int) -> slice:
        if v == self.m:
            return slice(self.m * self.n, self.m * self.n + 1)
        return slice(v * self.n, (v + 1) * self.n)

    def embed(self, mat: np.ndarray, tail: int, head: int) -> np.ndarray:
        out = np.zeros((self.N, self.N), dtype=complex)
        out[self.block(tail), self.block(head)] = mat
        return out

    def block_of(self, total: np.ndarray, tail: int, head: int) -> np.ndarray:
        return total[self.block(tail), self.block(head)]

    # -- letter / word evaluation ----------------------------------------

    def eval_letter(self, letter) -> np.ndarray:
        cached = self._letter_cache.get(letter)
        if cached is not None:
            return cached
        kind = letter[0]
        m, p = self.m, self.point
        if kind == "x":
            s = letter[1] % m
            out = self.embed(p.X[s], s, (s + 1) % m)
        elif kind == "y":
            s = letter[1] % m
            out = self.embed(p.Y[s], (s + 1) % m, s)
        elif kind == "z":
            s = letter[1] % m
            out = self.embed(p.require_Z()[s], (s + 1) % m, s)
        elif kind in _INVERSE_OF:
            s = letter[1] % m
            sp = (s + 1) % m
            if kind == "xi":
                base, tail, head = p.X[s], sp, s
            elif kind == "yi":
                base, tail, head = p.Y[s], s, sp
            else:
                base, tail, head = p.require_Z()[s], s, sp
            try:
                out = self.embed(np.linalg.inv(base), tail, head)
            except np.linalg.LinAlgError as exc:
                raise SingularFactor(f"letter {letter} has no inverse") from exc
        elif kind == "v":
            out = self.embed(p.V[letter[1] - 1], m, 0)
        elif kind == "w":
            out = self.embed(p.W[letter[1] - 1], 0, m)
        elif kind == "e":
            v = letter[1]
            size = 1 if v == m else self.n
            out = self.embed(np.eye(size), v, v)
        elif kind == "uinv":
            v = letter[1]
            size = 1 if v == m else self.n
            inner = self.eval_word(letter[2])
            blockmat = np.eye(size) + self.block_of(inner, v, v)
            try:
                out = self.embed(np.linalg.inv(blockmat), v, v)
            except np.linalg.LinAlgError as exc:
                raise SingularFactor(f"unit-plus-word letter at vertex {v} singular") from exc
        else:
            raise ValueError(f"unknown letter {letter!r}")
        self._letter_cache[letter] = out
        return out

    def eval_word(self, word) -> np.ndarray:
        out = np.eye(self.N, dtype=complex)
        for letter in word:
            out = out @ self.eval_letter(letter)
        return out

    def eval_wordsum(self, ws) -> np.ndarray:
        total = np.zeros((self.N, self.N), dtype=complex)
        for c, w in _as_wordsum(ws):
            total += c * self.eval_word(w)
        return total

    def trace_word(self, word) -> complex:
        return complex(np.trace(self.eval_word(word)))

    def trace_wordsum(self, ws) -> complex:
        return complex(np.trace(self.eval_wordsum(ws)))

    def _prefix_suffix(self, word):
        evals = [self.eval_letter(l) for l in word]
        pre = [np.eye(self.N, dtype=complex)]
        for mat in evals:
            pre.append(pre[-1] @ mat)
        suf = [np.eye(self.N, dtype=complex)]
        for mat in reversed(evals):
            suf.append(mat @ suf[-1])
        suf.reverse()
        # pre[i] = product of letters < i, suf[i+1] = product of letters > i
        return evals, pre, suf

    # -- bracket values: word route ---------------------------------------

    def _trace_bracket_words(self, w1, w2) -> complex:
        w1, w2 = tuple(w1), tuple(w2)
        _, pre1, suf1 = self._prefix_suffix(w1)
        _, pre2, suf2 = self._prefix_suffix(w2)
        total = 0.0 + 0.0j
        for i, a in enumerate(w1):
            mid1 = suf1[i + 1] @ pre1[i]
            for j, b in enumerate(w2):
                terms = generator_bracket(self.m, a, b)
                if not terms:
                    continue
                for c, left, right in terms:
                    lmat = pre2[j] @ self.eval_word(left) @ mid1
                    rmat = self.eval_word(right) @ suf2[j + 1]
                    total += c * np.trace(lmat @ rmat)
        return complex(total)

    def trace_bracket_value(self, w1, w2) -> complex:
        """{tr w1, tr w2} for closed words or word sums."""
        ws1, ws2 = _as_wordsum(w1), _as_wordsum(w2)
        total = 0.0 + 0.0j
        for c1, a in ws1:
            for c2, b in ws2:
                total += c1 * c2 * self._trace_bracket_words(a, b)
        return complex(total)

    def loday_matrix(self, w1, w2) -> np.ndarray:
        """Total matrix of the Loday bracket {w1, w2} for word sums."""
        out = np.zeros((self.N, self.N), dtype=complex)
        for c1, a in _as_wordsum(w1):
            _, pre1, suf1 = self._prefix_suffix(a)
            for c2, b in _as_wordsum(w2):
                _, pre2, suf2 = self._prefix_suffix(b)
                for i, ai in enumerate(a):
                    mid1 = suf1[i + 1] @ pre1[i]
                    for j, bj in enumerate(b):
                        for c, left, right in generator_bracket(self.m, ai, bj):
                            out += (c1 * c2 * c) * (
                                pre2[j] @ self.eval_word(left) @ mid1
                                @ self.eval_word(right) @ suf2[j + 1])
        return out

    def bracket_trace_matrix(self, w, g) -> np.ndarray:
        """Total matrix of the Loday bracket {w, g}, g a letter or a word."""
        if isinstance(g, tuple) and g and isinstance(g[0], str):
            g = (g,)
        return self.loday_matrix(w, g)

    # -- bracket values: gradient route ------------------------------------

    def _mask_to_block(self, mat, letter) -> np.ndarray:
        t, h = letter_tail_head(letter, self.m)
        out = np.zeros((self.N, self.N), dtype=complex)
        out[self.block(t), self.block(h)] = mat[self.block(t), self.block(h)]
        return out

    def _accumulate_letter_grad(self, letter, Q, grads) -> None:
        kind = letter[0]
        if kind == "e":
            return
        if kind in ("x", "y", "v", "w"):
            key = letter
            grads[key] = grads.get(key, 0.0) + Q
            return
        if kind == "z":
            s = letter[1]
            self._accumulate_letter_grad(("y", s), Q, grads)
            xi = self.eval_letter(("xi", s))
            self._accumulate_letter_grad(("x", s), -(xi @ Q @ xi), grads)
            return
        if kind in _INVERSE_OF:
            inv = self.eval_letter(letter)
            self._accumulate_letter_grad((_INVERSE_OF[kind], letter[1]),
                                         -(inv @ Q @ inv), grads)
            return
        if kind == "uinv":
            u = self.eval_letter(letter)
            q_inner = -(u @ Q @ u)
            inner = letter[2]
            _, pre, suf = self._prefix_suffix(inner)
            for i, l in enumerate(inner):
                self._accumulate_letter_grad(l, suf[i + 1] @ q_inner @ pre[i], grads)
            return
        raise ValueError(f"unknown letter {letter!r}")

    def grad_trace_wordsum(self, ws) -> dict:
        """Gradients D[g][i, j] = d tr(ws) / d g_ij over the base generators."""
        accQ: dict = {}
        for cw, word in _as_wordsum(ws):
            _, pre, suf = self._prefix_suffix(word)
            for i, l in enumerate(word):
                self._accumulate_letter_grad(l, cw * (suf[i + 1] @ pre[i]), accQ)
        return {g: self._mask_to_block(np.transpose(Q), g) for g, Q in accQ.items()}

    def _pair_terms_eval(self, g1, g2):
        key = (g1, g2)
        cached = self._pair_cache.get(key)
        if cached is None:
            cached = tuple(
                (c, self.eval_word(left).T.copy(), self.eval_word(right).T.copy())
                for c, left, right in generator_bracket(self.m, g1, g2)
            )
            self._pair_cache[key] = cached
        return cached

    def bracket_gradients(self, gradF: dict, gradG: dict,
                          with_mass: bool = False):
        """Contract two gradient dictionaries against the generator table.

        {F, G} = sum over generator pairs and tensor terms of
        coeff * tr(D_F[a] . L^T . D_G[b] . R^T).

        With with_mass=True also returns the pre-cancellation term mass
        (sum of absolute term values), the natural scale for involutivity
        residuals.
        """
        total = 0.0 + 0.0j
        mass = 0.0
        for a, Da in gradF.items():
            for b, Db in gradG.items():
                for c, lT, rT in self._pair_terms_eval(a, b):
                    term = c * np.trace(Da @ lT @ Db @ rT)
                    total += term
                    mass += abs(term)
        if with_mass:
            return complex(total), float(mass)
        return complex(total)

    def trace_bracket_grad(self, ws1, ws2) -> complex:
        """{tr ws1, tr ws2} via the gradient route."""
        return self.bracket_gradients(self.grad_trace_wordsum(ws1),
                                      self.grad_trace_wordsum(ws2))

    # -- structural checks --------------------------------------------------

    def moment_word_sum(self, s) -> WordSum:
        return WordSum(tuple((c, w) for c, w in phi_word_terms(self.m, self.d, s)))

    def moment_property_residual(self, s, g) -> float:
        """Max-norm gap between {{Phi_s, g}} and its multiplicative-moment form.

        Both sides are compared as the 4-index arrays induced on the total
        space, entry [u, j, i, v] = sum of coeff * left[u, j] * right[i, v].
        """
        if s == "inf":
            s = self.m
        N = self.N
        lhs = np.zeros((N, N, N, N), dtype=complex)
        for cw, word in self.moment_word_sum(s):
            _, pre, suf = self._prefix_suffix(word)
            for i, a in enumerate(word):
                for c, left, right in generator_bracket(self.m, a, g):
                    lfull = self.eval_word(left) @ suf[i + 1]
                    rfull = pre[i] @ self.eval_word(right)
                    lhs += (cw * c) * np.multiply.outer(lfull, rfull)
        phi = self.eval_wordsum(self.moment_word_sum(s))
        E = self.eval_letter(("e", s))
        G = self.eval_letter(g)
        rhs = 0.5 * (np.multiply.outer(G @ E, phi)
                     - np.multiply.outer(E, phi @ G)
                     + np.multiply.outer(G @ phi, E)
                     - np.multiply.outer(phi, E @ G))
        return float(np.max(np.abs(lhs - rhs)))

    def jacobiator(self, w1, w2, w3) -> complex:
        """{tr w1, {tr w2, tr w3}} + cyclic, via one symbolic nesting level."""
        total = 0.0 + 0.0j
        for a, b, c in ((w1, w2, w3), (w2, w3, w1), (w3, w1, w2)):
            inner = _nested_symbolic(self.m, b, c)
            if len(inner):
                total += self.trace_bracket_value(a, inner)
        return complex(total)


def _nested_symbolic(m, b, c) -> WordSum:
    out = WordSum()
    for cb, wb in _as_wordsum(b):
        for cc, wc in _as_wordsum(c):
            out = out + trace_bracket_symbolic(m, wb, wc).scaled(cb * cc)
    return out
