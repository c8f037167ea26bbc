# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Simulation kernel for the ant-based power-aware routing engine.

This module is written in Cython "pure Python" mode: it is importable and
fully functional under the plain interpreter, and compiles unchanged to a C
extension for a large speedup.  ``KERNEL_COMPILED`` tells which variant is
active.  Both variants produce bit-identical outputs because all arithmetic
is IEEE double precision, the random stream is an explicit splitmix64
generator, and every loop runs in the same order.

Data layout
-----------
The directed graph is stored CSR-style: links are sorted by tail node, so the
links leaving node ``i`` occupy the contiguous index range
``out_start[i]:out_start[i+1]``.  Per-flow state (neighbor preference vector,
cost statistics, current path, leave-penalty vector) is kept in dense 2-D
arrays indexed ``[flow, link]`` or ``[flow, node]``.

Random draw order (part of the reproducibility contract)
---------------------------------------------------------
* one draw per Fisher-Yates swap when reshuffling the per-round emission
  order,
* per forward hop: one draw for the explore coin, then exactly one draw for
  the next-hop selection (uniform and preference-weighted alike).
"""

import cython
import numpy as np

if cython.compiled:
    from cython.cimports.libc.math import exp, log10, sqrt  # type: ignore
else:
    from math import exp, log10, sqrt

KERNEL_COMPILED = cython.compiled

_MASK: cython.ulonglong = 0xFFFFFFFFFFFFFFFF
_GOLD: cython.ulonglong = 0x9E3779B97F4A7C15
_MIX1: cython.ulonglong = 0xBF58476D1CE4E5B9
_MIX2: cython.ulonglong = 0x94D049BB133111EB
_INF: cython.double = float("inf")

# Agent outcome codes.
OUT_ADOPTED = 0
OUT_KEPT = 1
OUT_REJECTED = 2
OUT_ABORTED = 3


@cython.cfunc
def _recal(
    raw: cython.double,
    mean: cython.double,
    sigma: cython.double,
    alpha: cython.double,
    a: cython.double,
    b: cython.double,
    epsilon: cython.double,
    h: cython.double,
) -> cython.double:
    if not (mean > 0.0):
        return 0.5
    r: cython.double = raw / (alpha * mean)
    if r >= 1.0:
        return 1.0
    if r < 0.0:
        r = 0.0
    w: cython.double = (1.0 - r) ** 5.0
    ratio: cython.double = sigma / mean
    if ratio > 0.0:
        w *= exp(-b * ratio)
    return 1.0 - w


def recalibrate_value(raw, mean, sigma, alpha, a, b, epsilon, h):
    """Map a raw path-cost sample onto the [0, 1] reinforcement scale.

    Lower output means stronger reinforcement.  The sample is normalized by
    ``alpha`` times the running mean and capped at 1, then corrected using
    the dispersion ``sigma``: while sigma/mean stays below ``epsilon`` the
    mean counts as reliable and the value is pushed away from 0.5, otherwise
    a penalty term applies.  A power law with exponent ``h`` compresses the
    result, clipped to [0, 1]; negative intermediate values clip to 0 before
    the power (fractional powers of negatives are undefined).  A zero mean
    signals "no usable history" and yields the neutral 0.5.
    """
    return _recal(raw, mean, sigma, alpha, a, b, epsilon, h)


def profile_value(a0: cython.double, coef, rho: cython.double):
    """Power drawn by one link at normalized load ``rho``.

    ``a0`` scales a log10(1 + rho) term; ``coef[i]`` multiplies ``rho**i``,
    so coef[0] is a constant floor and coef[3] a cubic term.  Negative
    ``rho`` from float cancellation clamps to zero.
    """
    c: cython.double[::1] = coef
    if rho < 0.0:
        rho = 0.0
    acc: cython.double = 0.0
    i: cython.Py_ssize_t
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * rho + c[i]
    if a0 != 0.0:
        acc += a0 * log10(1.0 + rho)
    return acc


def stats_update(mean, var, count, x, eta):
    """One exponentially-weighted mean/variance step; returns the new triple.

    The first sample initializes the mean exactly and the dispersion to the
    sample itself, so a freshly observed flow counts as unreliable until the
    estimates settle.
    """
    if count == 0:
        return float(x), 0.0, 1
    d = x - mean
    return mean + eta * d, (1.0 - eta) * (var + eta * d * d), count + 1


def goodness_update(vec, came: cython.Py_ssize_t, ra: cython.double):
    """In-place preference update; reinforces slot ``came`` by ``1 - ra``.

    The winner gains (1-ra)(1-g) while every other entry loses (1-ra)g,
    which preserves the vector sum.
    """
    g: cython.double[::1] = vec
    w: cython.double = 1.0 - ra
    i: cython.Py_ssize_t
    for i in range(g.shape[0]):
        if i == came:
            g[i] = g[i] + w * (1.0 - g[i])
        else:
            g[i] = g[i] - w * g[i]


@cython.cclass
class Engine:
    """One self-contained simulation instance (single flow set, single seed).

    Instances share nothing; any number may run concurrently.  All mutable
    state lives in the arrays below and stays confined to this object.
    """

    # graph
    n_nodes: cython.Py_ssize_t
    n_links: cython.Py_ssize_t
    out_start: cython.int[::1]
    lk_from: cython.int[::1]
    lk_to: cython.int[::1]
    lk_mu: cython.double[::1]
    lk_cap: cython.double[::1]
    lk_prof: cython.int[::1]
    prof_a0: cython.double[::1]
    prof_coef: cython.double[:, ::1]
    prof_deg: cython.int[::1]

    # flows
    n_flows: cython.Py_ssize_t
    fl_src: cython.int[::1]
    fl_dst: cython.int[::1]
    fl_rate: cython.double[::1]
    fl_active: cython.int[::1]
    boot_links: cython.int[:, ::1]
    boot_len: cython.int[::1]

    # mutable state
    loads: cython.double[::1]
    good: cython.double[:, ::1]
    st_mean: cython.double[:, ::1]
    st_var: cython.double[:, ::1]
    st_count: cython.int[:, ::1]
    path_buf: cython.int[:, ::1]
    path_len: cython.int[::1]
    in_path: cython.uchar[:, ::1]
    gamma: cython.double[:, ::1]
    is_active: cython.uchar[::1]

    # agent scratch
    vis_nodes: cython.int[::1]
    vis_pos: cython.int[::1]
    hop_cost: cython.double[::1]
    hop_link: cython.int[::1]
    bnh: cython.int[::1]
    cand: cython.int[::1]
    cand_mark: cython.uchar[::1]
    order: cython.int[::1]

    # parameters
    pi_e: cython.double
    alpha: cython.double
    eta: cython.double
    eps: cython.double
    ca: cython.double
    cb: cython.double
    ch: cython.double
    max_hops: cython.Py_ssize_t

    # rng + counters
    _s: cython.ulonglong
    it: cython.long
    n_adopted: cython.long
    n_rejected: cython.long
    n_aborted: cython.long

    def __init__(
        self,
        out_start,
        lk_from,
        lk_to,
        lk_mu,
        lk_cap,
        lk_prof,
        prof_a0,
        prof_coef,
        prof_deg,
        fl_src,
        fl_dst,
        fl_rate,
        fl_active,
        boot_links,
        boot_len,
        seed,
        pi_e=0.1,
        alpha=2.0,
        eta=0.1,
        epsilon=0.25,
        a=10.0,
        b=9.0,
        h=0.04,
        max_hops=0,
    ):
        self.out_start = out_start
        self.lk_from = lk_from
        self.lk_to = lk_to
        self.lk_mu = lk_mu
        self.lk_cap = lk_cap
        self.lk_prof = lk_prof
        self.prof_a0 = prof_a0
        self.prof_coef = prof_coef
        self.prof_deg = prof_deg
        self.fl_src = fl_src
        self.fl_dst = fl_dst
        self.fl_rate = fl_rate
        self.fl_active = fl_active
        self.boot_links = boot_links
        self.boot_len = boot_len

        self.n_nodes = out_start.shape[0] - 1
        self.n_links = lk_to.shape[0]
        self.n_flows = fl_src.shape[0]
        n = int(self.n_nodes)
        L = int(self.n_links)
        F = int(self.n_flows)

        self.loads = np.zeros(L, dtype=np.float64)
        g = np.zeros((F, L), dtype=np.float64)
        # every flow starts with a uniform preference over each node's links
        for i in range(n):
            s0, s1 = int(out_start[i]), int(out_start[i + 1])
            if s1 > s0:
                g[:, s0:s1] = 1.0 / (s1 - s0)
        self.good = g
        self.st_mean = np.zeros((F, n), dtype=np.float64)
        self.st_var = np.zeros((F, n), dtype=np.float64)
        self.st_count = np.zeros((F, n), dtype=np.int32)
        self.path_buf = np.zeros((F, n + 1), dtype=np.int32)
        self.path_len = np.zeros(F, dtype=np.int32)
        self.in_path = np.zeros((F, L), dtype=np.uint8)
        self.gamma = np.zeros((F, L), dtype=np.float64)
        self.is_active = np.zeros(F, dtype=np.uint8)

        self.vis_nodes = np.zeros(n + 2, dtype=np.int32)
        self.vis_pos = np.zeros(n, dtype=np.int32)
        self.hop_cost = np.zeros(n + 2, dtype=np.float64)
        self.hop_link = np.zeros(n + 2, dtype=np.int32)
        self.bnh = np.full(n, -1, dtype=np.int32)
        self.cand = np.zeros(n + 2, dtype=np.int32)
        self.cand_mark = np.zeros(n, dtype=np.uint8)
        self.order = np.zeros(max(F, 1), dtype=np.int32)

        self.pi_e = pi_e
        self.alpha = alpha
        self.eta = eta
        self.eps = epsilon
        self.ca = a
        self.cb = b
        self.ch = h
        self.max_hops = max_hops if max_hops > 0 else 4 * n + 16

        self._s = (int(seed) ^ 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        self.it = 0
        self.n_adopted = 0
        self.n_rejected = 0
        self.n_aborted = 0

    # ---------------------------------------------------------------- rng

    @cython.cfunc
    def _next64(self) -> cython.ulonglong:
        self._s = (self._s + _GOLD) & _MASK
        z: cython.ulonglong = self._s
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return (z ^ (z >> 31)) & _MASK

    @cython.cfunc
    def _uniform(self) -> cython.double:
        return (self._next64() >> 11) * (1.0 / 9007199254740992.0)

    @cython.cfunc
    def _rand_below(self, k: cython.ulonglong) -> cython.ulonglong:
        return ((self._next64() >> 32) * k) >> 32

    def random_uniform(self):
        """Draw from the engine stream (consumes one value)."""
        return self._uniform()

    # ------------------------------------------------------------- costs

    @cython.cfunc
    def _cost(self, link: cython.Py_ssize_t, rho: cython.double) -> cython.double:
        if rho < 0.0:
            rho = 0.0
        p: cython.Py_ssize_t = self.lk_prof[link]
        acc: cython.double = 0.0
        i: cython.Py_ssize_t
        for i in range(self.prof_deg[p] - 1, -1, -1):
            acc = acc * rho + self.prof_coef[p, i]
        a0: cython.double = self.prof_a0[p]
        if a0 != 0.0:
            acc += a0 * log10(1.0 + rho)
        return acc

    @cython.cfunc
    def _cap_ok(self, link: cython.Py_ssize_t, lam: cython.double) -> cython.bint:
        cap: cython.double = self.lk_cap[link]
        return lam <= cap * (1.0 + 1e-12) + 1e-9

    @cython.cfunc
    def _marginal(self, f: cython.Py_ssize_t, link: cython.Py_ssize_t) -> cython.double:
        lam: cython.double = self.loads[link]
        mu: cython.double = self.lk_mu[link]
        r: cython.double = self.fl_rate[f]
        if self.in_path[f, link]:
            if not self._cap_ok(link, lam):
                return _INF
            return self._cost(link, lam / mu) - self._cost(link, (lam - r) / mu)
        if not self._cap_ok(link, lam + r):
            return _INF
        return self._cost(link, (lam + r) / mu) - self._cost(link, lam / mu)

    @cython.cfunc
    def _join_benefit(self, f: cython.Py_ssize_t, link: cython.Py_ssize_t) -> cython.double:
        lam: cython.double = self.loads[link]
        mu: cython.double = self.lk_mu[link]
        r: cython.double = self.fl_rate[f]
        v: cython.double = (
            self._cost(link, lam / mu)
            + self._cost(link, r / mu)
            - self._cost(link, (lam + r) / mu)
        )
        if v > 0.0 and v != _INF:
            return v
        return 0.0

    @cython.cfunc
    def _leave_penalty(self, f: cython.Py_ssize_t, link: cython.Py_ssize_t) -> cython.double:
        lam: cython.double = self.loads[link]
        mu: cython.double = self.lk_mu[link]
        r: cython.double = self.fl_rate[f]
        v: cython.double = (
            self._cost(link, (lam - r) / mu)
            + self._cost(link, r / mu)
            - self._cost(link, lam / mu)
        )
        if v > 0.0 and v != _INF:
            return v
        return 0.0

    def marginal_cost(self, f, link):
        """Extra power flow ``f`` costs on ``link`` at current loads.

        A link already on the flow's path is charged its current share (cost
        now minus cost without the flow); any other link is charged the
        increase the flow would cause.  Overload yields infinity.
        """
        return self._marginal(f, link)

    def leave_penalty(self, f, link):
        """Cost other flows pick up if ``f`` left ``link``, clipped at 0."""
        return self._leave_penalty(f, link)

    def network_power(self):
        """Total power at current loads; infinite if any link is overloaded."""
        total: cython.double = 0.0
        link: cython.Py_ssize_t
        for link in range(self.n_links):
            lam: cython.double = self.loads[link]
            if not self._cap_ok(link, lam):
                return _INF
            total += self._cost(link, lam / self.lk_mu[link])
        return total

    # ----------------------------------------------------------- plumbing

    @cython.cfunc
    def _resync_loads(self) -> None:
        # canonical recomputation from the adopted paths; keeps float drift
        # from accumulating across millions of incremental updates
        link: cython.Py_ssize_t
        f: cython.Py_ssize_t
        j: cython.Py_ssize_t
        for link in range(self.n_links):
            self.loads[link] = 0.0
        for f in range(self.n_flows):
            if not self.is_active[f]:
                continue
            for j in range(self.path_len[f]):
                self.loads[self.path_buf[f, j]] += self.fl_rate[f]

    @cython.cfunc
    def _refresh_gamma(self, f: cython.Py_ssize_t) -> None:
        j: cython.Py_ssize_t
        for j in range(self.path_len[f]):
            link: cython.Py_ssize_t = self.path_buf[f, j]
            self.gamma[f, link] = self._leave_penalty(f, link)

    @cython.cfunc
    def _seed_stats(self, f: cython.Py_ssize_t) -> None:
        # initialize the flow's cost statistics along its installed route
        # with the downstream marginal-cost sums the route currently implies
        acc: cython.double = 0.0
        j: cython.Py_ssize_t
        for j in range(self.path_len[f] - 1, -1, -1):
            link: cython.Py_ssize_t = self.path_buf[f, j]
            node: cython.Py_ssize_t = self.lk_from[link]
            acc += self._marginal(f, link)
            if self.st_count[f, node] == 0:
                self.st_mean[f, node] = acc
                self.st_var[f, node] = 0.0
                self.st_count[f, node] = 1

    def install_path(self, f, links):
        """Force flow ``f`` onto the given link sequence.  Clears the old
        path, applies loads, and recomputes the flow's leave penalties.
        Adjacency of the sequence is the caller's responsibility."""
        fi: cython.Py_ssize_t = f
        j: cython.Py_ssize_t
        for j in range(self.path_len[fi]):
            old: cython.Py_ssize_t = self.path_buf[fi, j]
            self.in_path[fi, old] = 0
            self.gamma[fi, old] = 0.0
            if self.is_active[fi]:
                self.loads[old] -= self.fl_rate[fi]
        m: cython.Py_ssize_t = len(links)
        for j in range(m):
            link: cython.Py_ssize_t = links[j]
            self.path_buf[fi, j] = link
            self.in_path[fi, link] = 1
            self.loads[link] += self.fl_rate[fi]
        self.path_len[fi] = m
        self.is_active[fi] = 1
        self._refresh_gamma(fi)
        self._seed_stats(fi)

    @cython.cfunc
    def _activate_due(self) -> None:
        # activation indices are normalized to >= 0 by the caller layer, so
        # a flow joins exactly when the round counter reaches its mark
        f: cython.Py_ssize_t
        j: cython.Py_ssize_t
        changed: cython.bint = False
        for f in range(self.n_flows):
            if self.is_active[f] or self.fl_active[f] > self.it:
                continue
            for j in range(self.boot_len[f]):
                link: cython.Py_ssize_t = self.boot_links[f, j]
                self.path_buf[f, j] = link
                self.in_path[f, link] = 1
                self.loads[link] += self.fl_rate[f]
            self.path_len[f] = self.boot_len[f]
            self.is_active[f] = 1
            changed = True
        if changed:
            # penalties are seeded against the loads after the whole batch
            # joined, so simultaneous arrivals see each other
            for f in range(self.n_flows):
                if self.is_active[f] and self.fl_active[f] == self.it:
                    self._refresh_gamma(f)
            for f in range(self.n_flows):
                if self.is_active[f] and self.fl_active[f] == self.it:
                    self._seed_stats(f)

    # -------------------------------------------------------- forward walk

    @cython.cfunc
    def _select_link(self, f: cython.Py_ssize_t, node: cython.Py_ssize_t) -> cython.Py_ssize_t:
        s0: cython.Py_ssize_t = self.out_start[node]
        s1: cython.Py_ssize_t = self.out_start[node + 1]
        deg: cython.Py_ssize_t = s1 - s0
        if deg <= 0:
            return -1
        coin: cython.double = self._uniform()
        u: cython.double = self._uniform()
        k: cython.Py_ssize_t
        if coin < self.pi_e:
            k = int(u * deg)
            if k >= deg:
                k = deg - 1
            return s0 + k
        total: cython.double = 0.0
        for k in range(s0, s1):
            total += self.good[f, k]
        if total <= 0.0:
            k = int(u * deg)
            if k >= deg:
                k = deg - 1
            return s0 + k
        target: cython.double = u * total
        acc: cython.double = 0.0
        for k in range(s0, s1):
            acc += self.good[f, k]
            if target < acc:
                return k
        return s1 - 1

    def choose_next(self, f, node):
        """Next-hop selection exposed for distribution tests; returns the
        chosen link index and consumes the same draws as a live agent."""
        return self._select_link(f, node)

    @cython.cfunc
    def _forward(self, f: cython.Py_ssize_t) -> cython.Py_ssize_t:
        """Walk one exploratory agent toward the destination.

        Returns the number of route nodes recorded in ``vis_nodes``
        (destination included), or -1 if the agent aborted (dead end,
        infeasible hop, hop budget).  Revisiting a node erases the loop:
        every node and hop record since the previous visit is dropped.
        """
        src: cython.Py_ssize_t = self.fl_src[f]
        dst: cython.Py_ssize_t = self.fl_dst[f]
        vlen: cython.Py_ssize_t = 1
        self.vis_nodes[0] = src
        self.vis_pos[src] = 1
        cur: cython.Py_ssize_t = src
        steps: cython.Py_ssize_t = 0
        ok: cython.bint = True
        k: cython.Py_ssize_t
        while cur != dst:
            steps += 1
            if steps > self.max_hops:
                ok = False
                break
            link: cython.Py_ssize_t = self._select_link(f, cur)
            if link < 0:
                ok = False
                break
            mc: cython.double = self._marginal(f, link)
            if mc == _INF:
                ok = False
                break
            nxt: cython.Py_ssize_t = self.lk_to[link]
            if self.vis_pos[nxt] > 0:
                p: cython.Py_ssize_t = self.vis_pos[nxt] - 1
                for k in range(p + 1, vlen):
                    self.vis_pos[self.vis_nodes[k]] = 0
                vlen = p + 1
            else:
                self.hop_link[vlen - 1] = link
                self.hop_cost[vlen - 1] = mc
                self.vis_nodes[vlen] = nxt
                self.vis_pos[nxt] = vlen + 1
                vlen += 1
            cur = nxt
        for k in range(vlen):
            self.vis_pos[self.vis_nodes[k]] = 0
        if not ok:
            return -1
        return vlen

    # ------------------------------------------------------- backward pass

    @cython.cfunc
    def _backward(self, f: cython.Py_ssize_t, vlen: cython.Py_ssize_t) -> cython.double:
        """Retrace the recorded route from destination to source, updating
        statistics, preferences and best-next-hop records, and refreshing
        leave penalties of traversed current-path links.

        Returns the indirect-cost residual at the source; a value below
        -1e-9 signals a penalty bookkeeping bug and is raised by the caller.
        """
        cind: cython.double = 0.0
        j: cython.Py_ssize_t
        for j in range(self.path_len[f]):
            cind += self.gamma[f, self.path_buf[f, j]]
        cdir: cython.double = 0.0
        k: cython.Py_ssize_t
        for k in range(vlen - 2, -1, -1):
            node: cython.Py_ssize_t = self.vis_nodes[k]
            link: cython.Py_ssize_t = self.hop_link[k]
            onpath: cython.bint = self.in_path[f, link] != 0
            if onpath:
                cind -= self.gamma[f, link]
                if cind < 0.0:
                    if cind < -1e-9:
                        return cind
                    cind = 0.0
            cdir += self.hop_cost[k]
            raw: cython.double = cdir + cind

            mean: cython.double = self.st_mean[f, node]
            var: cython.double = self.st_var[f, node]
            fresh: cython.bint = self.st_count[f, node] == 0
            if fresh:
                mean = raw
                var = 0.0
            else:
                d: cython.double = raw - mean
                mean += self.eta * d
                ad: cython.double = d if d >= 0.0 else -d
                var = var + self.eta * (ad - var)
            self.st_mean[f, node] = mean
            self.st_var[f, node] = var
            self.st_count[f, node] += 1

            # a first sample at a fresh node imprints decisively: there is no
            # incumbent preference there to protect
            ra: cython.double
            if fresh:
                ra = 0.5
            else:
                ra = _recal(
                    raw, mean, var, self.alpha, self.ca, self.cb, self.eps, self.ch
                )

            s0: cython.Py_ssize_t = self.out_start[node]
            s1: cython.Py_ssize_t = self.out_start[node + 1]
            w: cython.double = 1.0 - ra
            best: cython.Py_ssize_t = s0
            bestg: cython.double = -1.0
            t: cython.Py_ssize_t
            for t in range(s0, s1):
                g: cython.double = self.good[f, t]
                if t == link:
                    g = g + w * (1.0 - g)
                else:
                    g = g - w * g
                self.good[f, t] = g
                if g > bestg:
                    bestg = g
                    best = t
            self.bnh[node] = best

            if onpath:
                self.gamma[f, link] = self._leave_penalty(f, link)
        return 0.0

    # ----------------------------------------------------------- adoption

    @cython.cfunc
    def _try_adopt(self, f: cython.Py_ssize_t, vlen: cython.Py_ssize_t) -> cython.int:
        """Chain the recorded best next hops from the source; swap the flow
        onto the result when it reaches the destination loop-free and
        capacity-feasible.  Returns an OUT_* code."""
        src: cython.Py_ssize_t = self.fl_src[f]
        dst: cython.Py_ssize_t = self.fl_dst[f]
        rate: cython.double = self.fl_rate[f]
        cur: cython.Py_ssize_t = src
        clen: cython.Py_ssize_t = 0
        good_chain: cython.bint = True
        k: cython.Py_ssize_t
        while cur != dst:
            if clen > self.n_nodes or self.cand_mark[cur]:
                good_chain = False
                break
            link: cython.Py_ssize_t = self.bnh[cur]
            if link < 0:
                good_chain = False
                break
            self.cand_mark[cur] = 1
            self.cand[clen] = link
            clen += 1
            cur = self.lk_to[link]
        for k in range(clen):
            self.cand_mark[self.lk_from[self.cand[k]]] = 0
        for k in range(vlen - 1):
            self.bnh[self.vis_nodes[k]] = -1
        if not good_chain:
            return 2  # OUT_REJECTED

        same: cython.bint = clen == self.path_len[f]
        if same:
            for k in range(clen):
                if self.cand[k] != self.path_buf[f, k]:
                    same = False
                    break
        if same:
            return 1  # OUT_KEPT

        # the origin sanity-checks the candidate against the incumbent by
        # marginal cost net of the shared-link externality (what staying on
        # a link spares, or joining one saves, the flows already there);
        # with additive or super-additive profiles both corrections vanish
        # and this is an exact no-worse test.  An infeasible hop costs inf.
        est_new: cython.double = 0.0
        for k in range(clen):
            cl: cython.Py_ssize_t = self.cand[k]
            mc: cython.double = self._marginal(f, cl)
            if mc == _INF:
                return 2  # OUT_REJECTED
            if self.in_path[f, cl]:
                est_new += mc - self._leave_penalty(f, cl)
            else:
                est_new += mc - self._join_benefit(f, cl)
        est_cur: cython.double = 0.0
        for k in range(self.path_len[f]):
            ol: cython.Py_ssize_t = self.path_buf[f, k]
            est_cur += self._marginal(f, ol) - self._leave_penalty(f, ol)
        if est_new > est_cur * (1.0 + 1e-9) + 1e-12:
            return 2  # OUT_REJECTED

        for k in range(self.path_len[f]):
            old: cython.Py_ssize_t = self.path_buf[f, k]
            self.loads[old] -= rate
            self.in_path[f, old] = 0
            self.gamma[f, old] = 0.0
        for k in range(clen):
            newl: cython.Py_ssize_t = self.cand[k]
            self.path_buf[f, k] = newl
            self.loads[newl] += rate
            self.in_path[f, newl] = 1
        self.path_len[f] = clen
        self._refresh_gamma(f)
        return 0  # OUT_ADOPTED

    # ------------------------------------------------------------ driving

    @cython.cfunc
    def _process_agent(self, f: cython.Py_ssize_t) -> cython.int:
        vlen: cython.Py_ssize_t = self._forward(f)
        if vlen < 0:
            self.n_aborted += 1
            return 3  # OUT_ABORTED
        resid: cython.double = self._backward(f, vlen)
        if resid < 0.0:
            raise RuntimeError(
                "negative indirect cost %r for flow %d: leave-penalty "
                "bookkeeping is inconsistent" % (resid, f)
            )
        out: cython.int = self._try_adopt(f, vlen)
        if out == 0:
            self.n_adopted += 1
        elif out == 2:
            self.n_rejected += 1
        return out

    def run_agent(self, f, collect=False):
        """Process one complete agent for flow ``f``.

        Returns the OUT_* outcome code, or a diagnostics dict (forward
        route, per-hop costs, outcome, resulting path) when ``collect``.
        """
        if not collect:
            return int(self._process_agent(f))
        fi: cython.Py_ssize_t = f
        vlen: cython.Py_ssize_t = self._forward(fi)
        if vlen < 0:
            self.n_aborted += 1
            trace = {"route": None, "hop_links": None, "hop_costs": None, "outcome": 3}
        else:
            trace = {
                "route": [int(self.vis_nodes[k]) for k in range(vlen)],
                "hop_links": [int(self.hop_link[k]) for k in range(vlen - 1)],
                "hop_costs": [float(self.hop_cost[k]) for k in range(vlen - 1)],
            }
            resid = self._backward(fi, vlen)
            if resid < 0.0:
                raise RuntimeError(
                    "negative indirect cost %r for flow %d: leave-penalty "
                    "bookkeeping is inconsistent" % (resid, f)
                )
            out = self._try_adopt(fi, vlen)
            if out == 0:
                self.n_adopted += 1
            elif out == 2:
                self.n_rejected += 1
            trace["outcome"] = int(out)
        trace["path"] = [int(self.path_buf[fi, k]) for k in range(self.path_len[fi])]
        return trace

    def run(self, n_iter):
        """Run ``n_iter`` rounds; each round every active flow emits one
        agent, in an order reshuffled from the engine stream.  Returns
        per-round arrays: power, mean path length, adoptions, rejections,
        aborts."""
        ni: cython.long = n_iter
        power = np.zeros(ni, dtype=np.float64)
        avg_len = np.zeros(ni, dtype=np.float64)
        adopted = np.zeros(ni, dtype=np.int64)
        rejected = np.zeros(ni, dtype=np.int64)
        aborted = np.zeros(ni, dtype=np.int64)
        power_v: cython.double[::1] = power
        avg_v: cython.double[::1] = avg_len
        ad_v: cython.longlong[::1] = adopted
        rj_v: cython.longlong[::1] = rejected
        ab_v: cython.longlong[::1] = aborted

        step: cython.long
        f: cython.Py_ssize_t
        i: cython.Py_ssize_t
        j: cython.Py_ssize_t
        for step in range(ni):
            self._activate_due()
            nact: cython.Py_ssize_t = 0
            for f in range(self.n_flows):
                if self.is_active[f]:
                    self.order[nact] = f
                    nact += 1
            for i in range(nact - 1, 0, -1):
                j = self._rand_below(i + 1)
                tmp: cython.int = self.order[i]
                self.order[i] = self.order[j]
                self.order[j] = tmp

            a0: cython.long = self.n_adopted
            r0: cython.long = self.n_rejected
            b0: cython.long = self.n_aborted
            for i in range(nact):
                self._process_agent(self.order[i])

            self._resync_loads()
            power_v[step] = self.network_power()
            tot_len: cython.double = 0.0
            for i in range(nact):
                tot_len += self.path_len[self.order[i]]
            avg_v[step] = tot_len / nact if nact > 0 else 0.0
            ad_v[step] = self.n_adopted - a0
            rj_v[step] = self.n_rejected - r0
            ab_v[step] = self.n_aborted - b0
            self.it += 1

        return {
            "power": power,
            "avg_path_len": avg_len,
            "adoptions": adopted,
            "rejections": rejected,
            "aborted": aborted,
        }

    # ---------------------------------------------------------- inspection

    def loads_copy(self):
        return np.asarray(self.loads).copy()

    def loads_from_scratch(self):
        """Independent recomputation of loads from the adopted paths."""
        out = np.zeros(self.n_links, dtype=np.float64)
        f: cython.Py_ssize_t
        j: cython.Py_ssize_t
        for f in range(self.n_flows):
            if self.is_active[f]:
                for j in range(self.path_len[f]):
                    out[self.path_buf[f, j]] += self.fl_rate[f]
        return out

    def goodness_row(self, f, node):
        s0 = self.out_start[node]
        s1 = self.out_start[node + 1]
        return np.asarray(self.good[f, s0:s1]).copy()

    def set_goodness_row(self, f, node, values):
        s0 = int(self.out_start[node])
        for k in range(len(values)):
            self.good[f, s0 + k] = values[k]

    def goodness_full(self, f):
        return np.asarray(self.good[f]).copy()

    def stats(self, f, node):
        return (
            float(self.st_mean[f, node]),
            float(self.st_var[f, node]),
            int(self.st_count[f, node]),
        )

    def path_of(self, f):
        return np.asarray(self.path_buf[f, : self.path_len[f]]).copy()

    def gamma_of(self, f):
        return np.asarray(self.gamma[f]).copy()

    def flow_active(self, f):
        return bool(self.is_active[f])

    def counters(self):
        return {
            "iteration": int(self.it),
            "adoptions": int(self.n_adopted),
            "rejections": int(self.n_rejected),
            "aborted": int(self.n_aborted),
        }
