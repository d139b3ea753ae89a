"""Numba kernels for the hot paths: ray walks, coverage updates, lidar
simulation, and the tree-search inner loop.

Everything here is deterministic. Randomness comes from an explicit
splitmix64 state threaded through the search kernel.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

# direction order N, NE, E, SE, S, SW, W, NW (must match world_model)
DIR_DX = np.array([0, 1, 1, 1, 0, -1, -1, -1], np.int64)
DIR_DY = np.array([-1, -1, 0, 1, 1, 1, 0, -1], np.int64)
DIR_LEN = np.array([1.0, math.sqrt(2.0), 1.0, math.sqrt(2.0),
                    1.0, math.sqrt(2.0), 1.0, math.sqrt(2.0)], np.float64)

FREE, UNKNOWN, OCCUPIED = 0, 1, 2

_U64 = np.uint64


# ---------------------------------------------------------------------------
# ray table: cells crossed by rays from a cell center, in traversal order
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def ray_table(n_rays: int, max_cells: int):
    """Grid traversal of ``n_rays`` evenly spaced rays from the center of
    cell (0, 0), out to ``max_cells`` cells. Returns flattened per-ray cell
    offsets plus the ray parameter at which each cell is entered (cell
    units). The walk visits every cell the ray passes through."""
    starts = np.zeros(n_rays + 1, np.int64)
    dxs, dys, t_ent = [], [], []
    for k in range(n_rays):
        theta = 2.0 * math.pi * k / n_rays
        for dx, dy, t in _walk_ray(math.cos(theta), math.sin(theta), max_cells):
            dxs.append(dx)
            dys.append(dy)
            t_ent.append(t)
        starts[k + 1] = len(dxs)
    return (starts, np.array(dxs, np.int64), np.array(dys, np.int64),
            np.array(t_ent, np.float64))


def _walk_ray(ux: float, uy: float, max_cells: int):
    """Amanatides-Woo traversal from (0, 0); cell (i, j) spans
    [i-1/2, i+1/2] x [j-1/2, j+1/2]."""
    x, y = 0, 0
    step_x = 1 if ux > 0 else -1
    step_y = 1 if uy > 0 else -1
    t_max_x = (0.5 / abs(ux)) if ux != 0 else math.inf
    t_max_y = (0.5 / abs(uy)) if uy != 0 else math.inf
    t_dx = (1.0 / abs(ux)) if ux != 0 else math.inf
    t_dy = (1.0 / abs(uy)) if uy != 0 else math.inf
    t = 0.0
    out = [(0, 0, 0.0)]
    while max(abs(x), abs(y)) < max_cells:
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_dx
            x += step_x
        else:
            t = t_max_y
            t_max_y += t_dy
            y += step_y
        out.append((x, y, t))
    return out


# ---------------------------------------------------------------------------
# coverage update (ray-traced sensor model)
# ---------------------------------------------------------------------------

@njit(cache=True)
def coverage_update_kernel(cov, risk, cx, cy, cell_w, r0, k, r_max, rho_block,
                           ray_starts, ray_dx, ray_dy):
    h, w = cov.shape
    n_rays = ray_starts.shape[0] - 1
    for ray in range(n_rays):
        for i in range(ray_starts[ray], ray_starts[ray + 1]):
            x = cx + ray_dx[i]
            y = cy + ray_dy[i]
            if x < 0 or x >= w or y < 0 or y >= h:
                break
            r = math.hypot(ray_dx[i] * cell_w, ray_dy[i] * cell_w)
            if risk[y, x] * 0.5 < rho_block and r < r_max:
                p = 1.0 / (1.0 + math.exp(k * (r - r0)))
                if p > cov[y, x]:
                    cov[y, x] = p
            else:
                break
    return cov


# ---------------------------------------------------------------------------
# simulated range finder on the ground-truth grid
# ---------------------------------------------------------------------------

@njit(cache=True)
def scan_kernel(occ, ox, oy, cell_w, n_rays, max_range):
    """First-hit distance per ray from world point (ox, oy). The grid's
    cell (0, 0) spans [0, cell_w) in both axes."""
    h, w = occ.shape
    dists = np.empty(n_rays)
    for ray in range(n_rays):
        theta = 2.0 * math.pi * ray / n_rays
        ux = math.cos(theta)
        uy = math.sin(theta)
        dists[ray] = _cast_ray(occ, ox / cell_w, oy / cell_w, ux, uy,
                               max_range / cell_w, h, w) * cell_w
    return dists


@njit(cache=True)
def _cast_ray(occ, px, py, ux, uy, t_max, h, w):
    """Distance (cell units) to the first occupied-cell boundary, or t_max."""
    x = int(math.floor(px))
    y = int(math.floor(py))
    step_x = 1 if ux > 0 else -1
    step_y = 1 if uy > 0 else -1
    inf = 1e30
    t_next_x = ((x + 1 - px) / ux if ux > 0 else (x - px) / ux) if ux != 0 else inf
    t_next_y = ((y + 1 - py) / uy if uy > 0 else (y - py) / uy) if uy != 0 else inf
    t_dx = 1.0 / abs(ux) if ux != 0 else inf
    t_dy = 1.0 / abs(uy) if uy != 0 else inf
    t = 0.0
    while True:
        if t_next_x < t_next_y:
            t = t_next_x
            t_next_x += t_dx
            x += step_x
        else:
            t = t_next_y
            t_next_y += t_dy
            y += step_y
        if t >= t_max:
            return t_max
        if x < 0 or x >= w or y < 0 or y >= h:
            return t_max
        if occ[y, x]:
            return t


@njit(cache=True)
def sense_kernel(occ, risk, off_x, off_y, px, py, cell_w, n_rays, max_range):
    """Mark IRM cells free along visible rays and occupied at ray hits.
    ``off_x/off_y`` translate ground-truth cell indices to IRM indices."""
    gh, gw = occ.shape
    ih, iw = risk.shape
    for ray in range(n_rays):
        theta = 2.0 * math.pi * ray / n_rays
        ux = math.cos(theta)
        uy = math.sin(theta)
        x = int(math.floor(px / cell_w))
        y = int(math.floor(py / cell_w))
        t_max = max_range / cell_w
        fx = px / cell_w
        fy = py / cell_w
        inf = 1e30
        t_next_x = ((x + 1 - fx) / ux if ux > 0 else (x - fx) / ux) if ux != 0 else inf
        t_next_y = ((y + 1 - fy) / uy if uy > 0 else (y - fy) / uy) if uy != 0 else inf
        t_dx = 1.0 / abs(ux) if ux != 0 else inf
        t_dy = 1.0 / abs(uy) if uy != 0 else inf
        ix = x + off_x
        iy = y + off_y
        if 0 <= ix < iw and 0 <= iy < ih:
            risk[iy, ix] = FREE
        while True:
            if t_next_x < t_next_y:
                t = t_next_x
                t_next_x += t_dx
                x += step_sign(ux)
            else:
                t = t_next_y
                t_next_y += t_dy
                y += step_sign(uy)
            if t >= t_max or x < 0 or x >= gw or y < 0 or y >= gh:
                break
            ix = x + off_x
            iy = y + off_y
            if occ[y, x]:
                if 0 <= ix < iw and 0 <= iy < ih:
                    risk[iy, ix] = OCCUPIED
                break
            if 0 <= ix < iw and 0 <= iy < ih:
                risk[iy, ix] = FREE


@njit(cache=True, inline="always")
def step_sign(u):
    return 1 if u > 0 else -1


# ---------------------------------------------------------------------------
# MDP step and MCTS
# ---------------------------------------------------------------------------

@njit(cache=True)
def step_kernel(cov, risk, edge_risk, mask, x, y, h, a, cell_w,
                k_i, k_d, k_rho, k_mu, rot_cost, beta_known, beta_unknown):
    """One MDP step with the fast masked coverage update. Mutates ``cov``.
    Returns (reward, x, y, heading)."""
    gh, gw = risk.shape
    d = DIR_LEN[a] * cell_w
    nx = x + DIR_DX[a]
    ny = y + DIR_DY[a]
    if nx < 0 or nx >= gw or ny < 0 or ny >= gh or risk[ny, nx] != FREE:
        # blocked moves keep the state but pay the attempted distance
        return -k_d * d, x, y, h
    rho = edge_risk[y, x, a]
    dh = h - a if h >= a else a - h
    if dh > 4:
        dh = 8 - dh
    info = apply_mask_kernel(cov, risk, mask, nx, ny, beta_known, beta_unknown)
    r = k_i * info - (k_d * d + k_rho * rho + k_mu * rot_cost[dh])
    return r, nx, ny, a


@njit(cache=True)
def apply_mask_kernel(cov, risk, mask, cx, cy, beta_known, beta_unknown):
    """Element-wise max of the translated mask into ``cov``; returns the
    occupancy-weighted probability gain (occupied cells earn nothing)."""
    gh, gw = cov.shape
    mh, mw = mask.shape
    x0 = cx - mw // 2
    y0 = cy - mh // 2
    gain = 0.0
    for j in range(mh):
        yy = y0 + j
        if yy < 0 or yy >= gh:
            continue
        for i in range(mw):
            xx = x0 + i
            if xx < 0 or xx >= gw:
                continue
            m = mask[j, i]
            c = cov[yy, xx]
            if m > c:
                rc = risk[yy, xx]
                if rc == FREE:
                    gain += beta_known * (m - c)
                elif rc == UNKNOWN:
                    gain += beta_unknown * (m - c)
                cov[yy, xx] = m
    return gain


@njit(cache=True, inline="always")
def _rng_next(state):
    """splitmix64; returns (new_state, 64-bit output)."""
    state = state + _U64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return state, z ^ (z >> _U64(31))


@njit(cache=True)
def mcts_kernel(risk, edge_risk, cov_root, mask, cx, cy, heading,
                n_sims, max_depth, discount, ucb_c, cell_w,
                k_i, k_d, k_rho, k_mu, rot_cost, beta_known, beta_unknown,
                seed):
    """UCT over the 8-action lattice MDP with mask-based coverage rollouts.

    The tree is a tree of action sequences: per (node, action) visit counts,
    mean discounted returns, and the (deterministic) one-step reward. Returns
    the arena arrays and the node count.
    """
    cap = n_sims + 2
    child = np.full((cap, 8), -1, np.int32)
    n_sa = np.zeros((cap, 8), np.int64)
    q_sa = np.zeros((cap, 8))
    r_sa = np.zeros((cap, 8))
    n_node = np.zeros(cap, np.int64)
    node_count = 1

    cov = np.empty_like(cov_root)
    path_node = np.empty(max_depth, np.int32)
    path_act = np.empty(max_depth, np.int32)
    path_rew = np.empty(max_depth)
    rng = _U64(seed) ^ _U64(0xD1B54A32D192ED03)
    # UCB1 assumes roughly unit-scale values; returns here scale with the
    # mask footprint, so Q is min-max normalized inside the selection rule
    q_lo = 1e300
    q_hi = -1e300

    for _ in range(n_sims):
        cov[:] = cov_root
        x, y, h = cx, cy, heading
        node = 0
        depth = 0
        expanded = False
        while depth < max_depth:
            a = -1
            for cand in range(8):
                if n_sa[node, cand] == 0:
                    a = cand
                    break
            expanded = a >= 0
            if not expanded:
                logn = math.log(float(n_node[node]))
                span = q_hi - q_lo if q_hi > q_lo else 1.0
                best = -1e300
                for cand in range(8):
                    qn = (q_sa[node, cand] - q_lo) / span
                    u = qn + ucb_c * math.sqrt(logn / n_sa[node, cand])
                    if u > best:
                        best = u
                        a = cand
            r, x, y, h = step_kernel(cov, risk, edge_risk, mask, x, y, h, a,
                                     cell_w, k_i, k_d, k_rho, k_mu, rot_cost,
                                     beta_known, beta_unknown)
            path_node[depth] = node
            path_act[depth] = a
            path_rew[depth] = r
            depth += 1
            if expanded:
                child[node, a] = node_count
                node_count += 1
                break
            node = child[node, a]

        # random rollout to the depth budget, excluding immediate reversals
        g = 0.0
        if depth < max_depth:
            prev = path_act[depth - 1] if depth > 0 else -1
            disc = 1.0
            for _d in range(depth, max_depth):
                a = -1
                n_open = 0
                rng, z = _rng_next(rng)
                pick = -1
                for cand in range(8):
                    if prev >= 0 and cand == (prev + 4) % 8:
                        continue
                    tx = x + DIR_DX[cand]
                    ty = y + DIR_DY[cand]
                    if (tx < 0 or tx >= risk.shape[1] or ty < 0
                            or ty >= risk.shape[0] or risk[ty, tx] != FREE):
                        continue
                    n_open += 1
                if n_open > 0:
                    pick = np.int64(z % _U64(n_open))
                    i_open = 0
                    for cand in range(8):
                        if prev >= 0 and cand == (prev + 4) % 8:
                            continue
                        tx = x + DIR_DX[cand]
                        ty = y + DIR_DY[cand]
                        if (tx < 0 or tx >= risk.shape[1] or ty < 0
                                or ty >= risk.shape[0] or risk[ty, tx] != FREE):
                            continue
                        if i_open == pick:
                            a = cand
                            break
                        i_open += 1
                else:
                    a = np.int64(z % _U64(8))
                r, x, y, h = step_kernel(cov, risk, edge_risk, mask, x, y, h, a,
                                         cell_w, k_i, k_d, k_rho, k_mu, rot_cost,
                                         beta_known, beta_unknown)
                g += disc * r
                disc *= discount
                prev = a

        for d in range(depth - 1, -1, -1):
            g = path_rew[d] + discount * g
            nd = path_node[d]
            a = path_act[d]
            n_sa[nd, a] += 1
            n_node[nd] += 1
            q_sa[nd, a] += (g - q_sa[nd, a]) / n_sa[nd, a]
            r_sa[nd, a] = path_rew[d]
            if q_sa[nd, a] < q_lo:
                q_lo = q_sa[nd, a]
            if q_sa[nd, a] > q_hi:
                q_hi = q_sa[nd, a]

    return child, n_sa, q_sa, r_sa, node_count
