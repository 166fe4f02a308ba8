"""Brute-force reference computations, kept independent of the package code."""

from __future__ import annotations

import itertools
import math


def connected_components(points, radius):
    """Union-find over the full pairwise-distance graph."""
    parent = list(range(len(points)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if math.dist(points[i], points[j]) <= radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(points)):
        groups.setdefault(find(i), set()).add(i)
    return list(groups.values())


def lexicographic_greedy_matching(det_centers, radar_centroids, gate):
    """Enumerate every matching inside the gate and pick the one whose sorted
    distance list (padded with +inf to full size) is lexicographically least.

    With distinct distances this is the greedy closest-first matching.
    """
    edges = [
        (math.dist(d, r), i, j)
        for i, d in enumerate(det_centers)
        for j, r in enumerate(radar_centroids)
        if math.dist(d, r) <= gate
    ]
    size = min(len(det_centers), len(radar_centroids))
    best_key, best = None, {}
    for k in range(0, size + 1):
        for combo in itertools.combinations(edges, k):
            dets = {e[1] for e in combo}
            rads = {e[2] for e in combo}
            if len(dets) != k or len(rads) != k:
                continue
            key = sorted(e[0] for e in combo) + [math.inf] * (size - k)
            if best_key is None or key < best_key:
                best_key, best = key, {e[1]: e[2] for e in combo}
    return best


def mae(pred, gt):
    total = 0.0
    for p, g in zip(pred, gt):
        total += abs(p - g)
    return total / len(pred)


def r2(pred, gt):
    mean = sum(gt) / len(gt)
    ss_res = 0.0
    ss_tot = 0.0
    for p, g in zip(pred, gt):
        ss_res += (g - p) * (g - p)
        ss_tot += (g - mean) * (g - mean)
    return 1 - ss_res / ss_tot


def ade(pred_xy, gt_xy):
    return sum(math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) for a, b in zip(pred_xy, gt_xy)) / len(pred_xy)


def fde(pred_xy, gt_xy):
    a, b = pred_xy[-1], gt_xy[-1]
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)


def fine_bicycle(v, steer_deg, wheelbase, horizon, dt=1e-4):
    """Explicit Euler at a fine step for a constant speed and steer."""
    x = y = heading = 0.0
    rate = v * math.tan(math.radians(steer_deg)) / wheelbase
    for _ in range(round(horizon / dt)):
        x += v * math.cos(heading) * dt
        y += v * math.sin(heading) * dt
        heading += rate * dt
    return x, y, heading


def discrete_speed_sum(v0, accel, dt, steps, min_speed=0.0):
    """Straight-line travel with the speed updated before each position step."""
    x, v, speeds = 0.0, v0, []
    for _ in range(steps):
        v = max(v + accel * dt, min_speed)
        x += v * dt
        speeds.append(v)
    return x, speeds
