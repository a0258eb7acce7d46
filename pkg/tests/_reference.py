"""Independent brute-force reference implementations used by the tests.

Everything in this module is written as plain double loops over Python
floats, with no vectorisation and no calls into the package under test.
Slow on purpose: these are oracles, not production code.
"""


def brute_mean(values):
    total = 0.0
    for x in values:
        total += x
    return total / len(values)


def brute_profile(values, event_indices, max_lag):
    """Event-conditioned normalized volatility profile, both directions.

    Returns a dict with keys ``v_minus``, ``v_plus``, ``count_minus``,
    ``count_plus``, ``sigma`` and ``z``.  Lags with no in-bounds event
    get ``None`` instead of a float.
    """
    n = len(values)
    sigma = brute_mean(values)

    sums_m = [0.0] * (max_lag + 1)
    cnts_m = [0] * (max_lag + 1)
    sums_p = [0.0] * (max_lag + 1)
    cnts_p = [0] * (max_lag + 1)
    for e in event_indices:
        for t in range(max_lag + 1):
            j = e - t
            if j >= 0:
                sums_m[t] += values[j]
                cnts_m[t] += 1
            k = e + t
            if k < n:
                sums_p[t] += values[k]
                cnts_p[t] += 1

    z = sums_p[0] / cnts_p[0] - sigma
    v_minus = []
    v_plus = []
    for t in range(max_lag + 1):
        if cnts_m[t] > 0:
            v_minus.append((sums_m[t] / cnts_m[t] - sigma) / z)
        else:
            v_minus.append(None)
        if cnts_p[t] > 0:
            v_plus.append((sums_p[t] / cnts_p[t] - sigma) / z)
        else:
            v_plus.append(None)
    return {
        "v_minus": v_minus,
        "v_plus": v_plus,
        "count_minus": cnts_m,
        "count_plus": cnts_p,
        "sigma": sigma,
        "z": z,
    }


def brute_cumulative(v_values):
    """Partial sums of v over lags 1..t, with V(0) = 0.

    ``None`` entries (empty lags) propagate: once an undefined lag is
    hit the remaining cumulative entries are ``None`` as well.
    """
    out = [0.0]
    total = 0.0
    dead = False
    for t in range(1, len(v_values)):
        x = v_values[t]
        if dead or x is None:
            dead = True
            out.append(None)
        else:
            total += x
            out.append(total)
    return out


def brute_omori(values, mainshock_indices, zeta1, max_lag):
    """Average number of ``|R| > zeta1`` steps within t of a mainshock.

    Returns ``(n_minus, n_plus)`` as lists over t = 0..max_lag with the
    t = 0 entry equal to 0 (the mainshock itself is not counted).
    """
    n = len(values)
    n_events = len(mainshock_indices)
    n_minus = [0.0] * (max_lag + 1)
    n_plus = [0.0] * (max_lag + 1)
    for t in range(1, max_lag + 1):
        hits_m = 0
        hits_p = 0
        for e in mainshock_indices:
            j = e - t
            if j >= 0 and values[j] > zeta1:
                hits_m += 1
            k = e + t
            if k < n and values[k] > zeta1:
                hits_p += 1
        n_minus[t] = n_minus[t - 1] + hits_m / n_events
        n_plus[t] = n_plus[t - 1] + hits_p / n_events
    return n_minus, n_plus


def brute_select_events(values, sigma, multiple):
    """Indices where the volatility strictly exceeds ``multiple * sigma``."""
    zeta = multiple * sigma
    return [i for i, x in enumerate(values) if x > zeta]


def brute_pattern(values, slot_index, slots_per_day):
    """Per-slot mean volatility divided by the grand mean of slot means."""
    sums = [0.0] * slots_per_day
    cnts = [0] * slots_per_day
    for x, s in zip(values, slot_index):
        sums[s] += x
        cnts[s] += 1
    means = [s / c for s, c in zip(sums, cnts)]
    grand = brute_mean(means)
    return [m / grand for m in means]
