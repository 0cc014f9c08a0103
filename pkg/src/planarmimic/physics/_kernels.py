"""Numba kernels for the reduced-coordinate planar dynamics.

Generalized coordinates are COM-centered: (com_x, com_z) carry translation and
u = [root pitch, joint angles...] carries everything else.  With this split the
COM block of the mass matrix is exactly diag(M, M) and gravity acts on the COM
coordinates only, so linear momentum and free-fall are exact under semi-implicit
Euler; all coupling lives in the internal (pitch + joints) block.
"""

import numpy as np
from numba import njit

NU_MAX = 64  # generous cap, only used for local scratch sizing


@njit(cache=True)
def _rot(theta, v):
    c = np.cos(theta)
    s = np.sin(theta)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


@njit(cache=True)
def kinematics(parents, anchor_p, anchor_c, phi, q):
    """Link orientations and COM positions relative to the root link COM."""
    L = parents.shape[0]
    theta = np.empty(L)
    rrel = np.zeros((L, 2))
    theta[0] = phi
    for l in range(1, L):
        j = l - 1
        p = parents[l]
        theta[l] = theta[p] + q[j]
        ap = _rot(theta[p], anchor_p[j])
        ac = _rot(theta[l], anchor_c[j])
        rrel[l, 0] = rrel[p, 0] + ap[0] - ac[0]
        rrel[l, 1] = rrel[p, 1] + ap[1] - ac[1]
    return theta, rrel


@njit(cache=True)
def velocities(parents, anchor_p, anchor_c, theta, phidot, qdot):
    """Link angular velocities and COM velocities relative to the root link COM."""
    L = parents.shape[0]
    omega = np.empty(L)
    vrel = np.zeros((L, 2))
    omega[0] = phidot
    for l in range(1, L):
        j = l - 1
        p = parents[l]
        omega[l] = omega[p] + qdot[j]
        ap = _rot(theta[p], anchor_p[j])
        ac = _rot(theta[l], anchor_c[j])
        # d/dt rot(theta, a) = omega * perp(rot(theta, a)); perp(v) = (-vz, vx)
        vrel[l, 0] = vrel[p, 0] - omega[p] * ap[1] + omega[l] * ac[1]
        vrel[l, 1] = vrel[p, 1] + omega[p] * ap[0] - omega[l] * ac[0]
    return omega, vrel


@njit(cache=True)
def _bias_acc(parents, anchor_p, anchor_c, theta, omega):
    """Link COM accelerations (relative to root COM) with all u_ddot = 0."""
    L = parents.shape[0]
    ab = np.zeros((L, 2))
    for l in range(1, L):
        j = l - 1
        p = parents[l]
        ap = _rot(theta[p], anchor_p[j])
        ac = _rot(theta[l], anchor_c[j])
        ab[l, 0] = ab[p, 0] - omega[p] * omega[p] * ap[0] + omega[l] * omega[l] * ac[0]
        ab[l, 1] = ab[p, 1] - omega[p] * omega[p] * ap[1] + omega[l] * omega[l] * ac[1]
    return ab


@njit(cache=True)
def _jacobians(parents, anchor_p, anchor_c, S, theta, rrel):
    """d rrel / d u for every link; column 0 is the root pitch, column 1+j joint j."""
    L = parents.shape[0]
    nu = S.shape[1]
    Jr = np.zeros((L, 2, nu))
    pivots = np.empty((L - 1, 2))
    for j in range(L - 1):
        p = parents[j + 1]
        ap = _rot(theta[p], anchor_p[j])
        pivots[j, 0] = rrel[p, 0] + ap[0]
        pivots[j, 1] = rrel[p, 1] + ap[1]
    for l in range(L):
        Jr[l, 0, 0] = -rrel[l, 1]
        Jr[l, 1, 0] = rrel[l, 0]
        for j in range(L - 1):
            if S[l, 1 + j] != 0.0:
                Jr[l, 0, 1 + j] = -(rrel[l, 1] - pivots[j, 1])
                Jr[l, 1, 1 + j] = rrel[l, 0] - pivots[j, 0]
    return Jr


@njit(cache=True)
def _com_shift(masses, total_mass, arr):
    """Subtract the mass-weighted mean row (root-COM frame -> system-COM frame)."""
    L = arr.shape[0]
    mean = np.zeros(arr.shape[1:])
    for l in range(L):
        mean += masses[l] * arr[l]
    mean /= total_mass
    out = np.empty_like(arr)
    for l in range(L):
        out[l] = arr[l] - mean
    return out


@njit(cache=True)
def stable_pd(q, qdot, targets, kp, kd, torque_limit, dt):
    nj = q.shape[0]
    tau = np.empty(nj)
    for j in range(nj):
        t = -kp[j] * (q[j] + qdot[j] * dt - targets[j]) - kd[j] * qdot[j]
        if t > torque_limit[j]:
            t = torque_limit[j]
        elif t < -torque_limit[j]:
            t = -torque_limit[j]
        tau[j] = t
    return tau


@njit(cache=True)
def run_substeps(
    com, vcom, u, udot,
    parents, masses, inertias, total_mass, S,
    anchor_p, anchor_c, lim_lo, lim_hi, kp, kd, damping, torque_limit,
    cp_link, cp_local,
    targets, pd_on,
    imp_link, imp_vec, imp_point,
    n_sub, dt, gravity, mu, baumgarte, slop, push_cap, si_iters, contacts_on,
    contact_flags,
):
    """Advance n_sub substeps in place.  Returns True when all values stay finite/bounded.

    Perturbation impulses are applied at the first substep.  contact_flags is
    OR-accumulated over the substeps.
    """
    L = parents.shape[0]
    nj = L - 1
    nu = 1 + nj
    n_cp = cp_link.shape[0]

    for sub in range(n_sub):
        phi = u[0]
        q = u[1:]
        phidot = udot[0]
        qdot = udot[1:]

        theta, rrel = kinematics(parents, anchor_p, anchor_c, phi, q)
        omega, vrel = velocities(parents, anchor_p, anchor_c, theta, phidot, qdot)
        ab = _bias_acc(parents, anchor_p, anchor_c, theta, omega)
        Jr = _jacobians(parents, anchor_p, anchor_c, S, theta, rrel)

        o = _com_shift(masses, total_mass, rrel)
        ob = _com_shift(masses, total_mass, ab)
        Jo = _com_shift(masses, total_mass, Jr)

        M = np.zeros((nu, nu))
        bias = np.zeros(nu)
        for l in range(L):
            m = masses[l]
            I = inertias[l]
            for a in range(nu):
                ja0 = Jo[l, 0, a]
                ja1 = Jo[l, 1, a]
                bias[a] += m * (ja0 * ob[l, 0] + ja1 * ob[l, 1])
                for b in range(a, nu):
                    M[a, b] += m * (ja0 * Jo[l, 0, b] + ja1 * Jo[l, 1, b]) + I * S[l, a] * S[l, b]
        for a in range(nu):
            for b in range(a):
                M[a, b] = M[b, a]

        # implicit damping: -kd (qdot + dt qddot) and -c (qdot + dt qddot) add
        # dt*(kd + c) to the joint diagonal, keeping large gains stable at 600 Hz
        for j in range(nj):
            M[1 + j, 1 + j] += dt * damping[j]
            if pd_on:
                M[1 + j, 1 + j] += dt * kd[j]

        Minv = np.linalg.inv(M)

        Q = np.zeros(nu)
        if pd_on:
            tau = stable_pd(q, qdot, targets, kp, kd, torque_limit, dt)
            for j in range(nj):
                Q[1 + j] += tau[j]
        for j in range(nj):
            Q[1 + j] -= damping[j] * qdot[j]

        udot += dt * (Minv @ (Q - bias))
        vcom[1] -= dt * gravity

        if sub == 0 and imp_link.shape[0] > 0:
            for k in range(imp_link.shape[0]):
                l = imp_link[k]
                arm = _rot(theta[l], imp_point[k])
                Jp = np.empty((2, nu))
                for a in range(nu):
                    Jp[0, a] = Jo[l, 0, a] - arm[1] * S[l, a]
                    Jp[1, a] = Jo[l, 1, a] + arm[0] * S[l, a]
                vcom[0] += imp_vec[k, 0] / total_mass
                vcom[1] += imp_vec[k, 1] / total_mass
                udot += Minv @ (Jp.T @ imp_vec[k])

        if contacts_on and n_cp > 0:
            # collect active contacts at the current configuration
            active = np.empty(n_cp, dtype=np.int64)
            n_act = 0
            pen = np.empty(n_cp)
            for k in range(n_cp):
                l = cp_link[k]
                arm = _rot(theta[l], cp_local[k])
                pz = com[1] + o[l, 1] + arm[1]
                if pz < 0.0:
                    active[n_act] = k
                    pen[n_act] = -pz
                    n_act += 1
                    contact_flags[l] = True
            if n_act > 0:
                Jp_all = np.empty((n_act, 2, nu))
                MJ_all = np.empty((n_act, nu, 2))
                mn = np.empty(n_act)
                mt = np.empty(n_act)
                bias_v = np.empty(n_act)
                for c in range(n_act):
                    k = active[c]
                    l = cp_link[k]
                    arm = _rot(theta[l], cp_local[k])
                    for a in range(nu):
                        Jp_all[c, 0, a] = Jo[l, 0, a] - arm[1] * S[l, a]
                        Jp_all[c, 1, a] = Jo[l, 1, a] + arm[0] * S[l, a]
                    MJ = Minv @ Jp_all[c].T
                    MJ_all[c] = MJ
                    Kxx = 1.0 / total_mass
                    Kzz = 1.0 / total_mass
                    for a in range(nu):
                        Kxx += Jp_all[c, 0, a] * MJ[a, 0]
                        Kzz += Jp_all[c, 1, a] * MJ[a, 1]
                    mt[c] = 1.0 / Kxx
                    mn[c] = 1.0 / Kzz
                    over = pen[c] - slop
                    bv = baumgarte * over / dt if over > 0.0 else 0.0
                    bias_v[c] = bv if bv < push_cap else push_cap
                acc_n = np.zeros(n_act)
                acc_t = np.zeros(n_act)
                for _ in range(si_iters):
                    for c in range(n_act):
                        # normal: drive the point's upward velocity to >= bias_v
                        vz = vcom[1]
                        for a in range(nu):
                            vz += Jp_all[c, 1, a] * udot[a]
                        dl = mn[c] * (bias_v[c] - vz)
                        new = acc_n[c] + dl
                        if new < 0.0:
                            new = 0.0
                        dl = new - acc_n[c]
                        acc_n[c] = new
                        if dl != 0.0:
                            vcom[1] += dl / total_mass
                            for a in range(nu):
                                udot[a] += MJ_all[c, a, 1] * dl
                        # friction: drive tangential velocity to 0 within the cone
                        vx = vcom[0]
                        for a in range(nu):
                            vx += Jp_all[c, 0, a] * udot[a]
                        dl = -mt[c] * vx
                        hi = mu * acc_n[c]
                        new = acc_t[c] + dl
                        if new > hi:
                            new = hi
                        elif new < -hi:
                            new = -hi
                        dl = new - acc_t[c]
                        acc_t[c] = new
                        if dl != 0.0:
                            vcom[0] += dl / total_mass
                            for a in range(nu):
                                udot[a] += MJ_all[c, a, 0] * dl

        com[0] += dt * vcom[0]
        com[1] += dt * vcom[1]
        u += dt * udot
        for j in range(nj):
            if u[1 + j] < lim_lo[j]:
                u[1 + j] = lim_lo[j]
                if udot[1 + j] < 0.0:
                    udot[1 + j] = 0.0
            elif u[1 + j] > lim_hi[j]:
                u[1 + j] = lim_hi[j]
                if udot[1 + j] > 0.0:
                    udot[1 + j] = 0.0

    ok = True
    for i in range(2):
        if not np.isfinite(com[i]) or np.abs(com[i]) > 1e6:
            ok = False
        if not np.isfinite(vcom[i]) or np.abs(vcom[i]) > 1e6:
            ok = False
    for i in range(nu):
        if not np.isfinite(u[i]) or np.abs(u[i]) > 1e6:
            ok = False
        if not np.isfinite(udot[i]) or np.abs(udot[i]) > 1e6:
            ok = False
    return ok
