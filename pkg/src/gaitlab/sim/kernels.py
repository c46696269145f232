"""Hot inner loops of the rigid-body solver.

The functions here are written as straight-line numerics over flat numpy
arrays so that numba can compile them in nopython mode. Set GAITLAB_NUMBA=0
to skip compilation and run the identical Python code paths. Both paths run
the same operations in the same order without fastmath; they agree to the
last ulp of the libm calls (each mode is individually bit-deterministic).
"""

from __future__ import annotations

import math
import os

NUMBA_ENABLED = os.environ.get("GAITLAB_NUMBA", "1") not in ("0", "false", "no")

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay runnable
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def terrain_height(hts, x0, dx, x):
    """Linear interpolation into the 1-D heightfield, clamped at the edges."""
    n = hts.shape[0]
    u = (x - x0) / dx
    if u <= 0.0:
        return hts[0], 0.0
    if u >= n - 1:
        return hts[n - 1], 0.0
    i = int(u)
    f = u - i
    slope = (hts[i + 1] - hts[i]) / dx
    return hts[i] * (1.0 - f) + hts[i + 1] * f, slope


@njit(cache=True)
def substep(
    pos, ang, vel, omg, inv_m, inv_i,
    ext_f,
    j_a, j_b, j_la, j_lb, j_locked, j_ref, j_tq,
    j_motor, j_qstar, j_kp, j_kd, j_tlim,
    cp_body, cp_local,
    hts, h_x0, h_dx, mu,
    gravity, dt, iters, beta, slop,
    jn_out, jt_out, cx_out, active_out, motor_acc, joint_ws,
):
    """One semi-implicit Euler step with sequential-impulse constraints.

    Actuation: raw torques in ``j_tq`` integrate explicitly; joints flagged in
    ``j_motor`` run an implicit PD motor (spring-damper solved as a soft
    velocity constraint, impulse clamped by the torque limit), which stays
    stable at 120 Hz even for the very light distal links. Joint anchors get
    a nonlinear Gauss-Seidel position pass after integration; contacts use
    Baumgarte bias with accumulated normal/friction impulses and a Coulomb
    clamp. Mutates state in place; reports contact impulses for inspection.
    """
    n_body = pos.shape[0]
    n_joint = j_a.shape[0]
    n_cp = cp_body.shape[0]

    # -- integrate external forces and explicit joint torques ----------------
    for i in range(n_body):
        if inv_m[i] > 0.0:
            vel[i, 0] += dt * ext_f[i, 0] * inv_m[i]
            vel[i, 1] += dt * (gravity + ext_f[i, 1] * inv_m[i])
    for j in range(n_joint):
        motor_acc[j] = 0.0
        tq = j_tq[j]
        if tq != 0.0:
            omg[j_a[j]] -= dt * tq * inv_i[j_a[j]]
            omg[j_b[j]] += dt * tq * inv_i[j_b[j]]

    # -- contact candidate setup (warm-started from the previous substep) ----
    for c in range(n_cp):
        b = cp_body[c]
        ca = math.cos(ang[b])
        sa = math.sin(ang[b])
        rx = ca * cp_local[c, 0] - sa * cp_local[c, 1]
        ry = sa * cp_local[c, 0] + ca * cp_local[c, 1]
        px = pos[b, 0] + rx
        py = pos[b, 1] + ry
        h, slope = terrain_height(hts, h_x0, h_dx, px)
        cx_out[c, 0] = px
        cx_out[c, 1] = py
        if py - h < 0.001:
            was_active = active_out[c]
            active_out[c] = 1
            if was_active == 1 and (jn_out[c] != 0.0 or jt_out[c] != 0.0):
                inv_len = 1.0 / math.sqrt(1.0 + slope * slope)
                nx = -slope * inv_len
                ny = inv_len
                jx = jn_out[c] * nx - jt_out[c] * ny
                jy = jn_out[c] * ny + jt_out[c] * nx
                vel[b, 0] += inv_m[b] * jx
                vel[b, 1] += inv_m[b] * jy
                omg[b] += inv_i[b] * (rx * jy - ry * jx)
            else:
                jn_out[c] = 0.0
                jt_out[c] = 0.0
        else:
            active_out[c] = 0
            jn_out[c] = 0.0
            jt_out[c] = 0.0

    # -- joint warm start -------------------------------------------------------
    for j in range(n_joint):
        a = j_a[j]
        b = j_b[j]
        jx = joint_ws[j, 0]
        jy = joint_ws[j, 1]
        if jx != 0.0 or jy != 0.0:
            ca = math.cos(ang[a])
            sa = math.sin(ang[a])
            cb = math.cos(ang[b])
            sb = math.sin(ang[b])
            rax = ca * j_la[j, 0] - sa * j_la[j, 1]
            ray = sa * j_la[j, 0] + ca * j_la[j, 1]
            rbx = cb * j_lb[j, 0] - sb * j_lb[j, 1]
            rby = sb * j_lb[j, 0] + cb * j_lb[j, 1]
            vel[a, 0] -= inv_m[a] * jx
            vel[a, 1] -= inv_m[a] * jy
            omg[a] -= inv_i[a] * (rax * jy - ray * jx)
            vel[b, 0] += inv_m[b] * jx
            vel[b, 1] += inv_m[b] * jy
            omg[b] += inv_i[b] * (rbx * jy - rby * jx)

    # -- velocity iterations ----------------------------------------------------
    for _ in range(iters):
        for j in range(n_joint):
            a = j_a[j]
            b = j_b[j]
            ca = math.cos(ang[a])
            sa = math.sin(ang[a])
            cb = math.cos(ang[b])
            sb = math.sin(ang[b])
            rax = ca * j_la[j, 0] - sa * j_la[j, 1]
            ray = sa * j_la[j, 0] + ca * j_la[j, 1]
            rbx = cb * j_lb[j, 0] - sb * j_lb[j, 1]
            rby = sb * j_lb[j, 0] + cb * j_lb[j, 1]

            vrx = vel[b, 0] - omg[b] * rby - vel[a, 0] + omg[a] * ray
            vry = vel[b, 1] + omg[b] * rbx - vel[a, 1] - omg[a] * rax

            ima = inv_m[a]
            imb = inv_m[b]
            iia = inv_i[a]
            iib = inv_i[b]
            k11 = ima + imb + iia * ray * ray + iib * rby * rby
            k12 = -iia * rax * ray - iib * rbx * rby
            k22 = ima + imb + iia * rax * rax + iib * rbx * rbx
            det = k11 * k22 - k12 * k12
            if det > 0.0:
                px_ = (k22 * -vrx - k12 * -vry) / det
                py_ = (k11 * -vry - k12 * -vrx) / det
                joint_ws[j, 0] += px_
                joint_ws[j, 1] += py_
                vel[a, 0] -= ima * px_
                vel[a, 1] -= ima * py_
                omg[a] -= iia * (rax * py_ - ray * px_)
                vel[b, 0] += imb * px_
                vel[b, 1] += imb * py_
                omg[b] += iib * (rbx * py_ - rby * px_)

            kang = iia + iib
            if kang <= 0.0:
                continue
            if j_locked[j] == 1:
                wrel = omg[b] - omg[a]
                lam = -wrel / kang
                omg[a] -= iia * lam
                omg[b] += iib * lam
            elif j_motor[j] == 1:
                # implicit PD: impulse L = dt*kp*(q*-q) - dt*(kd+dt*kp)*w'
                ceff = dt * (j_kd[j] + dt * j_kp[j])
                if ceff <= 0.0:
                    continue
                gamma = 1.0 / ceff
                q = ang[b] - ang[a]
                bias_imp = dt * j_kp[j] * (j_qstar[j] - q)
                wrel = omg[b] - omg[a]
                dlam = (gamma * bias_imp - wrel - gamma * motor_acc[j]) / (kang + gamma)
                old = motor_acc[j]
                new = old + dlam
                lim = j_tlim[j] * dt
                if new > lim:
                    new = lim
                elif new < -lim:
                    new = -lim
                motor_acc[j] = new
                dlam = new - old
                omg[a] -= iia * dlam
                omg[b] += iib * dlam

        for c in range(n_cp):
            if active_out[c] == 0:
                continue
            b = cp_body[c]
            ca = math.cos(ang[b])
            sa = math.sin(ang[b])
            rx = ca * cp_local[c, 0] - sa * cp_local[c, 1]
            ry = sa * cp_local[c, 0] + ca * cp_local[c, 1]
            px = pos[b, 0] + rx
            py = pos[b, 1] + ry
            h, slope = terrain_height(hts, h_x0, h_dx, px)
            inv_len = 1.0 / math.sqrt(1.0 + slope * slope)
            nx = -slope * inv_len
            ny = inv_len
            pen = (h - py) * ny  # depth along the normal, > 0 when below ground

            ima = inv_m[b]
            iib = inv_i[b]

            vx = vel[b, 0] - omg[b] * ry
            vy = vel[b, 1] + omg[b] * rx
            vn = vx * nx + vy * ny
            rxn = rx * ny - ry * nx
            kn = ima + iib * rxn * rxn
            if kn > 0.0:
                # no velocity bias: penetration is fixed by the position pass,
                # which keeps resting contacts from pumping energy (restitution 0)
                dj = -vn / kn
                old = jn_out[c]
                new = old + dj
                if new < 0.0:
                    new = 0.0
                jn_out[c] = new
                dj = new - old
                vel[b, 0] += ima * dj * nx
                vel[b, 1] += ima * dj * ny
                omg[b] += iib * dj * rxn

            tx = -ny
            ty = nx
            vx = vel[b, 0] - omg[b] * ry
            vy = vel[b, 1] + omg[b] * rx
            vt = vx * tx + vy * ty
            rxt = rx * ty - ry * tx
            kt = ima + iib * rxt * rxt
            if kt > 0.0:
                dj = -vt / kt
                old = jt_out[c]
                new = old + dj
                lim = mu * jn_out[c]
                if new > lim:
                    new = lim
                elif new < -lim:
                    new = -lim
                jt_out[c] = new
                dj = new - old
                vel[b, 0] += ima * dj * tx
                vel[b, 1] += ima * dj * ty
                omg[b] += iib * dj * rxt

    # -- integrate positions -------------------------------------------------------
    for i in range(n_body):
        pos[i, 0] += dt * vel[i, 0]
        pos[i, 1] += dt * vel[i, 1]
        ang[i] += dt * omg[i]

    # -- position correction (nonlinear Gauss-Seidel): joints and penetration ------
    for _ in range(3):
        for c in range(n_cp):
            if active_out[c] == 0:
                continue
            b = cp_body[c]
            ca = math.cos(ang[b])
            sa = math.sin(ang[b])
            rx = ca * cp_local[c, 0] - sa * cp_local[c, 1]
            ry = sa * cp_local[c, 0] + ca * cp_local[c, 1]
            px = pos[b, 0] + rx
            py = pos[b, 1] + ry
            h, slope = terrain_height(hts, h_x0, h_dx, px)
            inv_len = 1.0 / math.sqrt(1.0 + slope * slope)
            nx = -slope * inv_len
            ny = inv_len
            pen = (h - py) * ny
            if pen <= slop:
                continue
            rxn = rx * ny - ry * nx
            kn = inv_m[b] + inv_i[b] * rxn * rxn
            if kn <= 0.0:
                continue
            lam = beta * (pen - slop) / kn
            pos[b, 0] += inv_m[b] * lam * nx
            pos[b, 1] += inv_m[b] * lam * ny
            ang[b] += inv_i[b] * lam * rxn
        for j in range(n_joint):
            a = j_a[j]
            b = j_b[j]
            ima = inv_m[a]
            imb = inv_m[b]
            iia = inv_i[a]
            iib = inv_i[b]

            if j_locked[j] == 1:
                kang = iia + iib
                if kang > 0.0:
                    cang = (ang[b] - ang[a]) - j_ref[j]
                    lam = -cang / kang
                    ang[a] -= iia * lam
                    ang[b] += iib * lam

            ca = math.cos(ang[a])
            sa = math.sin(ang[a])
            cb = math.cos(ang[b])
            sb = math.sin(ang[b])
            rax = ca * j_la[j, 0] - sa * j_la[j, 1]
            ray = sa * j_la[j, 0] + ca * j_la[j, 1]
            rbx = cb * j_lb[j, 0] - sb * j_lb[j, 1]
            rby = sb * j_lb[j, 0] + cb * j_lb[j, 1]
            cx = (pos[b, 0] + rbx) - (pos[a, 0] + rax)
            cy = (pos[b, 1] + rby) - (pos[a, 1] + ray)

            k11 = ima + imb + iia * ray * ray + iib * rby * rby
            k12 = -iia * rax * ray - iib * rbx * rby
            k22 = ima + imb + iia * rax * rax + iib * rbx * rbx
            det = k11 * k22 - k12 * k12
            if det <= 0.0:
                continue
            px_ = (k22 * -cx - k12 * -cy) / det
            py_ = (k11 * -cy - k12 * -cx) / det
            pos[a, 0] -= ima * px_
            pos[a, 1] -= ima * py_
            ang[a] -= iia * (rax * py_ - ray * px_)
            pos[b, 0] += imb * px_
            pos[b, 1] += imb * py_
            ang[b] += iib * (rbx * py_ - rby * px_)


def substep_python(*args, **kwargs):
    """Pure-Python fallback entry (same function body, uncompiled)."""
    fn = substep.py_func if hasattr(substep, "py_func") else substep
    return fn(*args, **kwargs)
