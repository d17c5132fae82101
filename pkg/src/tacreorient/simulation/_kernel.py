"""Numba substep loop for the pinched-object world.

The object moves in the gripper's x-z plane relative to the fingers, with
generalized coordinates ``q = (x, z, phi)``: body origin (the grasp point on
the object) in gripper coordinates and the rotation about the gripper's
+y (grasp) axis. A planar rotation by ``phi`` maps body ``(x, z)`` to
``(c*x + s*z, -s*x + c*z)``, which is the x-z block of a 3-D rotation about +y.

Units: mm, N, s. Masses come in as N*s^2/mm (kg / 1000) and inertias as
N*s^2*mm (kg*mm^2 / 1000).

Status codes returned by :func:`advance`: 0 ok, 1 dropped, 2 diverged.
"""

import math

import numpy as np
from numba import njit

OK = 0
DROPPED = 1
DIVERGED = 2

SPEED_LIMIT = 5.0e3  # mm/s, object velocity relative to the gripper


@njit(cache=True)
def _rot(phi, x, z):
    c = math.cos(phi)
    s = math.sin(phi)
    return c * x + s * z, -s * x + c * z


@njit(cache=True)
def _rot_inv(phi, x, z):
    c = math.cos(phi)
    s = math.sin(phi)
    return c * x - s * z, s * x + c * z


@njit(cache=True)
def _inside(poly, x, z):
    # even-odd ray casting
    inside = False
    n = poly.shape[0]
    j = n - 1
    for i in range(n):
        xi = poly[i, 0]
        zi = poly[i, 1]
        xj = poly[j, 0]
        zj = poly[j, 1]
        if (zi > z) != (zj > z):
            xc = xi + (z - zi) * (xj - xi) / (zj - zi)
            if x < xc:
                inside = not inside
        j = i
    return inside


@njit(cache=True)
def _solve3(A, b, out):
    a00, a01, a02 = A[0, 0], A[0, 1], A[0, 2]
    a10, a11, a12 = A[1, 0], A[1, 1], A[1, 2]
    a20, a21, a22 = A[2, 0], A[2, 1], A[2, 2]
    c00 = a11 * a22 - a12 * a21
    c01 = a12 * a20 - a10 * a22
    c02 = a10 * a21 - a11 * a20
    det = a00 * c00 + a01 * c01 + a02 * c02
    inv = 1.0 / det
    out[0] = inv * (c00 * b[0] + (a02 * a21 - a01 * a22) * b[1] + (a01 * a12 - a02 * a11) * b[2])
    out[1] = inv * (c01 * b[0] + (a00 * a22 - a02 * a20) * b[1] + (a02 * a10 - a00 * a12) * b[2])
    out[2] = inv * (c02 * b[0] + (a01 * a20 - a00 * a21) * b[1] + (a00 * a11 - a01 * a10) * b[2])


@njit(cache=True)
def pin_friction_coeff(mu, tex_amp, tex_wavelength, ax, az):
    if tex_amp == 0.0:
        return mu
    k = 2.0 * math.pi / tex_wavelength
    return mu * (1.0 + tex_amp * math.sin(k * ax) * math.sin(k * az))


@njit(cache=True)
def update_pins(
    q, anchors, bases, outline, normal_force, k_t, mu, tex_amp, tex_wavelength,
    defl, active, slip_acc,
):
    """Return-map every pin onto its friction disc; accumulate kinetic slip.

    Inactive pins re-anchor to the material point under their base so they
    start undeflected when contact resumes.
    """
    n_pins = bases.shape[0]
    phi = q[2]
    n_contact = 0
    for f in range(2):
        # pins in contact with the object surface this substep
        count = 0
        for i in range(n_pins):
            ax = anchors[f, i, 0]
            az = anchors[f, i, 1]
            ok = normal_force[f] > 0.0 and _inside(outline, ax, az)
            if not ok:
                # material under the base
                bx, bz = _rot_inv(phi, bases[i, 0] - q[0], bases[i, 1] - q[1])
                anchors[f, i, 0] = bx
                anchors[f, i, 1] = bz
                ok = normal_force[f] > 0.0 and _inside(outline, bx, bz)
            active[f, i] = ok
            if ok:
                count += 1
        n_contact += count
        sx = 0.0
        sz = 0.0
        for i in range(n_pins):
            if not active[f, i]:
                defl[f, i, 0] = 0.0
                defl[f, i, 1] = 0.0
                continue
            ax = anchors[f, i, 0]
            az = anchors[f, i, 1]
            rx, rz = _rot(phi, ax, az)
            dx = rx + q[0] - bases[i, 0]
            dz = rz + q[1] - bases[i, 1]
            mag = math.sqrt(dx * dx + dz * dz)
            mu_i = pin_friction_coeff(mu[f], tex_amp, tex_wavelength, ax, az)
            limit = mu_i * normal_force[f] / (count * k_t[f])
            if mag > limit:
                scale = limit / mag
                ndx = dx * scale
                ndz = dz * scale
                sx += dx - ndx
                sz += dz - ndz
                # slide the anchor so the tip sits on the friction disc
                tx, tz = _rot_inv(phi, bases[i, 0] + ndx - q[0], bases[i, 1] + ndz - q[1])
                anchors[f, i, 0] = tx
                anchors[f, i, 1] = tz
                dx = ndx
                dz = ndz
            defl[f, i, 0] = dx
            defl[f, i, 1] = dz
        if count > 0:
            slip_acc[f] += math.sqrt(sx * sx + sz * sz) / count
    return n_contact


@njit(cache=True)
def advance(
    n_sub, dt,
    R_H, p_H, v_H, w_H, grip_force,
    q, v, liquid, anchors, slip_acc,
    mass, inertia_c, inertia_com, grav_center0, liquid_radius, liquid_tau,
    outline, env_pts,
    bases, k_t, mu, tex_amp, tex_wavelength, damp_lin, damp_rot,
    planes, boxes, k_env, c_env, mu_env, v_slip,
    dist_force, dist_point,
    gravity_on, fixed, fixed_R, fixed_p,
    defl, active, normal_force,
):
    """Advance ``n_sub`` substeps in place. ``R_H``/``p_H`` hold the gripper
    pose at the *end* of each substep."""
    g = 9810.0 if gravity_on else 0.0
    n_pins = bases.shape[0]
    A = np.empty((3, 3))
    rhs = np.empty(3)
    vnew = np.empty(3)
    gen = np.empty(3)
    for k in range(n_sub):
        R = R_H[k]
        pH = p_H[k]
        phi = q[2]

        if fixed:
            # kinematically held object: recover relative coordinates
            ox = pH[0]
            oy = pH[1]
            oz = pH[2]
            dxg = fixed_p[0] - ox
            dyg = fixed_p[1] - oy
            dzg = fixed_p[2] - oz
            q[0] = R[0, 0] * dxg + R[1, 0] * dyg + R[2, 0] * dzg
            q[1] = R[0, 2] * dxg + R[1, 2] * dyg + R[2, 2] * dzg
            m02 = R[0, 0] * fixed_R[0, 2] + R[1, 0] * fixed_R[1, 2] + R[2, 0] * fixed_R[2, 2]
            m00 = R[0, 0] * fixed_R[0, 0] + R[1, 0] * fixed_R[1, 0] + R[2, 0] * fixed_R[2, 0]
            q[2] = math.atan2(m02, m00)
            v[0] = 0.0
            v[1] = 0.0
            v[2] = 0.0
            normal_force[0] = grip_force
            normal_force[1] = grip_force
            update_pins(q, anchors, bases, outline, normal_force, k_t, mu, tex_amp,
                        tex_wavelength, defl, active, slip_acc)
            continue

        # gravity in gripper coordinates
        gx = -g * R[2, 0]
        gy = -g * R[2, 1]
        gz = -g * R[2, 2]

        for i in range(3):
            gen[i] = 0.0
            for j in range(3):
                A[i, j] = 0.0
        f_y = 0.0

        # pins (explicit elastic)
        for f in range(2):
            for i in range(n_pins):
                if not active[f, i]:
                    continue
                fx = -k_t[f] * defl[f, i, 0]
                fz = -k_t[f] * defl[f, i, 1]
                rx = defl[f, i, 0] + bases[i, 0] - q[0]
                rz = defl[f, i, 1] + bases[i, 1] - q[1]
                gen[0] += fx
                gen[1] += fz
                gen[2] += rz * fx - rx * fz

        # gravity at the (possibly shifting) centre of gravity
        cbx = grav_center0[0] + liquid[0]
        cbz = grav_center0[1] + liquid[1]
        cx, cz = _rot(phi, cbx, cbz)
        Fgx = mass * gx
        Fgz = mass * gz
        gen[0] += Fgx
        gen[1] += Fgz
        gen[2] += cz * Fgx - cx * Fgz
        f_y += mass * gy

        if liquid_radius > 0.0:
            bgx, bgz = _rot_inv(phi, gx, gz)
            gn = math.sqrt(bgx * bgx + bgz * bgz)
            if gn > 1e-9:
                a = dt / (liquid_tau + dt)
                liquid[0] += a * (liquid_radius * bgx / gn - liquid[0])
                liquid[1] += a * (liquid_radius * bgz / gn - liquid[1])

        # coriolis-free centripetal term of the offset inertia centre
        icx, icz = _rot(phi, inertia_com[0], inertia_com[1])
        gen[0] += mass * v[2] * v[2] * icx
        gen[1] += mass * v[2] * v[2] * icz

        # scripted disturbance wrench
        dfx = R[0, 0] * dist_force[k, 0] + R[1, 0] * dist_force[k, 1] + R[2, 0] * dist_force[k, 2]
        dfy = R[0, 1] * dist_force[k, 0] + R[1, 1] * dist_force[k, 1] + R[2, 1] * dist_force[k, 2]
        dfz = R[0, 2] * dist_force[k, 0] + R[1, 2] * dist_force[k, 1] + R[2, 2] * dist_force[k, 2]
        if dfx != 0.0 or dfy != 0.0 or dfz != 0.0:
            px, pz = _rot(phi, dist_point[0], dist_point[2])
            gen[0] += dfx
            gen[1] += dfz
            gen[2] += pz * dfx - px * dfz
            f_y += dfy

        # environment penalty contacts
        n_env = env_pts.shape[0]
        for s in range(n_env):
            rrx, rrz = _rot(phi, env_pts[s, 0], env_pts[s, 2])
            hx = rrx + q[0]
            hy = env_pts[s, 1]
            hz = rrz + q[1]
            Px = pH[0] + R[0, 0] * hx + R[0, 1] * hy + R[0, 2] * hz
            Py = pH[1] + R[1, 0] * hx + R[1, 1] * hy + R[1, 2] * hz
            Pz = pH[2] + R[2, 0] * hx + R[2, 1] * hy + R[2, 2] * hz
            # find deepest penetrating surface among planes and boxes
            depth = 0.0
            nx = 0.0
            ny = 0.0
            nz = 0.0
            for pl in range(planes.shape[0]):
                gap = planes[pl, 0] * Px + planes[pl, 1] * Py + planes[pl, 2] * Pz - planes[pl, 3]
                if -gap > depth:
                    depth = -gap
                    nx = planes[pl, 0]
                    ny = planes[pl, 1]
                    nz = planes[pl, 2]
            for b in range(boxes.shape[0]):
                if (boxes[b, 0] < Px < boxes[b, 3] and boxes[b, 1] < Py < boxes[b, 4]
                        and boxes[b, 2] < Pz < boxes[b, 5]):
                    best = Px - boxes[b, 0]
                    bnx, bny, bnz = -1.0, 0.0, 0.0
                    if boxes[b, 3] - Px < best:
                        best = boxes[b, 3] - Px
                        bnx, bny, bnz = 1.0, 0.0, 0.0
                    if Py - boxes[b, 1] < best:
                        best = Py - boxes[b, 1]
                        bnx, bny, bnz = 0.0, -1.0, 0.0
                    if boxes[b, 4] - Py < best:
                        best = boxes[b, 4] - Py
                        bnx, bny, bnz = 0.0, 1.0, 0.0
                    if Pz - boxes[b, 2] < best:
                        best = Pz - boxes[b, 2]
                        bnx, bny, bnz = 0.0, 0.0, -1.0
                    if boxes[b, 5] - Pz < best:
                        best = boxes[b, 5] - Pz
                        bnx, bny, bnz = 0.0, 0.0, 1.0
                    if best > depth:
                        depth = best
                        nx, ny, nz = bnx, bny, bnz
            if depth <= 0.0:
                continue
            # point velocity: gripper-driven part plus relative part (H coords)
            ex = Px - pH[0]
            ey = Py - pH[1]
            ez = Pz - pH[2]
            wgx = v_H[0] + w_H[1] * ez - w_H[2] * ey
            wgy = v_H[1] + w_H[2] * ex - w_H[0] * ez
            wgz = v_H[2] + w_H[0] * ey - w_H[1] * ex
            rvx = v[0] + v[2] * rrz
            rvz = v[1] - v[2] * rrx
            vgx = wgx + R[0, 0] * rvx + R[0, 2] * rvz
            vgy = wgy + R[1, 0] * rvx + R[1, 2] * rvz
            vgz = wgz + R[2, 0] * rvx + R[2, 2] * rvz
            vn = vgx * nx + vgy * ny + vgz * nz
            fn = k_env * depth - c_env * vn
            if fn <= 0.0:
                continue
            # normal force, explicit
            fnx = fn * nx
            fny = fn * ny
            fnz = fn * nz
            hfx = R[0, 0] * fnx + R[1, 0] * fny + R[2, 0] * fnz
            hfy = R[0, 1] * fnx + R[1, 1] * fny + R[2, 1] * fnz
            hfz = R[0, 2] * fnx + R[1, 2] * fny + R[2, 2] * fnz
            gen[0] += hfx
            gen[1] += hfz
            gen[2] += rrz * hfx - rrx * hfz
            f_y += hfy
            # regularized Coulomb friction as an implicit viscous term
            vtx = vgx - vn * nx
            vty = vgy - vn * ny
            vtz = vgz - vn * nz
            # in-plane friction only: the planar body cannot respond to drag along the
            # grasp axis, so that component is left out rather than half-modelled
            ayx = R[0, 1] - (R[0, 1] * nx + R[1, 1] * ny + R[2, 1] * nz) * nx
            ayy = R[1, 1] - (R[0, 1] * nx + R[1, 1] * ny + R[2, 1] * nz) * ny
            ayz = R[2, 1] - (R[0, 1] * nx + R[1, 1] * ny + R[2, 1] * nz) * nz
            an = math.sqrt(ayx * ayx + ayy * ayy + ayz * ayz)
            vout = 0.0
            if an > 1e-9:
                vout = (vtx * ayx + vty * ayy + vtz * ayz) / an
            vt = math.sqrt(max(vtx * vtx + vty * vty + vtz * vtz - vout * vout, 0.0))
            if vt > 1e-12:
                ceq = mu_env * fn * math.tanh(vt / v_slip) / vt
            else:
                ceq = mu_env * fn / v_slip
            # tangent projector in H coordinates: T = R^T (I - n n^T) R
            hnx = R[0, 0] * nx + R[1, 0] * ny + R[2, 0] * nz
            hny = R[0, 1] * nx + R[1, 1] * ny + R[2, 1] * nz
            hnz = R[0, 2] * nx + R[1, 2] * ny + R[2, 2] * nz
            # Jacobian columns (H coords) of point velocity w.r.t. (vx, vz, w)
            # J0 = (1, 0, 0), J1 = (0, 0, 1), J2 = (rrz, 0, -rrx)
            jx0, jy0, jz0 = 1.0, 0.0, 0.0
            jx1, jy1, jz1 = 0.0, 0.0, 1.0
            jx2, jy2, jz2 = rrz, 0.0, -rrx
            # tangent-projected columns
            d0 = jx0 * hnx + jy0 * hny + jz0 * hnz
            d1 = jx1 * hnx + jy1 * hny + jz1 * hnz
            d2 = jx2 * hnx + jy2 * hny + jz2 * hnz
            tx0, ty0, tz0 = jx0 - d0 * hnx, jy0 - d0 * hny, jz0 - d0 * hnz
            tx1, ty1, tz1 = jx1 - d1 * hnx, jy1 - d1 * hny, jz1 - d1 * hnz
            tx2, ty2, tz2 = jx2 - d2 * hnx, jy2 - d2 * hny, jz2 - d2 * hnz
            cdt = ceq * dt
            A[0, 0] += cdt * (tx0 * jx0 + ty0 * jy0 + tz0 * jz0)
            A[0, 1] += cdt * (tx1 * jx0 + ty1 * jy0 + tz1 * jz0)
            A[0, 2] += cdt * (tx2 * jx0 + ty2 * jy0 + tz2 * jz0)
            A[1, 0] += cdt * (tx0 * jx1 + ty0 * jy1 + tz0 * jz1)
            A[1, 1] += cdt * (tx1 * jx1 + ty1 * jy1 + tz1 * jz1)
            A[1, 2] += cdt * (tx2 * jx1 + ty2 * jy1 + tz2 * jz1)
            A[2, 0] += cdt * (tx0 * jx2 + ty0 * jy2 + tz0 * jz2)
            A[2, 1] += cdt * (tx1 * jx2 + ty1 * jy2 + tz1 * jz2)
            A[2, 2] += cdt * (tx2 * jx2 + ty2 * jy2 + tz2 * jz2)
            # gripper-driven tangential velocity, in H coords
            wvx = R[0, 0] * wgx + R[1, 0] * wgy + R[2, 0] * wgz
            wvy = R[0, 1] * wgx + R[1, 1] * wgy + R[2, 1] * wgz
            wvz = R[0, 2] * wgx + R[1, 2] * wgy + R[2, 2] * wgz
            wn = wvx * hnx + wvy * hny + wvz * hnz
            wtx = wvx - wn * hnx
            wtz = wvz - wn * hnz
            gen[0] -= ceq * wtx
            gen[1] -= ceq * wtz
            gen[2] -= ceq * (rrz * wtx - rrx * wtz)

        # normal load per finger; left finger sits at +y
        normal_force[0] = grip_force + 0.5 * f_y
        normal_force[1] = grip_force - 0.5 * f_y
        if normal_force[0] < 0.0:
            normal_force[0] = 0.0
        if normal_force[1] < 0.0:
            normal_force[1] = 0.0

        # mass matrix at the body origin with offset inertia centre
        jcx = icz
        jcz = -icx
        A[0, 0] += mass + dt * damp_lin
        A[1, 1] += mass + dt * damp_lin
        A[0, 2] += mass * jcx
        A[2, 0] += mass * jcx
        A[1, 2] += mass * jcz
        A[2, 1] += mass * jcz
        A[2, 2] += inertia_c + mass * (icx * icx + icz * icz) + dt * damp_rot
        rhs[0] = mass * (v[0] + jcx * v[2]) + dt * gen[0]
        rhs[1] = mass * (v[1] + jcz * v[2]) + dt * gen[1]
        rhs[2] = (mass * (jcx * v[0] + jcz * v[1])
                  + (inertia_c + mass * (icx * icx + icz * icz)) * v[2] + dt * gen[2])
        _solve3(A, rhs, vnew)
        v[0] = vnew[0]
        v[1] = vnew[1]
        v[2] = vnew[2]
        if not (abs(v[0]) < SPEED_LIMIT and abs(v[1]) < SPEED_LIMIT
                and abs(v[2]) * 100.0 < SPEED_LIMIT):
            return DIVERGED
        q[0] += dt * v[0]
        q[1] += dt * v[1]
        q[2] += dt * v[2]

        n_contact = update_pins(q, anchors, bases, outline, normal_force, k_t, mu, tex_amp,
                                tex_wavelength, defl, active, slip_acc)
        if n_contact == 0:
            return DROPPED
    return OK
