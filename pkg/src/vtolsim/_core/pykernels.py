"""Pure-Python implementation of the hot numeric kernels.

Mirrors ``_kernels.pyx`` operation for operation (same arithmetic, same
order) so the two backends agree to rounding error.  Scalar math on plain
floats is used throughout; per-call numpy overhead would dominate at the
sizes involved (3-vectors, 3x8 matrices, 250 Hz loops).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

_HALF_PI_SQ = (math.pi / 2.0) ** 2


def rot_exp(phi):
    """Rotation matrix exp(skew(phi)) via the Rodrigues formula.

    Uses series expansions of sin(t)/t and (1-cos(t))/t^2 below t^2 = 1e-8
    so the small-angle limit is smooth.
    """
    x, y, z = float(phi[0]), float(phi[1]), float(phi[2])
    t2 = x * x + y * y + z * z
    if t2 < 1e-8:
        a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0)
        b = 0.5 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0))
    else:
        t = math.sqrt(t2)
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
    out = np.empty((3, 3))
    out[0, 0] = 1.0 - b * (y * y + z * z)
    out[0, 1] = b * x * y - a * z
    out[0, 2] = b * x * z + a * y
    out[1, 0] = b * x * y + a * z
    out[1, 1] = 1.0 - b * (x * x + z * z)
    out[1, 2] = b * y * z - a * x
    out[2, 0] = b * x * z - a * y
    out[2, 1] = b * y * z + a * x
    out[2, 2] = 1.0 - b * (x * x + y * y)
    return out


def error_quat(rd, r):
    """Constrained error quaternion (q0 > 0) of rd^T r as [q0, qx, qy, qz].

    Shepperd extraction on the relative rotation; at a pi rotation (q0 = 0)
    the sign of the axis is fixed by its largest-magnitude component and q0
    is nudged positive so downstream control sees a consistent direction.
    """
    m00 = rd[0, 0] * r[0, 0] + rd[1, 0] * r[1, 0] + rd[2, 0] * r[2, 0]
    m01 = rd[0, 0] * r[0, 1] + rd[1, 0] * r[1, 1] + rd[2, 0] * r[2, 1]
    m02 = rd[0, 0] * r[0, 2] + rd[1, 0] * r[1, 2] + rd[2, 0] * r[2, 2]
    m10 = rd[0, 1] * r[0, 0] + rd[1, 1] * r[1, 0] + rd[2, 1] * r[2, 0]
    m11 = rd[0, 1] * r[0, 1] + rd[1, 1] * r[1, 1] + rd[2, 1] * r[2, 1]
    m12 = rd[0, 1] * r[0, 2] + rd[1, 1] * r[1, 2] + rd[2, 1] * r[2, 2]
    m20 = rd[0, 2] * r[0, 0] + rd[1, 2] * r[1, 0] + rd[2, 2] * r[2, 0]
    m21 = rd[0, 2] * r[0, 1] + rd[1, 2] * r[1, 1] + rd[2, 2] * r[2, 1]
    m22 = rd[0, 2] * r[0, 2] + rd[1, 2] * r[1, 2] + rd[2, 2] * r[2, 2]

    tr = m00 + m11 + m22
    if tr >= m00 and tr >= m11 and tr >= m22:
        s = math.sqrt(max(tr + 1.0, 0.0)) * 2.0
        q0 = 0.25 * s
        qx = (m21 - m12) / s
        qy = (m02 - m20) / s
        qz = (m10 - m01) / s
    elif m00 >= m11 and m00 >= m22:
        s = math.sqrt(max(1.0 + m00 - m11 - m22, 0.0)) * 2.0
        q0 = (m21 - m12) / s
        qx = 0.25 * s
        qy = (m01 + m10) / s
        qz = (m02 + m20) / s
    elif m11 >= m22:
        s = math.sqrt(max(1.0 + m11 - m00 - m22, 0.0)) * 2.0
        q0 = (m02 - m20) / s
        qx = (m01 + m10) / s
        qy = 0.25 * s
        qz = (m12 + m21) / s
    else:
        s = math.sqrt(max(1.0 + m22 - m00 - m11, 0.0)) * 2.0
        q0 = (m10 - m01) / s
        qx = (m02 + m20) / s
        qy = (m12 + m21) / s
        qz = 0.25 * s

    if q0 < 0.0:
        q0, qx, qy, qz = -q0, -qx, -qy, -qz
    if q0 < 1e-10:
        # pi-rotation tie: orient the axis by its dominant component
        ax, ay, az = abs(qx), abs(qy), abs(qz)
        dom = qx if ax >= ay and ax >= az else (qy if ay >= az else qz)
        if dom < 0.0:
            qx, qy, qz = -qx, -qy, -qz
        q0 = 1e-10
    n = math.sqrt(q0 * q0 + qx * qx + qy * qy + qz * qz)
    return np.array([q0 / n, qx / n, qy / n, qz / n])


def regressor(vi, u_x, u_z, pars):
    """3x8 force-model basis at incident velocity vi and throttles (u_x, u_z).

    pars = (rho, s_ref, mass, k1, k2, d_prop, eps_airspeed, angle_mode).
    Columns follow the parameter order thrust-x, thrust-z, side, drag 0..2,
    lift 0..1; the product with the parameter vector is specific force.
    """
    rho, s_ref, mass, k1, k2, d, eps_v, angle_mode = (
        float(pars[0]), float(pars[1]), float(pars[2]), float(pars[3]),
        float(pars[4]), float(pars[5]), float(pars[6]), float(pars[7]))
    vx, vy, vz = float(vi[0]), float(vi[1]), float(vi[2])
    ux = min(max(float(u_x), 0.0), 1.0)
    uz = min(max(float(u_z), 0.0), 1.0)

    v = math.sqrt(vx * vx + vy * vy + vz * vz)
    if v > eps_v:
        alpha = math.atan2(vz, vx)
        if angle_mode >= 0.5:
            beta_bar = math.atan2(vy, vx)
        else:
            beta_bar = math.atan2(vy, vz)
    else:
        alpha = 0.0
        beta_bar = 0.0

    g_side = (uz ** k1) * (v ** (2.0 - k1)) * (d ** (2.0 + k1)) \
        * (_HALF_PI_SQ - alpha * alpha) * (alpha + k2)
    qbar = 0.5 * rho * s_ref * v * v / mass
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta_bar), math.sin(beta_bar)

    out = np.zeros((3, 8))
    out[0, 0] = ux * ux
    out[2, 1] = -uz * uz
    out[0, 2] = -g_side * cb
    out[1, 2] = -g_side * sb
    # drag basis {1, alpha, alpha^2} acting along (-cos a, 0, -sin a)
    dx, dz = -qbar * ca, -qbar * sa
    out[0, 3] = dx
    out[2, 3] = dz
    out[0, 4] = dx * alpha
    out[2, 4] = dz * alpha
    out[0, 5] = dx * alpha * alpha
    out[2, 5] = dz * alpha * alpha
    # lift basis {1, alpha} acting along (sin a, 0, -cos a)
    lx, lz = qbar * sa, -qbar * ca
    out[0, 6] = lx
    out[2, 6] = lz
    out[0, 7] = lx * alpha
    out[2, 7] = lz * alpha
    return out


def _body_force(vx, vy, vz, ux, uz, th, pars):
    """Specific body force Phi(vi, u) . theta, unrolled for the plant loop."""
    rho, s_ref, mass, k1, k2, d, eps_v, angle_mode = pars
    v = math.sqrt(vx * vx + vy * vy + vz * vz)
    if v > eps_v:
        alpha = math.atan2(vz, vx)
        if angle_mode >= 0.5:
            beta_bar = math.atan2(vy, vx)
        else:
            beta_bar = math.atan2(vy, vz)
    else:
        alpha = 0.0
        beta_bar = 0.0
    g_side = (uz ** k1) * (v ** (2.0 - k1)) * (d ** (2.0 + k1)) \
        * (_HALF_PI_SQ - alpha * alpha) * (alpha + k2)
    qbar = 0.5 * rho * s_ref * v * v / mass
    ca, sa = math.cos(alpha), math.sin(alpha)
    cl = th[6] + th[7] * alpha
    cd = th[3] + alpha * (th[4] + th[5] * alpha)
    fx = th[0] * ux * ux - th[2] * g_side * math.cos(beta_bar) \
        + qbar * (cl * sa - cd * ca)
    fy = -th[2] * g_side * math.sin(beta_bar)
    fz = -th[1] * uz * uz + qbar * (-cl * ca - cd * sa)
    return fx, fy, fz


def plant_rk4_step(p, v, rot, omega, u_x, u_z, tau, theta, inertia, inertia_inv,
                   gvec, winds, dt, pars, dist):
    """One fixed-step 4th-order step of the rigid-body plant.

    The attitude is advanced on the rotation group: stage attitudes are
    R0 * exp(skew(phi)) with phi integrated through the inverse
    differential of the exponential map (truncated at the order the
    4th-order scheme needs), so no reorthogonalization is ever required.

    winds is a (3, 3) array of the wind vector at t, t + dt/2, and t + dt.
    dist = (amp_x, amp_y, amp_z, c_p, c_v, ph_x, ph_y, ph_z) parameterizes a
    bounded state-dependent unmodeled force amp_i * sin(c_p*p_i + c_v*v_i + ph_i).
    """
    px, py, pz = float(p[0]), float(p[1]), float(p[2])
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    wx, wy, wz = float(omega[0]), float(omega[1]), float(omega[2])
    ux = min(max(float(u_x), 0.0), 1.0)
    uz = min(max(float(u_z), 0.0), 1.0)
    tx, ty, tz = float(tau[0]), float(tau[1]), float(tau[2])
    gx, gy, gz = float(gvec[0]), float(gvec[1]), float(gvec[2])
    th = tuple(float(x) for x in theta)
    mp = tuple(float(x) for x in pars)
    dax, day, daz, dcp, dcv, dpx, dpy, dpz = (float(x) for x in dist)
    r0 = np.asarray(rot, dtype=float)
    jm = np.asarray(inertia, dtype=float)
    jinv = np.asarray(inertia_inv, dtype=float)

    def deriv(sp, sv, sphi, sw, wind):
        rs = r0 @ rot_exp(sphi)
        rvx = sv[0] - wind[0]
        rvy = sv[1] - wind[1]
        rvz = sv[2] - wind[2]
        vix = rs[0, 0] * rvx + rs[1, 0] * rvy + rs[2, 0] * rvz
        viy = rs[0, 1] * rvx + rs[1, 1] * rvy + rs[2, 1] * rvz
        viz = rs[0, 2] * rvx + rs[1, 2] * rvy + rs[2, 2] * rvz
        fx, fy, fz = _body_force(vix, viy, viz, ux, uz, th, mp)
        if dax != 0.0 or day != 0.0 or daz != 0.0:
            fx += dax * math.sin(dcp * sp[0] + dcv * sv[0] + dpx)
            fy += day * math.sin(dcp * sp[1] + dcv * sv[1] + dpy)
            fz += daz * math.sin(dcp * sp[2] + dcv * sv[2] + dpz)
        ax = gx + rs[0, 0] * fx + rs[0, 1] * fy + rs[0, 2] * fz
        ay = gy + rs[1, 0] * fx + rs[1, 1] * fy + rs[1, 2] * fz
        az = gz + rs[2, 0] * fx + rs[2, 1] * fy + rs[2, 2] * fz
        # body-rate (right-translation) correction series:
        # phi_dot = dexpinv(-phi) w  ~=  w + phi x w / 2 + phi x (phi x w) / 12
        cx = sphi[1] * sw[2] - sphi[2] * sw[1]
        cy = sphi[2] * sw[0] - sphi[0] * sw[2]
        cz = sphi[0] * sw[1] - sphi[1] * sw[0]
        ccx = sphi[1] * cz - sphi[2] * cy
        ccy = sphi[2] * cx - sphi[0] * cz
        ccz = sphi[0] * cy - sphi[1] * cx
        phidx = sw[0] + 0.5 * cx + ccx / 12.0
        phidy = sw[1] + 0.5 * cy + ccy / 12.0
        phidz = sw[2] + 0.5 * cz + ccz / 12.0
        # J wdot = (J w) x w + tau
        jwx = jm[0, 0] * sw[0] + jm[0, 1] * sw[1] + jm[0, 2] * sw[2]
        jwy = jm[1, 0] * sw[0] + jm[1, 1] * sw[1] + jm[1, 2] * sw[2]
        jwz = jm[2, 0] * sw[0] + jm[2, 1] * sw[1] + jm[2, 2] * sw[2]
        mx = jwy * sw[2] - jwz * sw[1] + tx
        my = jwz * sw[0] - jwx * sw[2] + ty
        mz = jwx * sw[1] - jwy * sw[0] + tz
        wdx = jinv[0, 0] * mx + jinv[0, 1] * my + jinv[0, 2] * mz
        wdy = jinv[1, 0] * mx + jinv[1, 1] * my + jinv[1, 2] * mz
        wdz = jinv[2, 0] * mx + jinv[2, 1] * my + jinv[2, 2] * mz
        return ((sv[0], sv[1], sv[2]), (ax, ay, az),
                (phidx, phidy, phidz), (wdx, wdy, wdz))

    w0 = (float(winds[0, 0]), float(winds[0, 1]), float(winds[0, 2]))
    wh = (float(winds[1, 0]), float(winds[1, 1]), float(winds[1, 2]))
    w1 = (float(winds[2, 0]), float(winds[2, 1]), float(winds[2, 2]))
    h = float(dt)

    y_p = (px, py, pz)
    y_v = (vx, vy, vz)
    y_phi = (0.0, 0.0, 0.0)
    y_w = (wx, wy, wz)

    k1 = deriv(y_p, y_v, y_phi, y_w, w0)
    s = 0.5 * h
    k2 = deriv(tuple(a + s * b for a, b in zip(y_p, k1[0])),
               tuple(a + s * b for a, b in zip(y_v, k1[1])),
               tuple(s * b for b in k1[2]),
               tuple(a + s * b for a, b in zip(y_w, k1[3])), wh)
    k3 = deriv(tuple(a + s * b for a, b in zip(y_p, k2[0])),
               tuple(a + s * b for a, b in zip(y_v, k2[1])),
               tuple(s * b for b in k2[2]),
               tuple(a + s * b for a, b in zip(y_w, k2[3])), wh)
    k4 = deriv(tuple(a + h * b for a, b in zip(y_p, k3[0])),
               tuple(a + h * b for a, b in zip(y_v, k3[1])),
               tuple(h * b for b in k3[2]),
               tuple(a + h * b for a, b in zip(y_w, k3[3])), w1)

    c = h / 6.0
    p_new = np.array([y_p[i] + c * (k1[0][i] + 2.0 * k2[0][i] + 2.0 * k3[0][i] + k4[0][i])
                      for i in range(3)])
    v_new = np.array([y_v[i] + c * (k1[1][i] + 2.0 * k2[1][i] + 2.0 * k3[1][i] + k4[1][i])
                      for i in range(3)])
    phi = [c * (k1[2][i] + 2.0 * k2[2][i] + 2.0 * k3[2][i] + k4[2][i]) for i in range(3)]
    w_new = np.array([y_w[i] + c * (k1[3][i] + 2.0 * k2[3][i] + 2.0 * k3[3][i] + k4[3][i])
                      for i in range(3)])
    r_new = r0 @ rot_exp(phi)
    return p_new, v_new, r_new, w_new
