# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementation of the hot numeric kernels.

Operation-for-operation mirror of ``pykernels.py`` (same arithmetic, same
order); see that module for semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, fabs, pow, sin, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double _HALF_PI_SQ = (3.14159265358979323846 / 2.0) ** 2


cdef void _rot_exp(double x, double y, double z, double* out) noexcept nogil:
    cdef double t2 = x * x + y * y + z * z
    cdef double a, b, t
    if t2 < 1e-8:
        a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0)
        b = 0.5 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0))
    else:
        t = sqrt(t2)
        a = sin(t) / t
        b = (1.0 - cos(t)) / t2
    out[0] = 1.0 - b * (y * y + z * z)
    out[1] = b * x * y - a * z
    out[2] = b * x * z + a * y
    out[3] = b * x * y + a * z
    out[4] = 1.0 - b * (x * x + z * z)
    out[5] = b * y * z - a * x
    out[6] = b * x * z - a * y
    out[7] = b * y * z + a * x
    out[8] = 1.0 - b * (x * x + y * y)


def rot_exp(phi):
    """Rotation matrix exp(skew(phi)) via the Rodrigues formula."""
    cdef double[::1] p = np.ascontiguousarray(phi, dtype=np.float64)
    out = np.empty((3, 3))
    cdef double[:, ::1] o = out
    _rot_exp(p[0], p[1], p[2], &o[0, 0])
    return out


def error_quat(rd, r):
    """Constrained error quaternion (q0 > 0) of rd^T r as [q0, qx, qy, qz]."""
    cdef double[:, ::1] a = np.ascontiguousarray(rd, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(r, dtype=np.float64)
    cdef double m00, m01, m02, m10, m11, m12, m20, m21, m22
    cdef double tr, s, q0, qx, qy, qz, ax, ay, az, dom, n

    m00 = a[0, 0] * b[0, 0] + a[1, 0] * b[1, 0] + a[2, 0] * b[2, 0]
    m01 = a[0, 0] * b[0, 1] + a[1, 0] * b[1, 1] + a[2, 0] * b[2, 1]
    m02 = a[0, 0] * b[0, 2] + a[1, 0] * b[1, 2] + a[2, 0] * b[2, 2]
    m10 = a[0, 1] * b[0, 0] + a[1, 1] * b[1, 0] + a[2, 1] * b[2, 0]
    m11 = a[0, 1] * b[0, 1] + a[1, 1] * b[1, 1] + a[2, 1] * b[2, 1]
    m12 = a[0, 1] * b[0, 2] + a[1, 1] * b[1, 2] + a[2, 1] * b[2, 2]
    m20 = a[0, 2] * b[0, 0] + a[1, 2] * b[1, 0] + a[2, 2] * b[2, 0]
    m21 = a[0, 2] * b[0, 1] + a[1, 2] * b[1, 1] + a[2, 2] * b[2, 1]
    m22 = a[0, 2] * b[0, 2] + a[1, 2] * b[1, 2] + a[2, 2] * b[2, 2]

    tr = m00 + m11 + m22
    if tr >= m00 and tr >= m11 and tr >= m22:
        s = tr + 1.0
        s = sqrt(s if s > 0.0 else 0.0) * 2.0
        q0 = 0.25 * s
        qx = (m21 - m12) / s
        qy = (m02 - m20) / s
        qz = (m10 - m01) / s
    elif m00 >= m11 and m00 >= m22:
        s = 1.0 + m00 - m11 - m22
        s = sqrt(s if s > 0.0 else 0.0) * 2.0
        q0 = (m21 - m12) / s
        qx = 0.25 * s
        qy = (m01 + m10) / s
        qz = (m02 + m20) / s
    elif m11 >= m22:
        s = 1.0 + m11 - m00 - m22
        s = sqrt(s if s > 0.0 else 0.0) * 2.0
        q0 = (m02 - m20) / s
        qx = (m01 + m10) / s
        qy = 0.25 * s
        qz = (m12 + m21) / s
    else:
        s = 1.0 + m22 - m00 - m11
        s = sqrt(s if s > 0.0 else 0.0) * 2.0
        q0 = (m10 - m01) / s
        qx = (m02 + m20) / s
        qy = (m12 + m21) / s
        qz = 0.25 * s

    if q0 < 0.0:
        q0 = -q0
        qx = -qx
        qy = -qy
        qz = -qz
    if q0 < 1e-10:
        ax = fabs(qx)
        ay = fabs(qy)
        az = fabs(qz)
        if ax >= ay and ax >= az:
            dom = qx
        elif ay >= az:
            dom = qy
        else:
            dom = qz
        if dom < 0.0:
            qx = -qx
            qy = -qy
            qz = -qz
        q0 = 1e-10
    n = sqrt(q0 * q0 + qx * qx + qy * qy + qz * qz)
    return np.array([q0 / n, qx / n, qy / n, qz / n])


cdef void _regressor(double vx, double vy, double vz, double ux, double uz,
                     const double* pars, double* out) noexcept nogil:
    cdef double rho = pars[0]
    cdef double s_ref = pars[1]
    cdef double mass = pars[2]
    cdef double k1 = pars[3]
    cdef double k2 = pars[4]
    cdef double d = pars[5]
    cdef double eps_v = pars[6]
    cdef double angle_mode = pars[7]
    cdef double v, alpha, beta_bar, g_side, qbar, ca, sa, cb, sb, dx, dz, lx, lz
    cdef int i

    if ux < 0.0:
        ux = 0.0
    elif ux > 1.0:
        ux = 1.0
    if uz < 0.0:
        uz = 0.0
    elif uz > 1.0:
        uz = 1.0

    v = sqrt(vx * vx + vy * vy + vz * vz)
    if v > eps_v:
        alpha = atan2(vz, vx)
        if angle_mode >= 0.5:
            beta_bar = atan2(vy, vx)
        else:
            beta_bar = atan2(vy, vz)
    else:
        alpha = 0.0
        beta_bar = 0.0

    g_side = pow(uz, k1) * pow(v, 2.0 - k1) * pow(d, 2.0 + k1) \
        * (_HALF_PI_SQ - alpha * alpha) * (alpha + k2)
    qbar = 0.5 * rho * s_ref * v * v / mass
    ca = cos(alpha)
    sa = sin(alpha)
    cb = cos(beta_bar)
    sb = sin(beta_bar)

    for i in range(24):
        out[i] = 0.0
    out[0] = ux * ux            # row 0, col 0
    out[17] = -uz * uz          # row 2, col 1
    out[2] = -g_side * cb       # row 0, col 2
    out[10] = -g_side * sb      # row 1, col 2
    dx = -qbar * ca
    dz = -qbar * sa
    out[3] = dx
    out[19] = dz
    out[4] = dx * alpha
    out[20] = dz * alpha
    out[5] = dx * alpha * alpha
    out[21] = dz * alpha * alpha
    lx = qbar * sa
    lz = -qbar * ca
    out[6] = lx
    out[22] = lz
    out[7] = lx * alpha
    out[23] = lz * alpha


def regressor(vi, u_x, u_z, pars):
    """3x8 force-model basis; see the fallback module for the column map."""
    cdef double[::1] v = np.ascontiguousarray(vi, dtype=np.float64)
    cdef double[::1] p = np.ascontiguousarray(pars, dtype=np.float64)
    out = np.empty((3, 8))
    cdef double[:, ::1] o = out
    _regressor(v[0], v[1], v[2], u_x, u_z, &p[0], &o[0, 0])
    return out


cdef void _body_force(double vx, double vy, double vz, double ux, double uz,
                      const double* th, const double* pars,
                      double* f) noexcept nogil:
    cdef double rho = pars[0]
    cdef double s_ref = pars[1]
    cdef double mass = pars[2]
    cdef double k1 = pars[3]
    cdef double k2 = pars[4]
    cdef double d = pars[5]
    cdef double eps_v = pars[6]
    cdef double angle_mode = pars[7]
    cdef double v, alpha, beta_bar, g_side, qbar, ca, sa, cl, cd

    v = sqrt(vx * vx + vy * vy + vz * vz)
    if v > eps_v:
        alpha = atan2(vz, vx)
        if angle_mode >= 0.5:
            beta_bar = atan2(vy, vx)
        else:
            beta_bar = atan2(vy, vz)
    else:
        alpha = 0.0
        beta_bar = 0.0
    g_side = pow(uz, k1) * pow(v, 2.0 - k1) * pow(d, 2.0 + k1) \
        * (_HALF_PI_SQ - alpha * alpha) * (alpha + k2)
    qbar = 0.5 * rho * s_ref * v * v / mass
    ca = cos(alpha)
    sa = sin(alpha)
    cl = th[6] + th[7] * alpha
    cd = th[3] + alpha * (th[4] + th[5] * alpha)
    f[0] = th[0] * ux * ux - th[2] * g_side * cos(beta_bar) \
        + qbar * (cl * sa - cd * ca)
    f[1] = -th[2] * g_side * sin(beta_bar)
    f[2] = -th[1] * uz * uz + qbar * (-cl * ca - cd * sa)


cdef struct Deriv:
    double p[3]
    double v[3]
    double phi[3]
    double w[3]


cdef void _deriv(const double* sp, const double* sv, const double* sphi,
                 const double* sw, const double* wind, const double* r0,
                 double ux, double uz, double tx, double ty, double tz,
                 const double* th, const double* jm, const double* jinv,
                 double gx, double gy, double gz, const double* pars,
                 const double* dist, Deriv* out) noexcept nogil:
    cdef double rexp[9]
    cdef double rs[9]
    cdef double rvx, rvy, rvz, vix, viy, viz
    cdef double f[3]
    cdef double cx, cy, cz, ccx, ccy, ccz
    cdef double jwx, jwy, jwz, mx, my, mz
    cdef int i, j

    _rot_exp(sphi[0], sphi[1], sphi[2], rexp)
    for i in range(3):
        for j in range(3):
            rs[3 * i + j] = r0[3 * i] * rexp[j] + r0[3 * i + 1] * rexp[3 + j] \
                + r0[3 * i + 2] * rexp[6 + j]

    rvx = sv[0] - wind[0]
    rvy = sv[1] - wind[1]
    rvz = sv[2] - wind[2]
    vix = rs[0] * rvx + rs[3] * rvy + rs[6] * rvz
    viy = rs[1] * rvx + rs[4] * rvy + rs[7] * rvz
    viz = rs[2] * rvx + rs[5] * rvy + rs[8] * rvz
    _body_force(vix, viy, viz, ux, uz, th, pars, f)
    if dist[0] != 0.0 or dist[1] != 0.0 or dist[2] != 0.0:
        f[0] += dist[0] * sin(dist[3] * sp[0] + dist[4] * sv[0] + dist[5])
        f[1] += dist[1] * sin(dist[3] * sp[1] + dist[4] * sv[1] + dist[6])
        f[2] += dist[2] * sin(dist[3] * sp[2] + dist[4] * sv[2] + dist[7])

    out.p[0] = sv[0]
    out.p[1] = sv[1]
    out.p[2] = sv[2]
    out.v[0] = gx + rs[0] * f[0] + rs[1] * f[1] + rs[2] * f[2]
    out.v[1] = gy + rs[3] * f[0] + rs[4] * f[1] + rs[5] * f[2]
    out.v[2] = gz + rs[6] * f[0] + rs[7] * f[1] + rs[8] * f[2]

    cx = sphi[1] * sw[2] - sphi[2] * sw[1]
    cy = sphi[2] * sw[0] - sphi[0] * sw[2]
    cz = sphi[0] * sw[1] - sphi[1] * sw[0]
    ccx = sphi[1] * cz - sphi[2] * cy
    ccy = sphi[2] * cx - sphi[0] * cz
    ccz = sphi[0] * cy - sphi[1] * cx
    out.phi[0] = sw[0] + 0.5 * cx + ccx / 12.0
    out.phi[1] = sw[1] + 0.5 * cy + ccy / 12.0
    out.phi[2] = sw[2] + 0.5 * cz + ccz / 12.0

    jwx = jm[0] * sw[0] + jm[1] * sw[1] + jm[2] * sw[2]
    jwy = jm[3] * sw[0] + jm[4] * sw[1] + jm[5] * sw[2]
    jwz = jm[6] * sw[0] + jm[7] * sw[1] + jm[8] * sw[2]
    mx = jwy * sw[2] - jwz * sw[1] + tx
    my = jwz * sw[0] - jwx * sw[2] + ty
    mz = jwx * sw[1] - jwy * sw[0] + tz
    out.w[0] = jinv[0] * mx + jinv[1] * my + jinv[2] * mz
    out.w[1] = jinv[3] * mx + jinv[4] * my + jinv[5] * mz
    out.w[2] = jinv[6] * mx + jinv[7] * my + jinv[8] * mz


def plant_rk4_step(p, v, rot, omega, u_x, u_z, tau, theta, inertia,
                   inertia_inv, gvec, winds, dt, pars, dist):
    """One fixed-step 4th-order step of the rigid-body plant.

    Same group-preserving scheme as the fallback: stage attitudes are
    R0 * exp(skew(phi)) with phi integrated through the truncated inverse
    differential of the exponential map.
    """
    cdef double[::1] p_ = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] v_ = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[:, ::1] r_ = np.ascontiguousarray(rot, dtype=np.float64)
    cdef double[::1] w_ = np.ascontiguousarray(omega, dtype=np.float64)
    cdef double[::1] tau_ = np.ascontiguousarray(tau, dtype=np.float64)
    cdef double[::1] th_ = np.ascontiguousarray(theta, dtype=np.float64)
    cdef double[:, ::1] jm_ = np.ascontiguousarray(inertia, dtype=np.float64)
    cdef double[:, ::1] ji_ = np.ascontiguousarray(inertia_inv, dtype=np.float64)
    cdef double[::1] g_ = np.ascontiguousarray(gvec, dtype=np.float64)
    cdef double[:, ::1] wd_ = np.ascontiguousarray(winds, dtype=np.float64)
    cdef double[::1] pr_ = np.ascontiguousarray(pars, dtype=np.float64)
    cdef double[::1] ds_ = np.ascontiguousarray(dist, dtype=np.float64)

    cdef double ux = u_x
    cdef double uz = u_z
    cdef double h = dt
    cdef double s, c
    cdef int i

    if ux < 0.0:
        ux = 0.0
    elif ux > 1.0:
        ux = 1.0
    if uz < 0.0:
        uz = 0.0
    elif uz > 1.0:
        uz = 1.0

    cdef Deriv k1, k2, k3, k4
    cdef double yp[3]
    cdef double yv[3]
    cdef double yphi[3]
    cdef double yw[3]
    cdef double sp[3]
    cdef double sv[3]
    cdef double sphi[3]
    cdef double sw[3]
    cdef double phi_f[3]
    cdef double rexp[9]

    for i in range(3):
        yp[i] = p_[i]
        yv[i] = v_[i]
        yphi[i] = 0.0
        yw[i] = w_[i]

    _deriv(yp, yv, yphi, yw, &wd_[0, 0], &r_[0, 0], ux, uz,
           tau_[0], tau_[1], tau_[2], &th_[0], &jm_[0, 0], &ji_[0, 0],
           g_[0], g_[1], g_[2], &pr_[0], &ds_[0], &k1)
    s = 0.5 * h
    for i in range(3):
        sp[i] = yp[i] + s * k1.p[i]
        sv[i] = yv[i] + s * k1.v[i]
        sphi[i] = s * k1.phi[i]
        sw[i] = yw[i] + s * k1.w[i]
    _deriv(sp, sv, sphi, sw, &wd_[1, 0], &r_[0, 0], ux, uz,
           tau_[0], tau_[1], tau_[2], &th_[0], &jm_[0, 0], &ji_[0, 0],
           g_[0], g_[1], g_[2], &pr_[0], &ds_[0], &k2)
    for i in range(3):
        sp[i] = yp[i] + s * k2.p[i]
        sv[i] = yv[i] + s * k2.v[i]
        sphi[i] = s * k2.phi[i]
        sw[i] = yw[i] + s * k2.w[i]
    _deriv(sp, sv, sphi, sw, &wd_[1, 0], &r_[0, 0], ux, uz,
           tau_[0], tau_[1], tau_[2], &th_[0], &jm_[0, 0], &ji_[0, 0],
           g_[0], g_[1], g_[2], &pr_[0], &ds_[0], &k3)
    for i in range(3):
        sp[i] = yp[i] + h * k3.p[i]
        sv[i] = yv[i] + h * k3.v[i]
        sphi[i] = h * k3.phi[i]
        sw[i] = yw[i] + h * k3.w[i]
    _deriv(sp, sv, sphi, sw, &wd_[2, 0], &r_[0, 0], ux, uz,
           tau_[0], tau_[1], tau_[2], &th_[0], &jm_[0, 0], &ji_[0, 0],
           g_[0], g_[1], g_[2], &pr_[0], &ds_[0], &k4)

    c = h / 6.0
    p_new = np.empty(3)
    v_new = np.empty(3)
    w_new = np.empty(3)
    r_new = np.empty((3, 3))
    cdef double[::1] pn = p_new
    cdef double[::1] vn = v_new
    cdef double[::1] wn = w_new
    cdef double[:, ::1] rn = r_new
    cdef int j
    for i in range(3):
        pn[i] = yp[i] + c * (k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i])
        vn[i] = yv[i] + c * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i])
        phi_f[i] = c * (k1.phi[i] + 2.0 * k2.phi[i] + 2.0 * k3.phi[i] + k4.phi[i])
        wn[i] = yw[i] + c * (k1.w[i] + 2.0 * k2.w[i] + 2.0 * k3.w[i] + k4.w[i])
    _rot_exp(phi_f[0], phi_f[1], phi_f[2], rexp)
    for i in range(3):
        for j in range(3):
            rn[i, j] = r_[i, 0] * rexp[3 * 0 + j] + r_[i, 1] * rexp[3 * 1 + j] \
                + r_[i, 2] * rexp[3 * 2 + j]
    return p_new, v_new, r_new, w_new
