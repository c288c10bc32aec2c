"""Independent reference implementations used to cross-check the package.

Everything here evaluates the published force equations directly, term by
term, with its own flow-angle math; nothing is shared with the package's
regressor code path.
"""

import numpy as np


def direct_body_force(vi, u_x, u_z, theta, rho, s_ref, mass, k1, k2, d,
                      eps_v=0.5, angle_mode=0):
    """Specific body force evaluated straight from the model equations:
    thrust square laws, the rotor side-force cubic, and the rotated
    lift/drag polar."""
    vi = np.asarray(vi, dtype=float)
    u_x = np.clip(u_x, 0.0, 1.0)
    u_z = np.clip(u_z, 0.0, 1.0)
    v = np.linalg.norm(vi)
    if v > eps_v:
        alpha = np.arctan2(vi[2], vi[0])
        beta_bar = np.arctan2(vi[1], vi[0]) if angle_mode else np.arctan2(vi[1], vi[2])
    else:
        alpha, beta_bar = 0.0, 0.0

    t_x = theta[0] * u_x**2
    t_z = theta[1] * u_z**2
    g_basis = u_z**k1 * v**(2.0 - k1) * d**(2.0 + k1) \
        * ((np.pi / 2.0)**2 - alpha**2) * (alpha + k2)
    f_s = theta[2] * g_basis
    f_thrust = np.array([t_x - f_s * np.cos(beta_bar),
                         -f_s * np.sin(beta_bar),
                         -t_z])

    c_l = theta[6] + theta[7] * alpha
    c_d = theta[3] + theta[4] * alpha + theta[5] * alpha**2
    q = 0.5 * rho * s_ref * v**2 / mass
    f_aero = q * np.array([c_l * np.sin(alpha) - c_d * np.cos(alpha),
                           0.0,
                           -c_l * np.cos(alpha) - c_d * np.sin(alpha)])
    return f_thrust + f_aero, f_thrust, f_aero


def rodrigues(axis, angle):
    """Rotation about a unit axis, classic closed form."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def random_rotation(rng):
    return rodrigues(rng.normal(size=3) + 1e-12, rng.uniform(-np.pi, np.pi))
