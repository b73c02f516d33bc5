"""Screw algebra: skew operators, adjoints, frame transforms, and the
body-frame vs inertial time-derivative rules.

Conventions used across the package:

* every 6-vector stacks (linear, angular),
* a link carries its rotation matrix R (body -> inertial), the position r of
  the body origin (inertial origin -> body origin, expressed in *body*
  coordinates) and the body-frame twist z = (v, w) with v = dr/dt taken in
  the body frame,
* the kinematic rates are Rdot = R @ skew(w) and rdot = v.

Screw/Twist/Wrench values carry an explicit frame tag; mixing frames in
arithmetic raises when frame checks are enabled (the default).  Hot paths
work on raw numpy arrays and bypass the tagged wrappers.
"""

import numpy as np
import scipy.linalg

FRAME_CHECKS = True

EYE3 = np.eye(3)
EYE6 = np.eye(6)


class Screw:
    """6-component screw (linear, angular) tagged with its expression frame."""

    label = "screw"

    def __init__(self, linear, angular, frame="inertial"):
        self.linear = np.asarray(linear, dtype=float).reshape(3)
        self.angular = np.asarray(angular, dtype=float).reshape(3)
        self.frame = frame
        if not (np.all(np.isfinite(self.linear)) and np.all(np.isfinite(self.angular))):
            raise ValueError("non-finite %s components" % self.label)

    @classmethod
    def from_array(cls, a, frame="inertial"):
        a = np.asarray(a, dtype=float).reshape(6)
        return cls(a[:3], a[3:], frame)

    def as_array(self):
        return np.concatenate([self.linear, self.angular])

    def _check(self, other):
        if FRAME_CHECKS and self.frame != other.frame:
            raise ValueError(
                "frame mismatch: %r vs %r" % (self.frame, other.frame))

    def __add__(self, other):
        self._check(other)
        return type(self)(self.linear + other.linear,
                          self.angular + other.angular, self.frame)

    def __sub__(self, other):
        self._check(other)
        return type(self)(self.linear - other.linear,
                          self.angular - other.angular, self.frame)

    def __repr__(self):
        return "%s(linear=%s, angular=%s, frame=%r)" % (
            type(self).__name__, self.linear, self.angular, self.frame)


class Twist(Screw):
    """Velocity screw: (linear velocity, angular velocity)."""

    label = "twist"


class Wrench(Screw):
    """Force screw: (force, torque)."""

    label = "wrench"


def skew(v):
    """3x3 cross-product matrix: skew(v) @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def unskew(m):
    """Inverse of skew for an antisymmetric 3x3 matrix."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def twist_adjoint(z):
    """6x6 adjoint of a twist z = (v, w): [[skew(w), skew(v)], [0, skew(w)]].

    Applied to a screw it produces the frame-motion correction term in screw
    time derivatives.
    """
    z = np.asarray(z, dtype=float).reshape(6)
    sw = skew(z[3:])
    ad = np.zeros((6, 6))
    ad[:3, :3] = sw
    ad[:3, 3:] = skew(z[:3])
    ad[3:, 3:] = sw
    return ad


def check_rotation(R, tol=1e-6):
    """Validate that R is a proper rotation matrix within tol."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError("rotation must be 3x3, got %s" % (R.shape,))
    if np.max(np.abs(R.T @ R - EYE3)) > tol:
        raise ValueError("matrix is not orthonormal within %g" % tol)
    if np.linalg.det(R) < 0.0:
        raise ValueError("matrix is a reflection, not a rotation")
    return R


def adjoint_transform(R, r0):
    """6x6 screw transform from a body frame to the inertial frame.

    R is the body->inertial rotation and r0 the body-frame origin expressed
    in inertial coordinates:  X = [[R, skew(r0) R], [0, R]].
    """
    R = check_rotation(R)
    r0 = np.asarray(r0, dtype=float).reshape(3)
    X = np.zeros((6, 6))
    X[:3, :3] = R
    X[:3, 3:] = skew(r0) @ R
    X[3:, 3:] = R
    return X


def transform_dot(X, z):
    """Formal inertial time derivative of an adjoint transform: -X @ Ad_z.

    z is the twist of the moving frame expressed in that frame.  This is the
    derivative along the transform's own constant-twist flow (see
    transform_flow); it is what the acceleration-level constraint algebra
    uses.
    """
    return -np.asarray(X, dtype=float) @ twist_adjoint(z)


def transform_flow(X0, z, t):
    """Exact flow of Xdot = -X Ad_z with constant z: X(t) = X0 expm(-Ad_z t)."""
    return np.asarray(X0, dtype=float) @ scipy.linalg.expm(-twist_adjoint(z) * t)


def inertial_derivative_vec(r, v_body, w):
    """Inertial rate of a body-frame vector r, expressed in the body frame.

    v_body is the apparent (body-frame) rate and w the body angular velocity:
    result = v_body + w x r.
    """
    return np.asarray(v_body, float) + np.cross(w, r)


def inertial_second_derivative(r, v, w, vdot, wdot):
    """Body-frame expression of the second inertial derivative of r.

    result = vdot - skew(r) wdot + 2 w x v + w x (w x r); the classical
    transport theorem applied twice.
    """
    r = np.asarray(r, float)
    w = np.asarray(w, float)
    return (np.asarray(vdot, float) - np.cross(r, wdot)
            + 2.0 * np.cross(w, v) + np.cross(w, np.cross(w, r)))


# ---------------------------------------------------------------------------
# rotation utilities


def rotx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def roty(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle):
    """Rotation about a (not necessarily unit) axis by angle (radians)."""
    axis = np.asarray(axis, dtype=float).reshape(3)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    k = skew(axis / n)
    return EYE3 + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def polar_orthonormalize(R):
    """Closest rotation matrix to R (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(R, dtype=float))
    Q = u @ vt
    if np.linalg.det(Q) < 0.0:
        u[:, -1] = -u[:, -1]
        Q = u @ vt
    return Q


def rotation_log(R):
    """Rotation vector (axis * angle) of R via the matrix logarithm."""
    R = np.asarray(R, dtype=float)
    c = 0.5 * (np.trace(R) - 1.0)
    c = min(1.0, max(-1.0, c))
    angle = np.arccos(c)
    if angle < 1e-12:
        return unskew(0.5 * (R - R.T))
    if np.pi - angle < 1e-6:
        # near pi: extract axis from the symmetric part
        B = 0.5 * (R + EYE3)
        axis = np.sqrt(np.maximum(np.diag(B), 0.0))
        # fix signs from off-diagonals
        i = int(np.argmax(axis))
        for j in range(3):
            if j != i and B[i, j] < 0.0:
                axis[j] = -axis[j]
        axis /= np.linalg.norm(axis)
        return angle * axis
    return angle / (2.0 * np.sin(angle)) * unskew(R - R.T)


def quaternion_from_rotation(R):
    """Unit quaternion (w, x, y, z) of R with a canonical sign.

    w >= 0, ties broken so the first nonzero component is positive; this
    keeps trajectory output deterministic.
    """
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s,
                          (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
        elif i == 1:
            s = np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2]) * 2.0
            q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s,
                          0.25 * s, (R[1, 2] + R[2, 1]) / s])
        else:
            s = np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2]) * 2.0
            q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                          (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    q = q / np.linalg.norm(q)
    for c in q:
        if c > 0.0:
            break
        if c < 0.0:
            q = -q
            break
    return q


def rotation_from_quaternion(q):
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = np.asarray(q, dtype=float).reshape(4)
    n = w * w + x * x + y * y + z * z
    if n == 0.0:
        raise ValueError("zero quaternion")
    s = 2.0 / n
    return np.array([
        [1.0 - s * (y * y + z * z), s * (x * y - w * z), s * (x * z + w * y)],
        [s * (x * y + w * z), 1.0 - s * (x * x + z * z), s * (y * z - w * x)],
        [s * (x * z - w * y), s * (y * z + w * x), 1.0 - s * (x * x + y * y)],
    ])
