import numpy as np
import scipy.linalg


#: 0.95 quantile of the chi-square distribution for 1..4 degrees of freedom.
CHI2INV95 = {1: 3.8415, 2: 5.9915, 3: 7.8147, 4: 9.4877}


class KalmanFilter:
    """Constant velocity Kalman filter over ``(cx, cy, a, h)`` box
    measurements, stepped once per second.

    The state is the 8-vector ``(cx, cy, a, h, vx, vy, va, vh)``. Position
    and velocity noise scale with the box height; the aspect ratio noise
    scales with the aspect ratio itself, since vessel boxes are much wider
    than they are tall.

    :param std_position: Position standard deviation per unit of height.
    :param std_velocity: Velocity standard deviation per unit of height.
    :param std_aspect: Aspect standard deviation per unit of aspect.
    :param dt: Step length in seconds.
    """

    def __init__(
        self, std_position=1.0 / 20, std_velocity=1.0 / 20, std_aspect=0.1, dt=1.0
    ):
        ndim = 4

        self._motion_mat = np.eye(2 * ndim)
        for i in range(ndim):
            self._motion_mat[i, ndim + i] = dt
        self._update_mat = np.eye(ndim, 2 * ndim)

        self._std_position = std_position
        self._std_velocity = std_velocity
        self._std_aspect = std_aspect

    def _position_std(self, mean, scale=1.0):
        h = mean[3]
        return [
            scale * self._std_position * h,
            scale * self._std_position * h,
            scale * self._std_aspect * mean[2],
            scale * self._std_position * h,
        ]

    def _velocity_std(self, mean, scale=1.0):
        h = mean[3]
        return [
            scale * self._std_velocity * h,
            scale * self._std_velocity * h,
            scale * 0.1 * self._std_aspect * mean[2],
            scale * self._std_velocity * h,
        ]

    def initiate(self, measurement):
        """Creates a track state from an unassociated measurement."""

        measurement = np.asarray(measurement, dtype=float)
        mean = np.r_[measurement, np.zeros_like(measurement)]
        std = self._position_std(measurement, 2.0) + self._velocity_std(
            measurement, 10.0
        )
        covariance = np.diag(np.square(std))
        return mean, covariance

    def predict(self, mean, covariance):
        """Runs the prediction step one ``dt`` ahead."""

        std = self._position_std(mean) + self._velocity_std(mean)
        motion_cov = np.diag(np.square(std))

        mean = self._motion_mat @ mean
        covariance = (
            np.linalg.multi_dot((self._motion_mat, covariance, self._motion_mat.T))
            + motion_cov
        )
        return mean, covariance

    def project(self, mean, covariance):
        """Projects the state distribution to measurement space."""

        innovation_cov = np.diag(np.square(self._position_std(mean)))
        mean = self._update_mat @ mean
        covariance = np.linalg.multi_dot(
            (self._update_mat, covariance, self._update_mat.T)
        )
        return mean, covariance + innovation_cov

    def update(self, mean, covariance, measurement):
        """Runs the correction step with an associated measurement."""

        projected_mean, projected_cov = self.project(mean, covariance)

        chol_factor, lower = scipy.linalg.cho_factor(
            projected_cov, lower=True, check_finite=False
        )
        kalman_gain = scipy.linalg.cho_solve(
            (chol_factor, lower),
            (covariance @ self._update_mat.T).T,
            check_finite=False,
        ).T
        innovation = np.asarray(measurement, dtype=float) - projected_mean

        new_mean = mean + innovation @ kalman_gain.T
        new_covariance = covariance - np.linalg.multi_dot(
            (kalman_gain, projected_cov, kalman_gain.T)
        )
        return new_mean, new_covariance

    def gating_distance(self, mean, covariance, measurements):
        """Squared Mahalanobis distance between the state distribution and
        each row of ``measurements`` (``(cx, cy, a, h)`` rows)."""

        mean, covariance = self.project(mean, covariance)
        measurements = np.atleast_2d(np.asarray(measurements, dtype=float))

        cholesky_factor = np.linalg.cholesky(covariance)
        d = measurements - mean
        z = scipy.linalg.solve_triangular(
            cholesky_factor, d.T, lower=True, check_finite=False, overwrite_b=True
        )
        return np.sum(z * z, axis=0)
