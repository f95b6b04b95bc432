"""
    vesfuse.geo
    ~~~~~~~~~~~

    Geodetic and projective primitives: the direct and inverse geodesic
    problems on WGS-84 (Vincenty's series solution), a spherical Mercator
    projection relative to an origin, and the pinhole projection from the
    camera-aligned world frame to pixels.
"""

import logging
import math

import numpy as np

from vesfuse.exc import BehindCameraError, InvalidArgumentError, OutOfDomainError
from vesfuse.model import GeoPoint, PixelPoint, WorldPoint
from vesfuse.utility import finite

logger = logging.getLogger(__name__)

#: WGS-84 semi-major axis (metres) and flattening.
WGS84_A = 6378137.0
WGS84_F = 1 / 298.257223563
WGS84_B = WGS84_A * (1 - WGS84_F)

#: Sphere radius used by the Mercator projection.
MERCATOR_RADIUS = 6378137.0

#: Latitudes beyond this margin are outside the Mercator domain.
MERCATOR_MAX_LAT = 85.05

_MAX_ITERATIONS = 200
_TOLERANCE = 1e-14


def _series_coefficients(cos2_alpha):
    u_sq = cos2_alpha * (WGS84_A ** 2 - WGS84_B ** 2) / WGS84_B ** 2
    big_a = 1 + u_sq / 16384 * (4096 + u_sq * (-768 + u_sq * (320 - 175 * u_sq)))
    big_b = u_sq / 1024 * (256 + u_sq * (-128 + u_sq * (74 - 47 * u_sq)))
    return big_a, big_b


def _delta_sigma(big_b, sin_sigma, cos_sigma, cos_2sigma_m):
    return (
        big_b
        * sin_sigma
        * (
            cos_2sigma_m
            + big_b
            / 4
            * (
                cos_sigma * (-1 + 2 * cos_2sigma_m ** 2)
                - big_b
                / 6
                * cos_2sigma_m
                * (-3 + 4 * sin_sigma ** 2)
                * (-3 + 4 * cos_2sigma_m ** 2)
            )
        )
    )


def forward_geodetic(origin, course, distance):
    """Solves the direct geodesic problem: the point reached by travelling
    ``distance`` metres from ``origin`` along the geodesic that starts with
    azimuth ``course`` (degrees clockwise from north).

    :param origin: A :class:`~vesfuse.model.GeoPoint`.
    :param course: Initial azimuth in degrees, normalized modulo 360.
    :param distance: Metres, non-negative.
    """

    if not finite(course, distance):
        raise InvalidArgumentError("Course and distance must be finite")

    if distance < 0:
        raise InvalidArgumentError(f"Negative distance {distance}")

    if distance == 0:
        return origin

    alpha1 = math.radians(course % 360.0)
    sin_alpha1, cos_alpha1 = math.sin(alpha1), math.cos(alpha1)

    tan_u1 = (1 - WGS84_F) * math.tan(math.radians(origin.lat))
    cos_u1 = 1 / math.sqrt(1 + tan_u1 ** 2)
    sin_u1 = tan_u1 * cos_u1

    sigma1 = math.atan2(tan_u1, cos_alpha1)
    sin_alpha = cos_u1 * sin_alpha1
    cos2_alpha = 1 - sin_alpha ** 2
    big_a, big_b = _series_coefficients(cos2_alpha)

    sigma = distance / (WGS84_B * big_a)

    for _ in range(_MAX_ITERATIONS):
        cos_2sigma_m = math.cos(2 * sigma1 + sigma)
        sin_sigma, cos_sigma = math.sin(sigma), math.cos(sigma)
        delta = _delta_sigma(big_b, sin_sigma, cos_sigma, cos_2sigma_m)
        previous = sigma
        sigma = distance / (WGS84_B * big_a) + delta

        if abs(sigma - previous) < _TOLERANCE:
            break

    cos_2sigma_m = math.cos(2 * sigma1 + sigma)
    sin_sigma, cos_sigma = math.sin(sigma), math.cos(sigma)

    tmp = sin_u1 * sin_sigma - cos_u1 * cos_sigma * cos_alpha1
    lat2 = math.atan2(
        sin_u1 * cos_sigma + cos_u1 * sin_sigma * cos_alpha1,
        (1 - WGS84_F) * math.hypot(sin_alpha, tmp),
    )
    lam = math.atan2(
        sin_sigma * sin_alpha1, cos_u1 * cos_sigma - sin_u1 * sin_sigma * cos_alpha1
    )
    c = WGS84_F / 16 * cos2_alpha * (4 + WGS84_F * (4 - 3 * cos2_alpha))
    big_l = lam - (1 - c) * WGS84_F * sin_alpha * (
        sigma
        + c * sin_sigma * (cos_2sigma_m + c * cos_sigma * (-1 + 2 * cos_2sigma_m ** 2))
    )

    return GeoPoint(origin.lon + math.degrees(big_l), math.degrees(lat2))


def inverse_geodetic(a, b):
    """Solves the inverse geodesic problem between two points.

    Returns ``(distance, azimuth)``: the geodesic length in metres and the
    initial azimuth at ``a`` in degrees within [0, 360). Coincident points
    give ``(0.0, 0.0)``.
    """

    if a.lon == b.lon and a.lat == b.lat:
        return 0.0, 0.0

    big_l = math.radians(((b.lon - a.lon) + 180.0) % 360.0 - 180.0)
    u1 = math.atan((1 - WGS84_F) * math.tan(math.radians(a.lat)))
    u2 = math.atan((1 - WGS84_F) * math.tan(math.radians(b.lat)))
    sin_u1, cos_u1 = math.sin(u1), math.cos(u1)
    sin_u2, cos_u2 = math.sin(u2), math.cos(u2)

    lam = big_l

    for _ in range(_MAX_ITERATIONS):
        sin_lam, cos_lam = math.sin(lam), math.cos(lam)
        sin_sigma = math.hypot(
            cos_u2 * sin_lam, cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam
        )

        if sin_sigma == 0:
            return 0.0, 0.0

        cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lam
        sigma = math.atan2(sin_sigma, cos_sigma)
        sin_alpha = cos_u1 * cos_u2 * sin_lam / sin_sigma
        cos2_alpha = 1 - sin_alpha ** 2
        # Equatorial lines have cos2_alpha == 0.
        cos_2sigma_m = 0.0

        if cos2_alpha:
            cos_2sigma_m = cos_sigma - 2 * sin_u1 * sin_u2 / cos2_alpha

        c = WGS84_F / 16 * cos2_alpha * (4 + WGS84_F * (4 - 3 * cos2_alpha))
        previous = lam
        lam = big_l + (1 - c) * WGS84_F * sin_alpha * (
            sigma
            + c
            * sin_sigma
            * (cos_2sigma_m + c * cos_sigma * (-1 + 2 * cos_2sigma_m ** 2))
        )

        if abs(lam - previous) < _TOLERANCE:
            break
    else:
        logger.debug("Inverse geodesic did not converge between %s and %s", a, b)

    big_a, big_b = _series_coefficients(cos2_alpha)
    distance = WGS84_B * big_a * (
        sigma - _delta_sigma(big_b, sin_sigma, cos_sigma, cos_2sigma_m)
    )
    azimuth = math.atan2(
        cos_u2 * math.sin(lam), cos_u1 * sin_u2 - sin_u1 * cos_u2 * math.cos(lam)
    )

    return distance, math.degrees(azimuth) % 360.0


def _check_mercator_domain(p):
    if abs(p.lat) >= MERCATOR_MAX_LAT:
        raise OutOfDomainError(f"Latitude {p.lat} beyond the Mercator margin")


def _mercator_y(lat):
    return math.log(math.tan(math.pi / 4 + math.radians(lat) / 2))


def mercator(p, origin):
    """Spherical Mercator metres of ``p`` relative to ``origin``.

    :returns: ``(east, north)`` in metres.
    """

    _check_mercator_domain(p)
    _check_mercator_domain(origin)

    dlon = ((p.lon - origin.lon) + 180.0) % 360.0 - 180.0
    east = MERCATOR_RADIUS * math.radians(dlon)
    north = MERCATOR_RADIUS * (_mercator_y(p.lat) - _mercator_y(origin.lat))

    return east, north


def inverse_mercator(east, north, origin):
    """Analytic inverse of :func:`mercator`."""

    _check_mercator_domain(origin)

    y = north / MERCATOR_RADIUS + _mercator_y(origin.lat)
    lat = math.degrees(2 * math.atan(math.exp(y)) - math.pi / 2)
    lon = origin.lon + math.degrees(east / MERCATOR_RADIUS)

    return GeoPoint(lon, lat)


def project_to_pixel(w, cam):
    """Pinhole projection ``(1/Z) K_in K_ex [U V W 1]^T``.

    Raises :class:`~vesfuse.exc.BehindCameraError` when the homogeneous depth
    ``Z`` is not positive.
    """

    h = cam.projection @ w.homogeneous()
    z = h[2]

    if not z > 0:
        raise BehindCameraError(f"Point {w} is behind the camera (Z={z})")

    return PixelPoint(float(h[0] / z), float(h[1] / z))


def world_point(p, cam, altitude=0.0):
    """Maps a geodetic position to the camera-aligned world frame.

    ``U`` is the east offset from the camera, ``W`` the north offset and ``V``
    the downward offset, ``cam.height - altitude``, matching image rows that
    grow downwards: the water surface sits at ``V = cam.height`` and projects
    below the principal point.
    """

    east, north = mercator(p, cam.mercator_origin)

    if cam.mercator_origin != cam.camera_geo:
        cam_east, cam_north = mercator(cam.camera_geo, cam.mercator_origin)
        east, north = east - cam_east, north - cam_north

    return WorldPoint(east, cam.height - altitude, north)


def geo_to_pixel(p, cam, altitude=0.0):
    """Projects a geodetic position (at ``altitude`` metres above the water)
    to pixel coordinates."""

    return project_to_pixel(world_point(p, cam, altitude), cam)


def default_intrinsics(image_width, image_height, focal):
    return np.array(
        [
            [focal, 0.0, image_width / 2.0],
            [0.0, focal, image_height / 2.0],
            [0.0, 0.0, 1.0],
        ]
    )
