# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop for world transport: periodic multilinear interpolation
plus one RK4 substep over the ensemble. Mirrors worldsim._advect_py exactly,
including the order of floating-point operations, so both backends produce
bit-identical trajectories."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

ctypedef cnp.uint8_t u8


cdef inline double _interp1(const double[::1] f, long n,
                            double lo, double dx, double q) noexcept nogil:
    cdef double s = (q - lo) / dx - 0.5
    cdef double fl = floor(s)
    cdef double w = s - fl
    cdef long i0 = (<long> fl) % n
    if i0 < 0:
        i0 += n
    cdef long i1 = i0 + 1
    if i1 == n:
        i1 = 0
    return (1.0 - w) * f[i0] + w * f[i1]


cdef inline double _interp2(const double[:, ::1] f, long nx, long ny,
                            double lox, double loy, double dxx, double dyy,
                            double qx, double qy) noexcept nogil:
    cdef double sx = (qx - lox) / dxx - 0.5
    cdef double sy = (qy - loy) / dyy - 0.5
    cdef double flx = floor(sx)
    cdef double fly = floor(sy)
    cdef double wx = sx - flx
    cdef double wy = sy - fly
    cdef long i0 = (<long> flx) % nx
    cdef long j0 = (<long> fly) % ny
    if i0 < 0:
        i0 += nx
    if j0 < 0:
        j0 += ny
    cdef long i1 = i0 + 1
    cdef long j1 = j0 + 1
    if i1 == nx:
        i1 = 0
    if j1 == ny:
        j1 = 0
    # corner order (0,0), (0,1), (1,0), (1,1); weight product order x then y
    cdef double acc = ((1.0 - wx) * (1.0 - wy)) * f[i0, j0]
    acc = acc + ((1.0 - wx) * wy) * f[i0, j1]
    acc = acc + (wx * (1.0 - wy)) * f[i1, j0]
    acc = acc + (wx * wy) * f[i1, j1]
    return acc


def rk4_substep_1d(double[:, ::1] pos, u8[::1] alive,
                   const double[::1] vx0, const double[::1] vx1,
                   const double[::1] rho0, const double[::1] rho1,
                   double s0, double sh, double s1,
                   double h, double lo, double dx, double eps):
    """One RK4 substep on a 1-D grid; mutates pos and alive in place."""
    cdef Py_ssize_t m, mm = pos.shape[0]
    cdef long n = rho0.shape[0]
    cdef double half_h = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double q, ra, rb, rho, va, vb, k1, k2, k3, k4
    with nogil:
        for m in range(mm):
            if alive[m] == 0:
                continue
            q = pos[m, 0]
            ra = _interp1(rho0, n, lo, dx, q)
            rb = _interp1(rho1, n, lo, dx, q)
            rho = ra + s0 * (rb - ra)
            if rho < eps:
                alive[m] = 0
                continue
            va = _interp1(vx0, n, lo, dx, q)
            vb = _interp1(vx1, n, lo, dx, q)
            k1 = va + s0 * (vb - va)
            va = _interp1(vx0, n, lo, dx, q + half_h * k1)
            vb = _interp1(vx1, n, lo, dx, q + half_h * k1)
            k2 = va + sh * (vb - va)
            va = _interp1(vx0, n, lo, dx, q + half_h * k2)
            vb = _interp1(vx1, n, lo, dx, q + half_h * k2)
            k3 = va + sh * (vb - va)
            va = _interp1(vx0, n, lo, dx, q + h * k3)
            vb = _interp1(vx1, n, lo, dx, q + h * k3)
            k4 = va + s1 * (vb - va)
            pos[m, 0] = q + h6 * (((k1 + 2.0 * k2) + 2.0 * k3) + k4)


def rk4_substep_2d(double[:, ::1] pos, u8[::1] alive,
                   const double[:, ::1] vx0, const double[:, ::1] vy0,
                   const double[:, ::1] vx1, const double[:, ::1] vy1,
                   const double[:, ::1] rho0, const double[:, ::1] rho1,
                   double s0, double sh, double s1, double h,
                   double lox, double loy, double dxx, double dyy, double eps):
    """One RK4 substep on a 2-D grid; mutates pos and alive in place."""
    cdef Py_ssize_t m, mm = pos.shape[0]
    cdef long nx = rho0.shape[0]
    cdef long ny = rho0.shape[1]
    cdef double half_h = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double qx, qy, ra, rb, rho, va, vb
    cdef double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y, px, py
    with nogil:
        for m in range(mm):
            if alive[m] == 0:
                continue
            qx = pos[m, 0]
            qy = pos[m, 1]
            ra = _interp2(rho0, nx, ny, lox, loy, dxx, dyy, qx, qy)
            rb = _interp2(rho1, nx, ny, lox, loy, dxx, dyy, qx, qy)
            rho = ra + s0 * (rb - ra)
            if rho < eps:
                alive[m] = 0
                continue
            va = _interp2(vx0, nx, ny, lox, loy, dxx, dyy, qx, qy)
            vb = _interp2(vx1, nx, ny, lox, loy, dxx, dyy, qx, qy)
            k1x = va + s0 * (vb - va)
            va = _interp2(vy0, nx, ny, lox, loy, dxx, dyy, qx, qy)
            vb = _interp2(vy1, nx, ny, lox, loy, dxx, dyy, qx, qy)
            k1y = va + s0 * (vb - va)

            px = qx + half_h * k1x
            py = qy + half_h * k1y
            va = _interp2(vx0, nx, ny, lox, loy, dxx, dyy, px, py)
            vb = _interp2(vx1, nx, ny, lox, loy, dxx, dyy, px, py)
            k2x = va + sh * (vb - va)
            va = _interp2(vy0, nx, ny, lox, loy, dxx, dyy, px, py)
            vb = _interp2(vy1, nx, ny, lox, loy, dxx, dyy, px, py)
            k2y = va + sh * (vb - va)

            px = qx + half_h * k2x
            py = qy + half_h * k2y
            va = _interp2(vx0, nx, ny, lox, loy, dxx, dyy, px, py)
            vb = _interp2(vx1, nx, ny, lox, loy, dxx, dyy, px, py)
            k3x = va + sh * (vb - va)
            va = _interp2(vy0, nx, ny, lox, loy, dxx, dyy, px, py)
            vb = _interp2(vy1, nx, ny, lox, loy, dxx, dyy, px, py)
            k3y = va + sh * (vb - va)

            px = qx + h * k3x
            py = qy + h * k3y
            va = _interp2(vx0, nx, ny, lox, loy, dxx, dyy, px, py)
            vb = _interp2(vx1, nx, ny, lox, loy, dxx, dyy, px, py)
            k4x = va + s1 * (vb - va)
            va = _interp2(vy0, nx, ny, lox, loy, dxx, dyy, px, py)
            vb = _interp2(vy1, nx, ny, lox, loy, dxx, dyy, px, py)
            k4y = va + s1 * (vb - va)

            pos[m, 0] = qx + h6 * (((k1x + 2.0 * k2x) + 2.0 * k3x) + k4x)
            pos[m, 1] = qy + h6 * (((k1y + 2.0 * k2y) + 2.0 * k3y) + k4y)
