"""Numba kernels for the Yee leapfrog update with compact CPML storage.

Field arrays carry one ghost layer on the low side and one overflow layer on
the high side of every axis: array index ``I`` holds grid index ``i = I - 1``.
E updates read ``H[I] - H[I-1]``; H updates read ``E[I+1] - E[I]``. Boundary
conditions are applied by filling ghosts (see ``simulation.py``) and by
zeroing tangential E on PEC planes.

The bulk kernels are branch-free so the inner loop vectorizes. CPML
corrections are applied afterwards, only over the absorber slabs; because the
update is linear in the curl this is equivalent to the fused form.

Every output cell depends only on values that are read-only within the half
step, so ``prange`` ordering cannot change the result.
"""

import numba
from numba import njit, prange

# Prefer OpenMP, then the portable workqueue; skips probing an outdated TBB.
if numba.config.THREADING_LAYER == "default":
    try:
        import numba.np.ufunc.omppool  # noqa: F401
        numba.config.THREADING_LAYER = "omp"
    except ImportError:
        numba.config.THREADING_LAYER = "workqueue"


@njit(parallel=True, cache=True)
def bulk_h(ex, ey, ez, hx, hy, hz, sc, kx, ky, kz, nx, ny, nz):
    # kx, ky, kz hold 1/kappa at half-integer positions (1 outside the PML).
    for I in prange(1, nx + 1):
        ikx = kx[I]
        for J in range(1, ny + 1):
            iky = ky[J]
            for K in range(1, nz + 1):
                ikz = kz[K]
                hx[I, J, K] -= sc * ((ez[I, J + 1, K] - ez[I, J, K]) * iky
                                     - (ey[I, J, K + 1] - ey[I, J, K]) * ikz)
                hy[I, J, K] -= sc * ((ex[I, J, K + 1] - ex[I, J, K]) * ikz
                                     - (ez[I + 1, J, K] - ez[I, J, K]) * ikx)
                hz[I, J, K] -= sc * ((ey[I + 1, J, K] - ey[I, J, K]) * ikx
                                     - (ex[I, J + 1, K] - ex[I, J, K]) * iky)


@njit(parallel=True, cache=True)
def bulk_e(ex, ey, ez, hx, hy, hz, cex, cey, cez, kx, ky, kz, nx, ny, nz):
    # ce* = courant / eps at each E component position.
    for I in prange(1, nx + 1):
        ikx = kx[I]
        for J in range(1, ny + 1):
            iky = ky[J]
            for K in range(1, nz + 1):
                ikz = kz[K]
                ex[I, J, K] += cex[I, J, K] * ((hz[I, J, K] - hz[I, J - 1, K]) * iky
                                               - (hy[I, J, K] - hy[I, J, K - 1]) * ikz)
                ey[I, J, K] += cey[I, J, K] * ((hx[I, J, K] - hx[I, J, K - 1]) * ikz
                                               - (hz[I, J, K] - hz[I - 1, J, K]) * ikx)
                ez[I, J, K] += cez[I, J, K] * ((hy[I, J, K] - hy[I - 1, J, K]) * ikx
                                               - (hx[I, J, K] - hx[I, J - 1, K]) * iky)


# CPML slab corrections. ``idx`` lists array indices along the absorbing axis
# that lie inside the layer; psi arrays are compact along that axis.

@njit(parallel=True, cache=True)
def pml_h_x(ey, ez, hy, hz, sc, idx, b, c, psi_hyx, psi_hzx, ny, nz):
    for p in prange(idx.size):
        I = idx[p]
        for J in range(1, ny + 1):
            for K in range(1, nz + 1):
                psi_hyx[p, J, K] = b[p] * psi_hyx[p, J, K] + c[p] * (ez[I + 1, J, K] - ez[I, J, K])
                psi_hzx[p, J, K] = b[p] * psi_hzx[p, J, K] + c[p] * (ey[I + 1, J, K] - ey[I, J, K])
                hy[I, J, K] += sc * psi_hyx[p, J, K]
                hz[I, J, K] -= sc * psi_hzx[p, J, K]


@njit(parallel=True, cache=True)
def pml_h_y(ex, ez, hx, hz, sc, idx, b, c, psi_hxy, psi_hzy, nx, nz):
    for I in prange(1, nx + 1):
        for p in range(idx.size):
            J = idx[p]
            for K in range(1, nz + 1):
                psi_hxy[I, p, K] = b[p] * psi_hxy[I, p, K] + c[p] * (ez[I, J + 1, K] - ez[I, J, K])
                psi_hzy[I, p, K] = b[p] * psi_hzy[I, p, K] + c[p] * (ex[I, J + 1, K] - ex[I, J, K])
                hx[I, J, K] -= sc * psi_hxy[I, p, K]
                hz[I, J, K] += sc * psi_hzy[I, p, K]


@njit(parallel=True, cache=True)
def pml_h_z(ex, ey, hx, hy, sc, idx, b, c, psi_hxz, psi_hyz, nx, ny):
    for I in prange(1, nx + 1):
        for J in range(1, ny + 1):
            for p in range(idx.size):
                K = idx[p]
                psi_hxz[I, J, p] = b[p] * psi_hxz[I, J, p] + c[p] * (ey[I, J, K + 1] - ey[I, J, K])
                psi_hyz[I, J, p] = b[p] * psi_hyz[I, J, p] + c[p] * (ex[I, J, K + 1] - ex[I, J, K])
                hx[I, J, K] += sc * psi_hxz[I, J, p]
                hy[I, J, K] -= sc * psi_hyz[I, J, p]


@njit(parallel=True, cache=True)
def pml_e_x(ey, ez, hy, hz, cey, cez, idx, b, c, psi_eyx, psi_ezx, ny, nz):
    for p in prange(idx.size):
        I = idx[p]
        for J in range(1, ny + 1):
            for K in range(1, nz + 1):
                psi_eyx[p, J, K] = b[p] * psi_eyx[p, J, K] + c[p] * (hz[I, J, K] - hz[I - 1, J, K])
                psi_ezx[p, J, K] = b[p] * psi_ezx[p, J, K] + c[p] * (hy[I, J, K] - hy[I - 1, J, K])
                ey[I, J, K] -= cey[I, J, K] * psi_eyx[p, J, K]
                ez[I, J, K] += cez[I, J, K] * psi_ezx[p, J, K]


@njit(parallel=True, cache=True)
def pml_e_y(ex, ez, hx, hz, cex, cez, idx, b, c, psi_exy, psi_ezy, nx, nz):
    for I in prange(1, nx + 1):
        for p in range(idx.size):
            J = idx[p]
            for K in range(1, nz + 1):
                psi_exy[I, p, K] = b[p] * psi_exy[I, p, K] + c[p] * (hz[I, J, K] - hz[I, J - 1, K])
                psi_ezy[I, p, K] = b[p] * psi_ezy[I, p, K] + c[p] * (hx[I, J, K] - hx[I, J - 1, K])
                ex[I, J, K] += cex[I, J, K] * psi_exy[I, p, K]
                ez[I, J, K] -= cez[I, J, K] * psi_ezy[I, p, K]


@njit(parallel=True, cache=True)
def pml_e_z(ex, ey, hx, hy, cex, cey, idx, b, c, psi_exz, psi_eyz, nx, ny):
    for I in prange(1, nx + 1):
        for J in range(1, ny + 1):
            for p in range(idx.size):
                K = idx[p]
                psi_exz[I, J, p] = b[p] * psi_exz[I, J, p] + c[p] * (hy[I, J, K] - hy[I, J, K - 1])
                psi_eyz[I, J, p] = b[p] * psi_eyz[I, J, p] + c[p] * (hx[I, J, K] - hx[I, J, K - 1])
                ex[I, J, K] -= cex[I, J, K] * psi_exz[I, J, p]
                ey[I, J, K] += cey[I, J, K] * psi_eyz[I, J, p]


def set_threads(n):
    if n is not None and n > 0:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
