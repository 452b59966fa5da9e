// io.hpp: CSV/JSON rendering and file output. Doubles are printed with 17
// significant digits so every file round-trips bit-exactly.

#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "tdas/dde.hpp"
#include "tdas/fluctuations.hpp"
#include "tdas/stability.hpp"

namespace tdas {

[[nodiscard]] std::string format_double(double v);

// Header: t_us,x1,x2,jx,jy,jz,g,photon_number
[[nodiscard]] std::string trajectory_csv(const Trajectory& traj);

// Zero-phase low-pass of jz and photon number, header t_us,jz,photon_number.
[[nodiscard]] std::string filtered_csv(const Trajectory& traj, double cutoff);

// Header: k,tau_us,re_lambda1_radus,im_lambda1_radus,residual,converged
[[nodiscard]] std::string scan_csv(const StabilitySurface& surface);

// Small-delay estimate per grid point, header
// k,tau_us,re_lambda_approx_radus,im_lambda_approx_radus,residual
[[nodiscard]] std::string approx_csv(const LinearizedSystem& base, std::span<const double> k_grid,
                                     std::span<const double> tau_grid);

// Header: g_over_gc,phase,k,tau_us,fluct,converged
[[nodiscard]] std::string sweep_csv(std::span<const SweepPoint> points);

// Writes `text` to `path`, creating parent directories. Throws Error on I/O failure.
void write_file(const std::filesystem::path& path, const std::string& text);

} // namespace tdas
